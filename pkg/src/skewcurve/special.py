"""Closed-form test functions for the time-homogeneous generator.

Everything here is built around

    L f(x) = sigma^2/2 |x| f''(x) + sigma^2/4 (delta - b x) f'(x).

Kummer's M(a, c, z) composed with z = b x / 2 gives eigenfunctions of L.
The harmonic function ``h`` and the gated function ``f_g`` are the two
integral-defined functions used in the sup/inf and non-existence arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from scipy import integrate

from .errors import DomainError, NumericalFailure
from .model import ModelParams

KUMMER_RTOL = 1e-15
KUMMER_MAX_TERMS = 10_000
QUAD_EPSABS = 1e-12

Jet = tuple  # (value, first derivative, second derivative)


@dataclass(frozen=True)
class ScalarFunction:
    """A real function with its first two derivatives.

    ``jet(x)`` returns ``(f, f', f'')``. ``lf``, when present, is a closed
    form for L f supplied by the constructor, used to cross-check
    ``GeneratorL.apply``.
    """

    name: str
    jet: Callable[[float], Jet]
    domain: tuple = (-math.inf, math.inf)
    lf: Optional[Callable[[float], float]] = None

    def __call__(self, x: float) -> float:
        return self.jet(x)[0]

    def derivative(self, x: float, order: int = 1) -> float:
        return self.jet(x)[order]


@dataclass(frozen=True)
class GeneratorL:
    params: ModelParams

    def apply_jet(self, x: float, d1: float, d2: float) -> float:
        sig2 = self.params.sigma**2
        return 0.5 * sig2 * abs(x) * d2 + 0.25 * sig2 * (self.params.delta - self.params.b * x) * d1

    def apply(self, f: ScalarFunction, x: float) -> float:
        _, d1, d2 = f.jet(x)
        return self.apply_jet(x, d1, d2)

    def apply_fd(self, f: Callable[[float], float], x: float, h: float = 1e-5) -> float:
        """L f with centred finite differences of the values of f."""
        fp, f0, fm = f(x + h), f(x), f(x - h)
        return self.apply_jet(x, (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h))


def _check_kummer_b(b: float):
    if b <= 0 and b == math.floor(b):
        raise DomainError(f"Kummer M undefined for b = {b} (nonpositive integer)")


def kummer_terms(a: float, b: float, z: float):
    """Yield the series terms of M(a, b, z) using the term-ratio recurrence."""
    term = 1.0
    n = 0
    while True:
        yield term
        term *= (a + n) / ((b + n) * (n + 1)) * z
        n += 1


def kummer_m(a: float, b: float, z: float) -> float:
    """Confluent hypergeometric M(a, b, z) by direct series summation, z >= 0.

    Summation stops once a term is below ``KUMMER_RTOL`` relative to the
    partial sum and the terms are past their peak; more than
    ``KUMMER_MAX_TERMS`` terms raises.
    """
    _check_kummer_b(b)
    if not z >= 0:
        raise DomainError(f"kummer_m is restricted to z >= 0, got {z}")
    if z == 0:
        return 1.0
    total = 0.0
    for n, term in enumerate(kummer_terms(a, b, z)):
        if n > KUMMER_MAX_TERMS:
            raise NumericalFailure(f"Kummer series did not converge for a={a}, b={b}, z={z}")
        total += term
        if term == 0.0:
            # a is a nonpositive integer: the series is a polynomial
            return total
        decaying = n > -a and abs((a + n) * z) < abs((b + n) * (n + 1))
        if decaying and abs(term) <= KUMMER_RTOL * abs(total):
            return total


def kummer_jet(a: float, b: float, z: float) -> Jet:
    """M and its first two z-derivatives via d/dz M(a,b,z) = a/b M(a+1,b+1,z)."""
    m0 = kummer_m(a, b, z)
    m1 = a / b * kummer_m(a + 1, b + 1, z) if a != 0 else 0.0
    if a == 0 or a == -1:
        m2 = 0.0
    else:
        m2 = a * (a + 1) / (b * (b + 1)) * kummer_m(a + 2, b + 2, z)
    return m0, m1, m2


def eigenfunction(params: ModelParams, alpha: float) -> ScalarFunction:
    """f(x) = M(alpha, delta/2, b x / 2) on x >= 0, with L f = (sigma^2 b alpha / 4) f."""
    if params.b <= 0:
        raise DomainError("Kummer eigenfunctions need b > 0; use f(x) = x when b = 0")
    half_delta = params.delta / 2
    _check_kummer_b(half_delta)
    scale = params.b / 2
    eigenvalue = params.sigma**2 * params.b * alpha / 4

    def jet(x):
        if x < 0:
            raise DomainError(f"eigenfunction is defined on x >= 0, got {x}")
        m0, m1, m2 = kummer_jet(alpha, half_delta, scale * x)
        return m0, scale * m1, scale * scale * m2

    return ScalarFunction(
        f"kummer(alpha={alpha})", jet, (0.0, math.inf), lf=lambda x: eigenvalue * jet(x)[0]
    )


def identity_function() -> ScalarFunction:
    return ScalarFunction("x", lambda x: (x, 1.0, 0.0))


def exp_half_b(params: ModelParams) -> ScalarFunction:
    """f(x) = exp(b x / 2) in closed form."""
    r = params.b / 2

    def jet(x):
        e = math.exp(r * x)
        return e, r * e, r * r * e

    return ScalarFunction(f"exp({r}x)", jet)


def _harmonic_density(u: float, params: ModelParams) -> float:
    return u ** (params.delta / 2) * math.exp(params.b * u / 2)


def _negative_branch(params: ModelParams, x: float) -> Jet:
    """Jet of x -> -int_0^{-x} y^{delta/2} e^{b y/2} dy at x < 0."""
    u = -x
    value, _ = integrate.quad(_harmonic_density, 0.0, u, args=(params,), epsabs=QUAD_EPSABS, epsrel=1e-13)
    dens = _harmonic_density(u, params)
    d2 = -(params.delta / 2 / u + params.b / 2) * dens
    return -value, dens, d2


def harmonic_h(params: ModelParams) -> ScalarFunction:
    """The function vanishing on [0, inf) whose image under L vanishes off 0."""

    def jet(x):
        if x >= 0:
            return 0.0, 0.0, 0.0
        return _negative_branch(params, x)

    return ScalarFunction("h", jet, lf=lambda x: 0.0)


@dataclass(frozen=True)
class Gate:
    """C^1 gate for ``f_g``: zero below 0, x^(delta/2+2) on [0, c/2].

    On [c/2, c] the derivative falls linearly from its value at c/2 to 0, and
    beyond c the gate decays as G / (1 + ((x - c)/c)^2), so g' > 0 on (0, c),
    g' < 0 on (c, inf) and g > 0 on (0, inf).
    """

    delta: float
    c: float

    @property
    def power(self) -> float:
        return self.delta / 2 + 2

    def _knee(self):
        h = self.c / 2
        m = self.power
        return h**m, m * h ** (m - 1)

    @property
    def peak(self) -> float:
        value, slope = self._knee()
        return value + slope * self.c / 4

    def jet(self, x: float):
        """(g, g') at x."""
        c, m = self.c, self.power
        if x <= 0:
            return 0.0, 0.0
        if x <= c / 2:
            return x**m, m * x ** (m - 1)
        if x <= c:
            value, slope = self._knee()
            d = x - c / 2
            return value + 2 * slope / c * (c * d - (x * x - c * c / 4) / 2), slope * (c - x) / (c / 2)
        r = (x - c) / c
        g = self.peak / (1 + r * r)
        return g, -2 * r / c * self.peak / (1 + r * r) ** 2


def f_g(params: ModelParams, c: float) -> ScalarFunction:
    """Strictly increasing C^1 function built from the gate ``Gate(delta, c)``.

    For x < 0 it coincides with ``harmonic_h``; for x >= 0 it is
    int_0^x g(y) y^(-delta/2) e^(b y/2) dy.  ``lf`` is the closed form
    sigma^2/2 x^(1-delta/2) e^(b x/2) g'(x) for x > 0 (0 for x < 0).
    """
    if not c > 0:
        raise DomainError(f"gate location c must be positive, got {c}")
    gate = Gate(params.delta, c)
    half_delta, half_b = params.delta / 2, params.b / 2
    breaks = [c / 2, c]

    def integrand(y):
        return gate.jet(y)[0] * y ** (-half_delta) * math.exp(half_b * y)

    def jet(x):
        if x < 0:
            return _negative_branch(params, x)
        if x == 0:
            return 0.0, 0.0, 0.0
        pts = [p for p in breaks if p < x]
        value, _ = integrate.quad(integrand, 0.0, x, points=pts or None, epsabs=QUAD_EPSABS, epsrel=1e-13, limit=200)
        g, dg = gate.jet(x)
        e = math.exp(half_b * x)
        xp = x ** (-half_delta)
        d1 = g * xp * e
        d2 = (dg - half_delta * g / x + half_b * g) * xp * e
        return value, d1, d2

    def lf(x):
        if x <= 0:
            return 0.0
        return 0.5 * params.sigma**2 * x ** (1 - half_delta) * math.exp(half_b * x) * gate.jet(x)[1]

    return ScalarFunction(f"f_g(c={c})", jet, lf=lf)
