"""Model parameters and the deterministic reflection curve.

The curve (written ``lam2`` throughout, for lambda squared) is restricted to
forms whose signed derivative measure is known in closed form, so criterion
checks can be made segment-exact instead of sampled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ValidationError

MAX_KNOTS = 10**6
CURVE_KINDS = ("constant", "linear", "piecewise", "exp")
_TIME_SLACK = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Diffusion scale, dimension, mean-reversion rate and skewness.

    The SDE is dR = sigma*sqrt(|R|) dW + sigma^2/4 (delta - b R) dt
    + (2p - 1) dl0(R - lam2), with l0 the symmetric local time on the curve.
    """

    sigma: float
    delta: float
    b: float
    p: float

    def __post_init__(self):
        for name in ("sigma", "delta", "b", "p"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValidationError(f"{name} must be a finite real, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.sigma <= 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if self.delta <= 0:
            raise ValidationError(f"delta must be positive, got {self.delta}")
        if self.b < 0:
            raise ValidationError(f"b must be nonnegative, got {self.b}")
        if not 0.0 < self.p < 1.0:
            raise ValidationError(
                f"p must lie in (0,1), got {self.p}; for |2p-1|>1 the equation "
                "has no solution, and p in {0,1} is plain reflection"
            )

    @property
    def skew(self) -> float:
        """Coefficient 2p - 1 of the local-time term, always in (-1, 1)."""
        return 2.0 * self.p - 1.0

    @property
    def skew_sign(self) -> int:
        s = self.skew
        return (s > 0) - (s < 0)


@dataclass(frozen=True)
class SignedMeasureSummary:
    """Jordan decomposition of d lam2 over a half-open interval [start, end)."""

    start: float
    end: float
    positive_mass: float
    negative_mass: float

    @property
    def net(self) -> float:
        return self.positive_mass - self.negative_mass

    @property
    def total_variation(self) -> float:
        return self.positive_mass + self.negative_mass


@dataclass(frozen=True)
class Curve:
    """Nonnegative, continuous, bounded-variation curve on [0, domain_end].

    Build through the classmethods; ``kind`` selects which fields are used:

    * constant: ``value``
    * linear: ``value + slope * t``
    * piecewise: linear interpolation through ``knots`` (first knot at t=0)
    * exp: ``a + (c - a) * exp(-k t)`` (relaxation from c towards a)
    """

    kind: str
    domain_end: float
    value: float = 0.0
    slope: float = 0.0
    knots: tuple = ()
    a: float = 0.0
    c: float = 0.0
    k: float = 0.0

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value: float, domain_end: float) -> "Curve":
        return cls("constant", float(domain_end), value=float(value))

    @classmethod
    def linear(cls, intercept: float, slope: float, domain_end: float) -> "Curve":
        return cls("linear", float(domain_end), value=float(intercept), slope=float(slope))

    @classmethod
    def piecewise(cls, knots: Sequence[tuple[float, float]]) -> "Curve":
        knots = tuple((float(t), float(v)) for t, v in knots)
        if len(knots) < 2:
            raise ValidationError("piecewise curve needs at least two knots")
        return cls("piecewise", knots[-1][0], knots=knots)

    @classmethod
    def exp_relaxation(cls, a: float, c: float, k: float, domain_end: float) -> "Curve":
        return cls("exp", float(domain_end), a=float(a), c=float(c), k=float(k))

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ValidationError(f"unknown curve kind {self.kind!r}")
        if not (math.isfinite(self.domain_end) and self.domain_end > 0):
            raise ValidationError(f"domain_end must be positive, got {self.domain_end}")
        if self.kind == "piecewise":
            self._validate_knots()
            times = np.array([t for t, _ in self.knots])
            values = np.array([v for _, v in self.knots])
            object.__setattr__(self, "_times", times)
            object.__setattr__(self, "_values", values)
            object.__setattr__(self, "_slopes", np.diff(values) / np.diff(times))
        elif self.kind == "exp":
            if not all(math.isfinite(x) for x in (self.a, self.c, self.k)):
                raise ValidationError("exp curve coefficients must be finite")
            if self.k <= 0:
                raise ValidationError(f"exp curve rate k must be positive, got {self.k}")
        # the admitted forms are monotone between knots, so endpoint checks suffice
        lowest = min(self._node_values())
        if not lowest >= 0:
            raise ValidationError(f"curve must be nonnegative on its domain, min is {lowest}")

    def _validate_knots(self):
        if len(self.knots) > MAX_KNOTS:
            raise ValidationError(f"at most {MAX_KNOTS} knots are supported")
        if self.knots[0][0] != 0.0:
            raise ValidationError("first knot must sit at t=0")
        prev = -math.inf
        for t, v in self.knots:
            if not (math.isfinite(t) and math.isfinite(v)):
                raise ValidationError("knots must be finite")
            if t <= prev:
                raise ValidationError("knot times must be strictly increasing")
            prev = t

    def _node_values(self):
        if self.kind == "piecewise":
            return [v for _, v in self.knots]
        return [float(self.evaluate(0.0)), float(self.evaluate(self.domain_end))]

    # -- evaluation -------------------------------------------------------
    @property
    def is_c1(self) -> bool:
        return self.kind in ("constant", "linear", "exp")

    def _check_times(self, t):
        arr = np.asarray(t, dtype=float)
        hi = self.domain_end * (1 + _TIME_SLACK)
        if np.any(~np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > hi):
            raise DomainError(f"time outside curve domain [0, {self.domain_end}]")
        return arr

    def evaluate(self, t):
        """lam2(t); scalar in, float out, array in, array out."""
        arr = self._check_times(t)
        if self.kind == "constant":
            out = np.full_like(arr, self.value)
        elif self.kind == "linear":
            out = self.value + self.slope * arr
        elif self.kind == "piecewise":
            out = np.interp(arr, self._times, self._values)
        else:
            out = self.a + (self.c - self.a) * np.exp(-self.k * arr)
        return float(out) if out.ndim == 0 else out

    def derivative(self, t):
        """Right derivative of lam2 (the left one at domain_end)."""
        arr = self._check_times(t)
        if self.kind == "constant":
            out = np.zeros_like(arr)
        elif self.kind == "linear":
            out = np.full_like(arr, self.slope)
        elif self.kind == "piecewise":
            out = self._slopes[self._segment_index(arr)]
        else:
            out = -self.k * (self.c - self.a) * np.exp(-self.k * arr)
        return float(out) if out.ndim == 0 else out

    def _segment_index(self, t):
        idx = np.searchsorted(self._times, t, side="right") - 1
        return np.clip(idx, 0, len(self._slopes) - 1)

    def segments(self, s: float, t: float):
        """Linear pieces ``(t0, t1, slope)`` covering [s, t]; piecewise-linear kinds only."""
        self._check_interval(s, t, allow_equal=True)
        if self.kind == "exp":
            raise DomainError("exp curve has no linear segments")
        if self.kind in ("constant", "linear"):
            slope = 0.0 if self.kind == "constant" else self.slope
            return [(s, t, slope)]
        lo = int(self._segment_index(np.asarray(s)))
        hi = int(self._segment_index(np.asarray(t)))
        if hi > lo and self._times[hi] >= t:
            hi -= 1
        pieces = []
        for i in range(lo, hi + 1):
            a = max(s, self._times[i])
            b = min(t, self._times[i + 1])
            pieces.append((float(a), float(b), float(self._slopes[i])))
        return pieces

    def _check_interval(self, s, t, allow_equal=False):
        self._check_times([s, t])
        if t < s or (t == s and not allow_equal):
            raise DomainError(f"need s < t, got [{s}, {t})")


def evaluate(curve: Curve, t):
    return curve.evaluate(t)


def jordan_decomposition(curve: Curve, s: float, t: float) -> SignedMeasureSummary:
    """Increasing and decreasing mass of d lam2 on [s, t)."""
    curve._check_interval(s, t)
    if curve.kind == "exp":
        net = curve.evaluate(t) - curve.evaluate(s)
        pos, neg = max(net, 0.0), max(-net, 0.0)
    else:
        incs = [slope * (b - a) for a, b, slope in curve.segments(s, t)]
        pos = math.fsum(x for x in incs if x > 0)
        neg = math.fsum(-x for x in incs if x < 0)
    return SignedMeasureSummary(float(s), float(t), pos, neg)


def slope_bounds(curve: Curve, s: float, t: float) -> tuple[float, float]:
    """Extrema of the a.e. derivative of lam2 over [s, t]."""
    curve._check_interval(s, t, allow_equal=True)
    if curve.kind == "exp":
        ends = (curve.derivative(s), curve.derivative(t))
        return min(ends), max(ends)
    slopes = [slope for a, b, slope in curve.segments(s, t) if b > a or s == t]
    return min(slopes), max(slopes)
