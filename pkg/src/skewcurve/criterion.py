"""Sufficient conditions for pathwise uniqueness and their residual checks.

Verdicts are GUARANTEED or INCONCLUSIVE, never "not unique": every condition
checked here is sufficient only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, PreconditionError, ValidationError
from .model import Curve, ModelParams
from .special import GeneratorL, ScalarFunction, exp_half_b, identity_function

GUARANTEED = "GUARANTEED"
INCONCLUSIVE = "INCONCLUSIVE"

ROUTE_LINEAR = "corollary-linear-f"
ROUTE_EXP = "corollary-exponential-f"
ROUTE_PDE = "general-PDE"
ROUTE_C1 = "c1-residual"

RESIDUAL_TOL = 1e-8
CURVE_ZERO_TOL = 1e-10
CURVE_BAND = 1e-6
GRID_NODES = 50


@dataclass(frozen=True)
class SkewWeight:
    """Three-branch weight: gamma below the curve, alpha above, their mean on it."""

    alpha: float
    gamma: float

    @classmethod
    def canonical(cls, p: float) -> "SkewWeight":
        return cls(1.0 - p, p)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        out = np.where(y > 0, self.alpha, np.where(y < 0, self.gamma, (self.alpha + self.gamma) / 2))
        return float(out) if out.ndim == 0 else out

    def is_canonical(self, p: float) -> bool:
        return self.alpha == 1.0 - p and self.gamma == p


def skew_weight_cancellation(p: float) -> float:
    """alpha*p - gamma*(1-p) for the canonical weight; the local-time coefficient."""
    if not 0.0 < p < 1.0:
        raise ValidationError(f"p must lie in (0,1), got {p}")
    w = SkewWeight.canonical(p)
    return w.alpha * p - w.gamma * (1.0 - p)


@dataclass(frozen=True)
class Violation:
    start: float
    end: float
    margin: float


@dataclass(frozen=True)
class CriterionReport:
    verdict: str
    route: str
    witness: str
    horizon: float
    margin: Optional[float] = None
    violation: Optional[Violation] = None

    @property
    def guaranteed(self) -> bool:
        return self.verdict == GUARANTEED

    def to_text(self) -> str:
        lines = [f"verdict={self.verdict} route={self.route}", f"witness={self.witness}", f"horizon={_fmt(self.horizon)}"]
        if self.margin is not None:
            lines.append(f"margin={_fmt(self.margin)}")
        if self.violation is not None:
            v = self.violation
            lines.append(f"violation_start={_fmt(v.start)}")
            lines.append(f"violation_end={_fmt(v.end)}")
            lines.append(f"violation_margin={_fmt(v.margin)}")
        return "\n".join(lines) + "\n"

    CSV_HEADER = "verdict,route,witness,horizon,margin,violation_start,violation_end,violation_margin"

    def to_csv_row(self) -> str:
        v = self.violation
        cells = [
            self.verdict,
            self.route,
            '"' + self.witness.replace('"', '""') + '"',
            _fmt(self.horizon),
            "" if self.margin is None else _fmt(self.margin),
            "" if v is None else _fmt(v.start),
            "" if v is None else _fmt(v.end),
            "" if v is None else _fmt(v.margin),
        ]
        return ",".join(cells)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# explicit measure inequalities
# ---------------------------------------------------------------------------


def _check_horizon(curve: Curve, horizon: float):
    if not (math.isfinite(horizon) and 0 < horizon <= curve.domain_end):
        raise DomainError(f"horizon {horizon} outside curve domain (0, {curve.domain_end}]")


def _upper_slope_margin(curve: Curve, bound: float, T: float):
    """min over [0,T] of bound - lam2'(t), with the sub-interval where it is negative."""
    if curve.kind != "exp":
        worst = None
        for a, b, slope in curve.segments(0.0, T):
            if b <= a:
                continue
            m = bound - slope
            if worst is None or m < worst[0]:
                worst = (m, a, b)
        m, a, b = worst
        return m, (a, b)
    d0, dT = curve.derivative(0.0), curve.derivative(T)
    m = bound - max(d0, dT)
    if m >= 0:
        return m, None
    # derivative -k(c-a)e^{-kt} is monotone; solve lam2'(t*) = bound
    k, amp = curve.k, curve.k * (curve.a - curve.c)
    t_star = math.log(amp / bound) / k if bound > 0 else math.inf
    if d0 >= dT:
        return m, (0.0, min(max(t_star, 0.0), T))
    return m, (max(min(t_star, T), 0.0), T)


def _lower_drift_margin(params: ModelParams, curve: Curve, T: float):
    """min over [0,T] of lam2'(t) - sigma^2/4 (delta - b lam2(t))."""
    q = params.sigma**2 / 4

    def margin(t, slope):
        return slope - q * (params.delta - params.b * curve.evaluate(t))

    if curve.kind != "exp":
        worst = None
        for a, b, slope in curve.segments(0.0, T):
            if b <= a:
                continue
            # affine in t on a linear segment: extremes sit at the endpoints
            for t in (a, b):
                m = margin(t, slope)
                if worst is None or m < worst[0]:
                    worst = (m, a, b)
        m, a, b = worst
        return m, (a, b)
    m0, mT = margin(0.0, curve.derivative(0.0)), margin(T, curve.derivative(T))
    m = min(m0, mT)
    if m >= 0:
        return m, None
    if m0 < 0 and mT < 0:
        return m, (0.0, T)
    # margin is affine in lam2, and lam2 is monotone: one sign change at t*
    coef = q * params.b - curve.k
    lam_star = (q * params.delta - curve.k * curve.a) / coef
    t_star = -math.log((lam_star - curve.a) / (curve.c - curve.a)) / curve.k
    t_star = min(max(t_star, 0.0), T)
    return m, ((0.0, t_star) if m0 < 0 else (t_star, T))


def check_corollary(params: ModelParams, curve: Curve, horizon: float) -> CriterionReport:
    """Explicit sufficient condition on d lam2 with f(x) = x or f(x) = exp(bx/2).

    p > 1/2: d lam2 <= sigma^2 delta / 4 dt (decreasing parts unconstrained).
    p < 1/2: d lam2 >= sigma^2/4 (delta - b lam2) dt.
    """
    _check_horizon(curve, horizon)
    T = float(horizon)
    if params.p == 0.5:
        return CriterionReport(GUARANTEED, ROUTE_LINEAR, "2p-1=0", T, margin=0.0)
    if params.p > 0.5:
        bound = params.sigma**2 * params.delta / 4
        m, where = _upper_slope_margin(curve, bound, T)
        if params.b > 0:
            route = ROUTE_EXP
            witness = "f(x)=exp(bx/2), shifted; mu+(dt)=nu(dt)=(b/2)(sigma^2 delta/4 dt - dlam2)"
        else:
            route = ROUTE_LINEAR
            witness = "f(x)=x, shifted; mu=0; nu(dt)=sigma^2 delta/4 dt - dlam2"
    else:
        m, where = _lower_drift_margin(params, curve, T)
        route = ROUTE_LINEAR
        witness = "f(x)=x, shifted; mu(dt)=-(sigma^2 b/4)dt; nu(dt)=dlam2-sigma^2/4(delta-b lam2)dt"
    if m >= 0:
        return CriterionReport(GUARANTEED, route, witness, T, margin=m)
    return CriterionReport(INCONCLUSIVE, route, witness, T, margin=m, violation=Violation(where[0], where[1], m))


# ---------------------------------------------------------------------------
# residual of (d_t + L) F against candidate measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    times: np.ndarray
    xs: np.ndarray


def default_grid(params: ModelParams, curve: Curve, horizon: float, nt: int = GRID_NODES, nx: int = GRID_NODES) -> Grid:
    times = np.linspace(0.0, horizon, nt)
    top = 4 * float(np.max(curve.evaluate(times))) + 4 * params.delta / max(params.b, 1.0)
    return Grid(times, np.linspace(0.0, top, nx))


@dataclass
class ResidualField:
    grid: Grid
    drift: np.ndarray  # (d_t + L) F, nan on skipped nodes
    h_drift: np.ndarray  # weight(x - lam2) * drift
    residual: Optional[np.ndarray]
    skipped: list = field(default_factory=list)

    @property
    def max_abs_residual(self) -> float:
        return float(np.nanmax(np.abs(self.residual)))


def pde_residual(
    params: ModelParams,
    curve: Curve,
    weight: SkewWeight,
    f: ScalarFunction,
    form: str,
    grid: Grid,
    mu_density: Optional[Callable[[float], float]] = None,
    nu_density: Optional[Callable[[float], float]] = None,
) -> ResidualField:
    """Evaluate (d_t + L)F on grid nodes off the curve and its residual.

    ``form`` is "shifted" for F = f(x - lam2(t)) - f(0) or "level" for
    F = f(x) - f(lam2(t)).  With densities mu', nu' the residual is
    (d_t + L)F - F mu' - sgn(2p-1) nu'.
    """
    if form not in ("shifted", "level"):
        raise ValidationError(f"form must be 'shifted' or 'level', got {form!r}")
    gen = GeneratorL(params)
    sgn = params.skew_sign
    times, xs = grid.times, grid.xs
    drift = np.full((len(times), len(xs)), np.nan)
    residual = np.full_like(drift, np.nan) if mu_density is not None else None
    skipped = []
    f0 = f(0.0)
    for i, t in enumerate(times):
        lam, dlam = curve.evaluate(t), curve.derivative(t)
        if form == "level":
            f_lam, df_lam, _ = f.jet(lam)
        mu = mu_density(t) if mu_density is not None else 0.0
        nu = nu_density(t) if nu_density is not None else 0.0
        for j, x in enumerate(xs):
            y = x - lam
            if abs(y) < CURVE_BAND:
                skipped.append((float(t), float(x)))
                continue
            if form == "shifted":
                fv, d1, d2 = f.jet(y)
                F, Ft = fv - f0, -d1 * dlam
            else:
                fv, d1, d2 = f.jet(x)
                F, Ft = fv - f_lam, -df_lam * dlam
            drift[i, j] = Ft + gen.apply_jet(x, d1, d2)
            if residual is not None:
                residual[i, j] = drift[i, j] - F * mu - sgn * nu
    ys = xs[None, :] - curve.evaluate(times)[:, None]
    return ResidualField(grid, drift, weight(ys) * drift, residual, skipped)


@dataclass(frozen=True)
class Witness:
    f: ScalarFunction
    form: str
    mu_density: Callable[[float], float]
    nu_density: Callable[[float], float]


def corollary_witness(params: ModelParams, curve: Curve, route: str) -> Witness:
    """The (f, mu, nu) triple behind a corollary verdict."""
    q = params.sigma**2 / 4
    sgn = params.skew_sign
    if route == ROUTE_LINEAR:
        return Witness(
            identity_function(),
            "shifted",
            lambda t: -q * params.b,
            lambda t: sgn * (q * (params.delta - params.b * curve.evaluate(t)) - curve.derivative(t)),
        )
    if route == ROUTE_EXP:
        if params.b <= 0:
            raise DomainError("exponential witness needs b > 0")
        dens = lambda t: params.b / 2 * (q * params.delta - curve.derivative(t))  # noqa: E731
        return Witness(exp_half_b(params), "shifted", dens, dens)
    raise ValidationError(f"no corollary witness for route {route!r}")


def confirm_corollary(params: ModelParams, curve: Curve, report: CriterionReport, grid: Optional[Grid] = None):
    """Residual field of the witness behind ``report`` plus min of nu' on grid times."""
    grid = grid or default_grid(params, curve, report.horizon)
    w = corollary_witness(params, curve, report.route)
    field_ = pde_residual(params, curve, SkewWeight.canonical(params.p), w.f, w.form, grid, w.mu_density, w.nu_density)
    nu_min = min(w.nu_density(t) for t in grid.times)
    return field_, nu_min


# ---------------------------------------------------------------------------
# C^1 curves: residual of the full time-space generator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpaceTimeFunction:
    """F(t, x) with ``jet(t, x) -> (F, dF/dt, dF/dx, d2F/dx2)``."""

    name: str
    jet: Callable[[float, float], tuple]


def check_c1_criterion(
    params: ModelParams,
    curve: Curve,
    F: SpaceTimeFunction,
    beta: Callable[[float], float],
    v: Callable[[float], float],
    horizon: float,
    grid: Optional[Grid] = None,
    weight: Optional[SkewWeight] = None,
) -> CriterionReport:
    """Check calL H = beta H + weight(x - lam2) v off the curve, H = weight * F."""
    _check_horizon(curve, horizon)
    if not curve.is_c1:
        raise PreconditionError(f"c1 route needs a C^1 curve, got kind {curve.kind!r}")
    weight = weight or SkewWeight.canonical(params.p)
    if not weight.is_canonical(params.p):
        raise PreconditionError("c1 route needs the canonical weight alpha=1-p, gamma=p")
    grid = grid or default_grid(params, curve, horizon)
    gen = GeneratorL(params)
    for t in grid.times:
        on_curve = F.jet(t, curve.evaluate(t))[0]
        if abs(on_curve) > CURVE_ZERO_TOL:
            raise PreconditionError(f"F(t, lam2(t)) = {on_curve} != 0 at t = {t}")
    witness = f"F={F.name}; H=weight(x-lam2)F"
    need = params.skew_sign
    for t in grid.times:
        vt = v(t)
        if need * vt < 0:
            return CriterionReport(INCONCLUSIVE, ROUTE_C1, witness, horizon, violation=Violation(t, t, need * vt))
    worst = 0.0
    for t in grid.times:
        lam, bt, vt = curve.evaluate(t), beta(t), v(t)
        for x in grid.xs:
            y = x - lam
            if abs(y) < CURVE_BAND:
                continue
            val, dt_, dx_, dxx_ = F.jet(t, x)
            if dx_ <= 0:
                raise PreconditionError(f"F must increase in x; dF/dx = {dx_} at ({t}, {x})")
            res = float(weight(y)) * (dt_ + gen.apply_jet(x, dx_, dxx_) - bt * val - vt)
            if abs(res) > RESIDUAL_TOL:
                return CriterionReport(INCONCLUSIVE, ROUTE_C1, witness, horizon, violation=Violation(t, t, -abs(res)))
            worst = max(worst, abs(res))
    return CriterionReport(GUARANTEED, ROUTE_C1, witness, horizon, margin=RESIDUAL_TOL - worst)


# ---------------------------------------------------------------------------
# Gronwall
# ---------------------------------------------------------------------------


def gronwall_bound(times, g, epsilon: float, mu_plus, rtol: float = 1e-12):
    """Bound eps * exp(mu+([0, t_i))) on the grid and whether g(t_i) stays below it.

    ``mu_plus[i]`` is the mass of the cell [t_i, t_{i+1}); an atom at t_i
    belongs to cell i and so only enters the bound strictly after t_i.
    Comparisons allow a relative slack ``rtol`` for rounding.
    """
    times = np.asarray(times, dtype=float)
    g = np.asarray(g, dtype=float)
    masses = np.asarray(mu_plus, dtype=float)
    if g.shape != times.shape:
        raise ValidationError("g must be sampled on the time grid")
    if len(masses) not in (len(times) - 1, len(times)):
        raise ValidationError("mu_plus needs one mass per grid cell")
    if np.any(g < 0):
        raise ValidationError("g samples must be nonnegative")
    if np.any(masses < 0):
        raise ValidationError("mu_plus masses must be nonnegative")
    if epsilon < 0:
        raise ValidationError("epsilon must be nonnegative")
    before = np.concatenate(([0.0], np.cumsum(masses[: len(times) - 1])))
    bound = epsilon * np.exp(before)
    holds = bool(np.all(g <= bound * (1 + rtol)))
    return bound, holds
