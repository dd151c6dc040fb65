"""Monte Carlo simulation of the skew-reflected CIR / squared Bessel SDE.

Paths are advanced together as numpy vectors, one time step at a time.

Random streams
--------------
Path ``i`` of a run with seed ``s`` draws its Brownian increments from
``PCG64(SeedSequence(s, spawn_key=(i, 0)))`` and its skew uniforms from
``PCG64(SeedSequence(s, spawn_key=(i, 1)))``.  Every step consumes exactly
one normal and one uniform per path, whichever branch the step takes, so a
path's output depends only on (seed, i) and not on batch size, chunking or
worker count.  Coupled members share the streams of their path index.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError, NumericalFailure, ValidationError
from .model import Curve, ModelParams

DEFAULT_SEED = 20_240_917
DEFAULT_TRUNCATION = 1e3
NOISE_BLOCK = 256
CHUNK_PATHS = 8192


@dataclass(frozen=True)
class SimConfig:
    dt: float
    T: float
    n_paths: int
    seed: int = DEFAULT_SEED
    band_eps: Optional[float] = None  # None means sqrt(dt)
    r0: float = 1.0
    truncation_level: float = DEFAULT_TRUNCATION

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not self.dt < self.T:
            raise ValidationError(f"dt must be smaller than T, got dt={self.dt}, T={self.T}")
        if not isinstance(self.n_paths, (int, np.integer)) or self.n_paths < 0:
            raise ValidationError(f"n_paths must be a nonnegative integer, got {self.n_paths!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.band_eps is not None and not self.band_eps > 0:
            raise ValidationError(f"band_eps must be positive, got {self.band_eps}")
        if not (self.r0 >= 0 and math.isfinite(self.r0)):
            raise ValidationError(f"r0 must be nonnegative, got {self.r0}")
        if not self.truncation_level > 0:
            raise ValidationError(f"truncation_level must be positive, got {self.truncation_level}")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise ValidationError(f"T={self.T} is not an integer multiple of dt={self.dt}")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def eps(self) -> float:
        return math.sqrt(self.dt) if self.band_eps is None else float(self.band_eps)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt


# ---------------------------------------------------------------------------
# one step of the scheme
# ---------------------------------------------------------------------------


def skew_step(params: ModelParams, lam_now: float, lam_next: float, R, dW, u, dt: float, eps: float):
    """Advance values ``R`` (all >= 0) by one step; vectorised over paths.

    Returns ``(R_next, inc_plus, inc_minus)``, the ledger increments being the
    band estimates of the upper and lower local time of R - lam2 gathered
    over this step.  Where lam2 = 0 the local time on the curve vanishes, so
    the skew branch is off (plain truncation) and nothing is booked.
    """
    sig2 = params.sigma * params.sigma
    prop = R + params.sigma * np.sqrt(R) * dW + 0.25 * sig2 * (params.delta - params.b * R) * dt
    if lam_next == 0.0:
        R_next = np.maximum(prop, 0.0)
    else:
        Y = R - lam_now
        Ys = prop - lam_next
        keep = (np.sign(Y) == np.sign(Ys)) & (np.abs(Ys) > eps)
        side = np.where(u < params.p, 1.0, -1.0)
        R_next = np.where(keep, np.maximum(prop, 0.0), np.maximum(lam_next + side * np.abs(Ys), 0.0))
    if lam_now == 0.0:
        zero = np.zeros_like(R)
        return R_next, prop, zero, zero
    Y = R - lam_now
    full = sig2 * R * dt / eps
    half = 0.5 * full
    plus = np.where((Y > 0) & (Y < eps), full, 0.0)
    minus = np.where((Y < 0) & (Y > -eps), full, 0.0)
    on = Y == 0
    if on.any():
        plus = np.where(on, half, plus)
        minus = np.where(on, half, minus)
    return R_next, prop, plus, minus


def step(params: ModelParams, curve: Curve, t: float, r: float, dW: float, u: float, config: SimConfig):
    """Scalar form of one step from (t, r): returns (r_next, (d_ell0, d_ell0_plus, d_ell0_minus))."""
    if not r >= 0:
        raise DomainError(f"state must be nonnegative, got {r}")
    lam_now, lam_next = curve.evaluate(t), curve.evaluate(t + config.dt)
    R_next, prop, plus, minus = skew_step(
        params, lam_now, lam_next, np.array([r], dtype=float), np.array([dW]), np.array([u]), config.dt, config.eps
    )
    if not np.isfinite(prop[0]):
        raise NumericalFailure("non-finite Euler proposal", step=int(round(t / config.dt)))
    p, m = float(plus[0]), float(minus[0])
    return float(R_next[0]), ((p + m) / 2, p, m)


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------


def path_generators(seed: int, index: int):
    """(normal stream, uniform stream) of path ``index``."""
    make = lambda j: np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index, j))))  # noqa: E731
    return make(0), make(1)


class _Noise:
    """Step-major blocks of increments for a chunk of paths."""

    def __init__(self, seed: int, path_ids: Sequence[int], dt: float, n_steps: int):
        self.gens = [path_generators(seed, int(i)) for i in path_ids]
        self.sqdt = math.sqrt(dt)
        self.remaining = n_steps

    def blocks(self):
        n = len(self.gens)
        while self.remaining > 0:
            m = min(NOISE_BLOCK, self.remaining)
            normals = np.empty((n, m))
            uniforms = np.empty((n, m))
            for i, (gn, gu) in enumerate(self.gens):
                gn.standard_normal(out=normals[i])
                gu.random(out=uniforms[i])
            self.remaining -= m
            yield np.ascontiguousarray((normals * self.sqdt).T), np.ascontiguousarray(uniforms.T)


# ---------------------------------------------------------------------------
# batch driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Member:
    r0: float
    eps: float


@dataclass
class MemberStep:
    """What an observer sees of one member during step k -> k+1."""

    R: np.ndarray
    R_next: np.ndarray
    inc_plus: np.ndarray
    inc_minus: np.ndarray
    active: np.ndarray


@dataclass
class _ChunkOut:
    final: list
    plus: list
    minus: list
    aborted: list
    abort_step: list
    min_value: list
    observed: object


def _run_chunk(params, curve, config, members, lam, path_ids, observer_factory, record_noise=False):
    n = len(path_ids)
    dt = config.dt
    state = [np.full(n, float(m.r0)) for m in members]
    plus = [np.zeros(n) for _ in members]
    minus = [np.zeros(n) for _ in members]
    active = [np.ones(n, dtype=bool) for _ in members]
    abort_step = [np.full(n, -1, dtype=np.int64) for _ in members]
    low = [s.copy() for s in state]
    observer = observer_factory(path_ids, len(members)) if observer_factory else None
    noise = _Noise(config.seed, path_ids, dt, config.n_steps)
    k = 0
    for dW_block, u_block in noise.blocks():
        if observer is not None and hasattr(observer, "noise"):
            observer.noise(k, dW_block, u_block)
        for dW, u in zip(dW_block, u_block):
            views = []
            for j, m in enumerate(members):
                R = state[j]
                R_next, prop, ip, im = skew_step(params, lam[k], lam[k + 1], R, dW, u, dt, m.eps)
                if not np.isfinite(prop).all():
                    raise NumericalFailure("non-finite Euler proposal", step=k)
                act = active[j]
                if not act.all():
                    R_next = np.where(act, R_next, R)
                    ip = np.where(act, ip, 0.0)
                    im = np.where(act, im, 0.0)
                hit = act & (R_next >= config.truncation_level)
                if hit.any():
                    abort_step[j][hit] = k + 1
                    active[j] = act & ~hit
                plus[j] += ip
                minus[j] += im
                np.minimum(low[j], R_next, out=low[j])
                views.append(MemberStep(R, R_next, ip, im, act))
                state[j] = R_next
            if observer is not None:
                observer.step(k, views)
            k += 1
    return _ChunkOut(
        state, plus, minus, [~a for a in active], abort_step, low, observer.result() if observer else None
    )


def _lam_grid(curve: Curve, config: SimConfig) -> np.ndarray:
    if config.T > curve.domain_end * (1 + 1e-12):
        raise DomainError(f"curve domain [0, {curve.domain_end}] does not cover horizon T={config.T}")
    times = np.minimum(config.times, curve.domain_end)
    return np.asarray(curve.evaluate(times), dtype=float)


def _chunks(n_paths: int, chunk: int):
    return [np.arange(i, min(i + chunk, n_paths)) for i in range(0, n_paths, chunk)]


def default_workers() -> int:
    return os.cpu_count() or 1


def drive(params, curve, config, members, observer_factory=None, *, workers=None, chunk_size=None):
    """Run ``members`` on shared noise over all paths; chunk results in path order."""
    lam = _lam_grid(curve, config)
    chunks = _chunks(config.n_paths, chunk_size or CHUNK_PATHS)
    job = lambda ids: _run_chunk(params, curve, config, members, lam, ids, observer_factory)  # noqa: E731
    workers = workers or default_workers()
    if workers <= 1 or len(chunks) <= 1:
        return [job(ids) for ids in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(job, chunks))


def _cat(outs, attr, j, dtype=float):
    parts = [getattr(o, attr)[j] for o in outs]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=dtype)


# ---------------------------------------------------------------------------
# public results
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    index: int
    times: np.ndarray
    values: np.ndarray
    brownian_increments: np.ndarray
    uniforms: np.ndarray
    ell0_plus: np.ndarray
    ell0_minus: np.ndarray
    aborted: bool = False
    abort_step: int = -1

    @property
    def ell0(self) -> np.ndarray:
        return (self.ell0_plus + self.ell0_minus) / 2

    CSV_HEADER = "t,R,ell0,ell0_plus,ell0_minus"

    def to_csv(self) -> str:
        ell0 = self.ell0
        rows = [self.CSV_HEADER]
        for k in range(len(self.times)):
            rows.append(
                ",".join(
                    format(float(x), ".17g")
                    for x in (self.times[k], self.values[k], ell0[k], self.ell0_plus[k], self.ell0_minus[k])
                )
            )
        return "\n".join(rows) + "\n"


@dataclass
class Batch:
    """Terminal summaries of a simulated batch (plus full paths when recorded)."""

    params: ModelParams
    curve: Curve
    config: SimConfig
    terminal: np.ndarray
    ell0_plus: np.ndarray
    ell0_minus: np.ndarray
    aborted: np.ndarray
    abort_step: np.ndarray
    min_value: np.ndarray
    trajectories: Optional[list] = None

    @property
    def ell0(self) -> np.ndarray:
        return (self.ell0_plus + self.ell0_minus) / 2

    @property
    def n_aborted(self) -> int:
        return int(self.aborted.sum())

    def mean_stderr(self, values: np.ndarray):
        """Mean and standard error over paths that did not abort."""
        x = values[~self.aborted]
        if len(x) == 0:
            return math.nan, math.nan
        if len(x) == 1:
            return float(x[0]), math.nan
        return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))

    def trajectory(self, index: int) -> Trajectory:
        if self.trajectories is not None:
            return self.trajectories[index]
        return simulate_path(self.params, self.curve, self.config, index)

    SUMMARY_HEADER = "path_index,R_T,ell0,ell0_plus,ell0_minus,aborted"

    def summary_csv(self) -> str:
        f = lambda x: format(float(x), ".17g")  # noqa: E731
        ell0 = self.ell0
        rows = [self.SUMMARY_HEADER]
        for i in range(len(self.terminal)):
            rows.append(
                f"{i},{f(self.terminal[i])},{f(ell0[i])},{f(self.ell0_plus[i])},{f(self.ell0_minus[i])},{int(self.aborted[i])}"
            )
        return "\n".join(rows) + "\n"


class _Recorder:
    """Keeps full per-step series for every member of a chunk."""

    def __init__(self, path_ids, n_members, n_steps, r0s):
        n = len(path_ids)
        self.path_ids = path_ids
        self.values = [np.empty((n_steps + 1, n)) for _ in range(n_members)]
        self.plus = [np.zeros((n_steps + 1, n)) for _ in range(n_members)]
        self.minus = [np.zeros((n_steps + 1, n)) for _ in range(n_members)]
        for j, r0 in enumerate(r0s):
            self.values[j][0] = r0
        self.dW = np.empty((n_steps, n))
        self.u = np.empty((n_steps, n))

    def noise(self, k, dW_block, u_block):
        self.dW[k : k + len(dW_block)] = dW_block
        self.u[k : k + len(u_block)] = u_block

    def step(self, k, views):
        for j, v in enumerate(views):
            self.values[j][k + 1] = v.R_next
            self.plus[j][k + 1] = self.plus[j][k] + v.inc_plus
            self.minus[j][k + 1] = self.minus[j][k] + v.inc_minus

    def result(self):
        return self


def _collect(params, curve, config, outs, j, record):
    batch = Batch(
        params,
        curve,
        config,
        _cat(outs, "final", j),
        _cat(outs, "plus", j),
        _cat(outs, "minus", j),
        _cat(outs, "aborted", j, bool),
        _cat(outs, "abort_step", j, np.int64),
        _cat(outs, "min_value", j),
    )
    if record:
        times = config.times
        trajs = []
        pos = 0
        for o in outs:
            rec = o.observed
            for col, idx in enumerate(rec.path_ids):
                trajs.append(
                    Trajectory(
                        int(idx),
                        times,
                        rec.values[j][:, col].copy(),
                        rec.dW[:, col].copy(),
                        rec.u[:, col].copy(),
                        rec.plus[j][:, col].copy(),
                        rec.minus[j][:, col].copy(),
                        bool(batch.aborted[pos]),
                        int(batch.abort_step[pos]),
                    )
                )
                pos += 1
        batch.trajectories = trajs
    return batch


def simulate(params: ModelParams, curve: Curve, config: SimConfig, *, record: bool = False, workers=None, chunk_size=None) -> Batch:
    """Simulate ``config.n_paths`` independent paths.

    With ``record=True`` full trajectories are kept (memory grows as
    n_paths * n_steps); otherwise ``Batch.trajectory(i)`` regenerates path i.
    """
    members = [Member(config.r0, config.eps)]
    factory = None
    if record:
        factory = lambda ids, nm: _Recorder(ids, nm, config.n_steps, [config.r0])  # noqa: E731
    outs = drive(params, curve, config, members, factory, workers=workers, chunk_size=chunk_size)
    return _collect(params, curve, config, outs, 0, record)


def simulate_path(params: ModelParams, curve: Curve, config: SimConfig, index: int) -> Trajectory:
    """Regenerate path ``index`` of a batch bit for bit."""
    if not 0 <= index < max(config.n_paths, 1):
        raise DomainError(f"path index {index} outside batch of {config.n_paths}")
    members = [Member(config.r0, config.eps)]
    lam = _lam_grid(curve, config)
    rec_factory = lambda ids, nm: _Recorder(ids, nm, config.n_steps, [config.r0])  # noqa: E731
    out = _run_chunk(params, curve, config, members, lam, np.array([index]), rec_factory)
    return _collect(params, curve, config, [out], 0, True).trajectories[0]


# ---------------------------------------------------------------------------
# coupling
# ---------------------------------------------------------------------------


@dataclass
class CoupledBatch:
    first: Batch
    second: Batch
    sup_series: Optional[np.ndarray] = None  # (n_steps+1, n_paths) when recorded
    inf_series: Optional[np.ndarray] = None

    @property
    def sup_terminal(self) -> np.ndarray:
        return np.maximum(self.first.terminal, self.second.terminal)

    @property
    def inf_terminal(self) -> np.ndarray:
        return np.minimum(self.first.terminal, self.second.terminal)

    @property
    def gap_terminal(self) -> np.ndarray:
        return self.sup_terminal - self.inf_terminal

    @property
    def gap_series(self) -> Optional[np.ndarray]:
        return None if self.sup_series is None else self.sup_series - self.inf_series

    @property
    def aborted(self) -> np.ndarray:
        return self.first.aborted | self.second.aborted


def couple(
    params: ModelParams,
    curve: Curve,
    config: SimConfig,
    band_eps_pair: Optional[tuple] = None,
    r0_pair: Optional[tuple] = None,
    *,
    observer_factory: Optional[Callable] = None,
    record: bool = False,
    workers=None,
    chunk_size=None,
):
    """Two members on identical Brownian increments and skew uniforms.

    They may differ in band width and/or initial value.  Returns a
    ``CoupledBatch`` (and the per-chunk observer results when an
    ``observer_factory`` is given).
    """
    eps1, eps2 = band_eps_pair or (config.eps, config.eps)
    r1, r2 = r0_pair or (config.r0, config.r0)
    for r in (r1, r2):
        if not r >= 0:
            raise ValidationError(f"initial values must be nonnegative, got {r}")
    members = [Member(r1, eps1), Member(r2, eps2)]
    if record and observer_factory is not None:
        raise ValidationError("record and observer_factory are exclusive")
    factory = observer_factory
    if record:
        factory = lambda ids, nm: _Recorder(ids, nm, config.n_steps, [r1, r2])  # noqa: E731
    outs = drive(params, curve, config, members, factory, workers=workers, chunk_size=chunk_size)
    first = _collect(params, curve, config, outs, 0, record)
    second = _collect(params, curve, config, outs, 1, record)
    pair = CoupledBatch(first, second)
    if record:
        v1 = np.concatenate([o.observed.values[0] for o in outs], axis=1) if outs else None
        v2 = np.concatenate([o.observed.values[1] for o in outs], axis=1) if outs else None
        if v1 is not None:
            pair.sup_series, pair.inf_series = np.maximum(v1, v2), np.minimum(v1, v2)
    if observer_factory is not None:
        return pair, [o.observed for o in outs]
    return pair
