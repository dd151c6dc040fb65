import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from skewcurve.engine import SimConfig, couple, path_generators, simulate, simulate_path, step
from skewcurve.errors import DomainError, NumericalFailure, ValidationError
from skewcurve.model import Curve, ModelParams

BESQ = ModelParams(2.0, 2.0, 0.0, 0.75)
LINE = Curve.linear(1.0, 1.5, 1.0)


def cfg(**kw):
    base = dict(dt=1e-2, T=1.0, n_paths=64, seed=3, r0=1.0)
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    assert cfg().n_steps == 100
    assert cfg().eps == 0.1
    with pytest.raises(ValidationError):
        cfg(dt=2.0)
    with pytest.raises(ValidationError):
        cfg(dt=0.3)  # not a divisor of T
    with pytest.raises(ValidationError):
        cfg(r0=-1.0)
    with pytest.raises(ValidationError):
        cfg(seed=-1)
    with pytest.raises(ValidationError):
        cfg(band_eps=0.0)


def test_hand_evaluated_step():
    # R = 0, dW = 0, curve 1: R* = (sigma^2 delta / 4) dt = 2e-3, stays below the curve
    c = SimConfig(dt=1e-3, T=1.0, n_paths=1)
    r, (d0, dp, dm) = step(ModelParams(2, 2, 0, 0.5), Curve.constant(1.0, 1.0), 0.0, 0.0, 0.0, 0.9, c)
    assert r == pytest.approx(2e-3, rel=1e-15)
    assert (d0, dp, dm) == (0.0, 0.0, 0.0)


def test_step_skew_branch_and_ledger():
    c = SimConfig(dt=1e-2, T=1.0, n_paths=1, band_eps=0.1)
    curve = Curve.constant(1.0, 1.0)
    params = ModelParams(2, 2, 0, 0.75)
    # start on the curve: the ledger splits the increment half/half
    r_up, (d0, dp, dm) = step(params, curve, 0.0, 1.0, 0.0, 0.2, c)
    q = 4 * 1.0 * 1e-2 / 0.1
    assert dp == dm == q / 2 and d0 == q / 2
    # in-band: u < p goes above, u >= p below, reusing |Y*|
    ystar = 1.0 + 2 * 1e-2 - 1.0
    assert r_up == pytest.approx(1.0 + ystar)
    r_dn, _ = step(params, curve, 0.0, 1.0, 0.0, 0.8, c)
    assert r_dn == pytest.approx(1.0 - ystar)
    # just above the curve, inside the band: only the upper ledger grows
    _, (d0, dp, dm) = step(params, curve, 0.0, 1.05, 0.0, 0.2, c)
    assert dm == 0.0 and dp == 4 * 1.05 * 1e-2 / 0.1 and d0 == dp / 2


def test_step_rejects_negative_state():
    with pytest.raises(DomainError):
        step(BESQ, LINE, 0.0, -1.0, 0.0, 0.5, cfg())


def test_zero_curve_has_no_ledger():
    batch = simulate(BESQ, Curve.constant(0.0, 1.0), cfg(r0=0.0, n_paths=200))
    assert np.all(batch.ell0_plus == 0) and np.all(batch.ell0_minus == 0)
    assert np.all(batch.min_value >= 0)


def test_empty_batch():
    batch = simulate(BESQ, LINE, cfg(n_paths=0))
    assert len(batch.terminal) == 0


def test_determinism_and_chunk_invariance():
    a = simulate(BESQ, LINE, cfg(n_paths=100))
    b = simulate(BESQ, LINE, cfg(n_paths=100), chunk_size=7, workers=3)
    for name in ("terminal", "ell0_plus", "ell0_minus", "aborted", "min_value"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_prefix_stability():
    # path i depends only on (seed, i), not on the batch size
    small = simulate(BESQ, LINE, cfg(n_paths=10))
    big = simulate(BESQ, LINE, cfg(n_paths=50))
    assert np.array_equal(small.terminal, big.terminal[:10])


def test_regeneration_is_bit_identical():
    c = cfg(n_paths=20)
    batch = simulate(BESQ, LINE, c, record=True)
    for i in (0, 7, 19):
        tr = simulate_path(BESQ, LINE, c, i)
        ref = batch.trajectories[i]
        assert tr.index == i
        assert np.array_equal(tr.values, ref.values)
        assert np.array_equal(tr.ell0_plus, ref.ell0_plus)
        assert tr.values[-1] == batch.terminal[i]
    with pytest.raises(DomainError):
        simulate_path(BESQ, LINE, c, 20)


def test_noise_streams_documented_rule():
    c = cfg(n_paths=3)
    tr = simulate_path(BESQ, LINE, c, 2)
    gn, gu = path_generators(c.seed, 2)
    assert np.array_equal(tr.brownian_increments, gn.standard_normal(c.n_steps) * math.sqrt(c.dt))
    assert np.array_equal(tr.uniforms, gu.random(c.n_steps))


def test_trajectory_invariants_and_dump():
    batch = simulate(BESQ, LINE, cfg(n_paths=30), record=True)
    for tr in batch.trajectories:
        assert np.all(tr.values >= 0)
        assert np.all(np.diff(tr.ell0_plus) >= 0) and np.all(np.diff(tr.ell0_minus) >= 0)
        assert np.array_equal(tr.ell0, (tr.ell0_plus + tr.ell0_minus) / 2)
        assert tr.times[0] == 0.0 and tr.values[0] == 1.0
    text = batch.trajectories[0].to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,R,ell0,ell0_plus,ell0_minus"
    assert len(lines) == 1 + 101
    row = lines[-1].split(",")
    assert float(row[1]) == batch.terminal[0]


def test_summary_csv():
    batch = simulate(BESQ, LINE, cfg(n_paths=3))
    lines = batch.summary_csv().splitlines()
    assert lines[0] == "path_index,R_T,ell0,ell0_plus,ell0_minus,aborted"
    assert [l.split(",")[0] for l in lines[1:]] == ["0", "1", "2"]
    assert float(lines[1].split(",")[1]) == batch.terminal[0]


def test_abort_flags_paths():
    batch = simulate(BESQ, LINE, cfg(n_paths=50, truncation_level=1.5))
    assert batch.n_aborted > 0
    assert np.all(batch.abort_step[batch.aborted] > 0)
    assert np.all(batch.terminal[batch.aborted] >= 1.5)
    assert np.all(batch.abort_step[~batch.aborted] == -1)


def test_non_finite_proposal_reports_step():
    huge = ModelParams(1e200, 2.0, 0.0, 0.75)
    with pytest.raises(NumericalFailure) as info:
        simulate(huge, LINE, cfg(n_paths=2, truncation_level=1e308))
    assert info.value.step == 0


def test_curve_must_cover_horizon():
    with pytest.raises(DomainError):
        simulate(BESQ, Curve.constant(1.0, 0.5), cfg())


def test_symmetric_rule_at_half():
    # with p = 1/2 the in-band branch picks each side for half of the uniform range
    c = SimConfig(dt=1e-2, T=1.0, n_paths=1, band_eps=0.1)
    params = ModelParams(2, 2, 0, 0.5)
    curve = Curve.constant(1.0, 1.0)
    up, _ = step(params, curve, 0.0, 1.0, 0.0, 0.4999, c)
    dn, _ = step(params, curve, 0.0, 1.0, 0.0, 0.5, c)
    assert up - 1.0 == pytest.approx(1.0 - dn)


def test_couple_identical_members():
    pair = couple(BESQ, LINE, cfg(n_paths=40), record=True)
    assert np.all(pair.gap_series == 0)
    assert np.array_equal(pair.first.terminal, simulate(BESQ, LINE, cfg(n_paths=40)).terminal)


def test_couple_initial_gap():
    pair = couple(BESQ, LINE, cfg(n_paths=40), r0_pair=(1.0, 1.1), record=True)
    assert np.allclose(pair.gap_series[0], 0.1)
    assert np.all(pair.sup_series >= pair.inf_series)


def test_couple_band_pair_shares_noise():
    c = cfg(n_paths=40)
    pair = couple(BESQ, LINE, c, band_eps_pair=(0.1, 0.2))
    solo = simulate(BESQ, LINE, SimConfig(c.dt, c.T, c.n_paths, c.seed, 0.2, c.r0))
    assert np.array_equal(pair.second.terminal, solo.terminal)


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    st.floats(0.3, 3.0),
    st.floats(0.2, 5.0),
    st.floats(0.0, 2.0),
    st.floats(0.05, 0.95),
    st.floats(0.0, 3.0),
    st.floats(0.0, 3.0),
    st.integers(0, 2**32),
)
def test_scheme_invariants(sigma, delta, b, p, lam0, r0, seed):
    params = ModelParams(sigma, delta, b, p)
    curve = Curve.linear(lam0, 0.5, 1.0)
    batch = simulate(params, curve, SimConfig(0.02, 1.0, 8, seed=seed, r0=r0), record=True)
    for tr in batch.trajectories:
        assert np.all(tr.values >= 0)
        assert np.array_equal(tr.ell0, (tr.ell0_plus + tr.ell0_minus) / 2)
        assert np.all(np.diff(tr.ell0_plus) >= 0) and np.all(np.diff(tr.ell0_minus) >= 0)


def test_occupation_of_thin_band_is_small():
    # dt = 1e-4, eps = dt^0.4: the fraction of nodes within eps of a constant curve is below 0.05
    from skewcurve import lab

    c = SimConfig(dt=1e-4, T=1.0, n_paths=400, seed=12, r0=1.0)
    rep = lab.positivity_and_occupation(BESQ, Curve.constant(1.0, 1.0), c)
    assert rep.stat("occ_curve_eps2").value < 0.05
    assert rep.stat("occ_curve_eps1").value >= rep.stat("occ_curve_eps2").value
