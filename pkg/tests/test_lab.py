import math

import numpy as np
import pytest

from skewcurve import lab
from skewcurve.engine import SimConfig
from skewcurve.lab import ExperimentReport, Statistic, TestFunctionFlux, gate_s
from skewcurve.model import Curve, ModelParams

P = ModelParams(2.0, 2.0, 0.0, 0.75)
LINE = Curve.linear(1.0, 1.5, 1.0)
CONST = Curve.constant(1.0, 1.0)
SMALL = SimConfig(dt=5e-3, T=1.0, n_paths=1500, seed=17, r0=1.0)


def test_gate_s_shape():
    s, s1, s2 = gate_s(np.array([0.0]))
    assert s[0] == 0.0 and s1[0] == pytest.approx(math.exp(-1)) and s2[0] == 0.0
    assert gate_s(np.array([1.0, -1.5]))[0].tolist() == [0.0, 0.0]
    y, h = np.array([-0.6, 0.3, 0.8]), 1e-5
    v, d1, d2 = gate_s(y)
    assert d1 == pytest.approx((gate_s(y + h)[0] - gate_s(y - h)[0]) / (2 * h), rel=1e-6)
    assert d2 == pytest.approx((gate_s(y + h)[1] - gate_s(y - h)[1]) / (2 * h), rel=1e-5)


def test_flux_condition_by_construction():
    tf = TestFunctionFlux(0.75, 2.0)
    h = 1e-7
    up = (tf.psi(np.array(h))[0] - tf.psi(np.array(0.0))[0]) / h
    dn = (tf.psi(np.array(0.0))[0] - tf.psi(np.array(-h))[0]) / h
    assert 0.75 * up == pytest.approx(0.25 * dn, rel=1e-5)
    assert tf.flux_defect(0.75) == 0.0
    assert TestFunctionFlux(0.25, 2.0).flux_defect(0.75) != 0.0


def test_generator_matches_finite_differences():
    tf = TestFunctionFlux(0.75, 2.0)
    curve = Curve.linear(1.0, 0.5, 1.0)
    t, x, h = 0.3, 1.4, 1e-4
    lam = lambda s: 1.0 + 0.5 * s  # noqa: E731
    F = lambda s, y: tf.value(s, np.array(y), lam(s))  # noqa: E731
    ft = (F(t + h, x) - F(t - h, x)) / (2 * h)
    fx = (F(t, x + h) - F(t, x - h)) / (2 * h)
    fxx = (F(t, x + h) - 2 * F(t, x) + F(t, x - h)) / h**2
    expect = ft + 0.5 * 4 * x * fxx + 0.25 * 4 * 2 * fx
    got = tf.generator(P, t, np.array(x), lam(t), 0.5)
    assert got == pytest.approx(expect, rel=1e-5)


def test_report_status_is_derived_from_statistics():
    ok = Statistic("m", 0.1, 0.01, 0.2, "abs<=")
    bad = Statistic("m", 0.3, 0.01, 0.2, "abs<=")
    assert ExperimentReport("x", {}, (ok,)).status == lab.PASS
    assert ExperimentReport("x", {}, (bad,)).status == lab.FAIL
    assert ExperimentReport("x", {}, (bad,), negative_control=True).status == lab.PASS
    assert ExperimentReport("x", {}, (ok,), negative_control=True).status == lab.FAIL
    assert ExperimentReport("x", {}, (bad,), exploratory=True).status == lab.EXPLORATORY
    assert ExperimentReport("x", {}, (), inconclusive_reason="r").status == lab.INCONCLUSIVE


def test_positivity_experiment():
    rep = lab.positivity_and_occupation(P, LINE, SMALL)
    assert rep.stat("min_R").value >= 0
    assert rep.stat("occ_curve_drop_1").holds and rep.stat("occ_zero_drop_2").holds
    assert rep.stat("ledger_mass_on_zero_curve").value == 0.0


def test_zero_curve_carries_no_ledger_mass():
    zero = Curve.constant(0.0, 1.0)
    rep = lab.positivity_and_occupation(P, zero, SMALL)
    assert rep.stat("ledger_mass_on_zero_curve").value == 0.0
    assert rep.stat("min_R").holds


def test_local_time_relations_and_control():
    rep = lab.local_time_relations(P, CONST, SMALL)
    assert rep.status == lab.PASS
    ctl = lab.local_time_relations(P, CONST, SMALL, target_p=0.25)
    assert ctl.negative_control and ctl.status == lab.PASS
    assert not ctl.checks_hold


def test_local_time_symmetric_case():
    rep = lab.local_time_relations(ModelParams(2, 2, 0, 0.5), CONST, SMALL)
    assert rep.status == lab.PASS
    assert rep.stat("ratio").value == pytest.approx(1.0, rel=0.15)


def test_local_time_lower_skew():
    params = ModelParams(2.0, 2.0, 1.0, 0.25)
    rep = lab.local_time_relations(params, Curve.constant(3.0, 1.0), SimConfig(2e-3, 1.0, 3000, seed=5, r0=3.0))
    assert rep.status == lab.PASS
    assert rep.stat("ratio").value == pytest.approx(1 / 3, rel=0.15)


def test_local_time_inconclusive_without_visits():
    rep = lab.local_time_relations(P, Curve.constant(0.0, 1.0), SMALL)
    assert rep.status == lab.INCONCLUSIVE


def test_supinf_and_control():
    rep = lab.supinf_representation(P, CONST, SMALL)
    assert rep.status == lab.PASS
    assert rep.stat("rel_diff").value <= 0.2
    ctl = lab.supinf_representation(P, CONST, SMALL, drop_indicators=True)
    assert ctl.status == lab.PASS and not ctl.checks_hold


def test_supinf_unperturbed_pair_collapses():
    rep = lab.supinf_representation(P, CONST, SMALL, eta=0.0)
    assert rep.stat("mean_lhs").value == rep.stat("mean_rhs").value


def test_supinf_zero_curve():
    rep = lab.supinf_representation(P, Curve.constant(0.0, 1.0), SMALL)
    assert rep.status == lab.INCONCLUSIVE
    assert rep.stat("mean_lhs").value == 0.0 and rep.stat("mean_rhs").value == 0.0


def test_martingale_small_batch():
    good, broken = lab.martingale_problem(P, CONST, SimConfig(2e-3, 1.0, 4000, seed=2, r0=1.0))
    assert good.name == "martingale" and good.status == lab.PASS
    assert broken.name == "martingale_negctl" and broken.status == lab.PASS


def test_decay_exploratory_label():
    rep = lab.uniqueness_decay(ModelParams(2, 2, 0, 0.25), CONST, SimConfig(1e-3, 1.0, 200, seed=1), ladder=(4e-3, 2e-3))
    assert rep.status == lab.EXPLORATORY
    assert rep.config["criterion"] == "INCONCLUSIVE"


def test_decay_control_fails_as_expected():
    rep = lab.uniqueness_decay_control(P, LINE, SimConfig(1e-3, 1.0, 500, seed=1), dt=4e-3)
    assert rep.negative_control and rep.status == lab.PASS


def test_harmonic_experiment():
    rep = lab.harmonic_martingale(P, LINE, SMALL)
    assert rep.status == lab.PASS
    rep0 = lab.harmonic_martingale(P, LINE, SimConfig(5e-3, 1.0, 200, r0=0.0))
    assert rep0.stat("max_abs_h").value == 0.0


def test_suite_is_order_independent_and_deterministic():
    cfg = SimConfig(5e-3, 1.0, 300, seed=8, r0=1.0)
    a = lab.run_suite(P, LINE, cfg, ("harmonic", "positivity"))
    b = lab.run_suite(P, LINE, cfg, ("positivity", "harmonic"))
    assert lab.suite_csv(a) == lab.suite_csv(b)
    assert [r.name for r in a] == ["positivity", "harmonic"]
    with pytest.raises(ValueError):
        lab.run_suite(P, LINE, cfg, ("nope",))


def test_suite_csv_layout():
    cfg = SimConfig(5e-3, 1.0, 100, seed=8, r0=1.0)
    text = lab.suite_csv(lab.run_suite(P, LINE, cfg, ("harmonic",)))
    lines = text.splitlines()
    assert lines[0] == "experiment,statistic,value,stderr,tolerance,pass"
    assert all(len(l.split(",")) == 6 for l in lines)
    assert lines[-1] == "harmonic,status,PASS,,,true"
