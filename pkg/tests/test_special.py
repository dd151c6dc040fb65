import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewcurve.errors import DomainError, NumericalFailure
from skewcurve.model import ModelParams
from skewcurve.special import (
    Gate,
    GeneratorL,
    eigenfunction,
    exp_half_b,
    f_g,
    harmonic_h,
    kummer_m,
    kummer_terms,
)


def test_kummer_examples():
    assert kummer_m(0.3, 1.7, 0.0) == 1.0
    assert kummer_m(1, 1, 1) == pytest.approx(math.e, rel=1e-15)
    assert kummer_m(1, 2, 1) == pytest.approx(math.e - 1, rel=1e-15)
    # a = -2 is a polynomial: 1 - 2z/b + z^2/(b(b+1))
    assert kummer_m(-2, 3, 1.5) == pytest.approx(1 - 1 + 2.25 / 12, rel=1e-15)


def test_kummer_domain():
    with pytest.raises(DomainError):
        kummer_m(1, -2, 1.0)
    with pytest.raises(DomainError):
        kummer_m(1, 0, 1.0)
    with pytest.raises(DomainError):
        kummer_m(1, 1, -1.0)


def test_kummer_cap():
    with pytest.raises(NumericalFailure):
        kummer_m(1.0, 1.0, 2e4)


def test_term_recurrence_structure():
    a, b, z = 0.7, 1.3, 2.5
    terms = [t for _, t in zip(range(6), kummer_terms(a, b, z))]
    for n in range(5):
        assert terms[n + 1] == terms[n] * ((a + n) / ((b + n) * (n + 1)) * z)


@settings(max_examples=200)
@given(st.floats(-3, 3), st.floats(0.25, 5), st.floats(0, 20))
def test_kummer_matches_mpmath(a, b, z):
    ref = float(mpmath.hyp1f1(a, b, z))
    assert kummer_m(a, b, z) == pytest.approx(ref, rel=1e-12, abs=1e-12 * math.exp(z))


def test_eigenfunction_examples():
    params = ModelParams(2, 2, 1, 0.5)
    f = eigenfunction(params, 1.0)  # alpha = delta/2
    assert f(2.0) == pytest.approx(math.e, rel=1e-14)
    assert GeneratorL(params).apply(f, 2.0) == pytest.approx(math.e, rel=1e-13)
    one = eigenfunction(params, 0.0)
    assert one.jet(3.0) == (1.0, 0.0, 0.0)
    p3 = ModelParams(2, 3, 1, 0.5)
    g = eigenfunction(p3, 1.0)
    assert abs(GeneratorL(p3).apply_fd(g, 1.0, h=1e-4) - g(1.0)) <= 1e-6
    assert abs(GeneratorL(p3).apply(g, 1.0) - g(1.0)) <= 1e-8
    with pytest.raises(DomainError):
        eigenfunction(ModelParams(2, 2, 0, 0.5), 1.0)


@settings(max_examples=60)
@given(st.floats(0.5, 3), st.floats(0.5, 6), st.floats(0.1, 3), st.floats(-2, 2), st.floats(0.05, 10))
def test_eigen_residual(sigma, delta, b, alpha, x):
    params = ModelParams(sigma, delta, b, 0.5)
    f = eigenfunction(params, alpha)
    gen = GeneratorL(params)
    c = sigma**2 * b * alpha / 4
    fx = f(x)
    assert abs(gen.apply(f, x) - c * fx) / (1 + abs(fx)) <= 1e-7
    assert abs(gen.apply_fd(f, x, h=1e-4) - c * fx) / (1 + abs(fx)) <= 1e-4 * (1 + abs(c))


@settings(max_examples=40)
@given(st.floats(0.5, 6), st.floats(0.1, 3), st.floats(-2, 2), st.floats(0.1, 9))
def test_derivative_consistency(delta, b, alpha, x):
    f = eigenfunction(ModelParams(1.0, delta, b, 0.5), alpha)
    h = 1e-5
    fd = (f(x + h) - f(x - h)) / (2 * h)
    assert fd == pytest.approx(f.derivative(x), rel=1e-6, abs=1e-6)


def test_exp_half_b():
    params = ModelParams(2, 2, 1.2, 0.5)
    f = exp_half_b(params)
    assert f.jet(1.0) == pytest.approx((math.exp(0.6), 0.6 * math.exp(0.6), 0.36 * math.exp(0.6)))


def test_harmonic_examples():
    h = harmonic_h(ModelParams(2, 2, 0, 0.5))
    assert h(0.0) == 0.0 and h(5.0) == 0.0
    assert h(-1.0) == pytest.approx(-0.5, abs=1e-12)
    params = ModelParams(2, 2, 1, 0.5)
    h = harmonic_h(params)
    gen = GeneratorL(params)
    assert abs(gen.apply_fd(h, -0.7, h=1e-4)) <= 1e-6
    assert abs(gen.apply(h, -0.7)) <= 1e-12


def test_harmonic_monotone():
    h = harmonic_h(ModelParams(1.5, 3, 0.5, 0.5))
    xs = np.linspace(-4, 0, 41)
    vals = [h(x) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] == 0.0


def test_harmonic_against_mpmath():
    params = ModelParams(2, 3, 0.8, 0.5)
    h = harmonic_h(params)
    ref = -mpmath.quad(lambda y: y**1.5 * mpmath.exp(0.4 * y), [0, 2.0])
    assert h(-2.0) == pytest.approx(float(ref), abs=1e-11)


def test_gate_shape():
    gate = Gate(2.0, 1.0)
    xs = np.linspace(0.01, 5, 400)
    g = np.array([gate.jet(x)[0] for x in xs])
    dg = np.array([gate.jet(x)[1] for x in xs])
    assert np.all(g > 0)
    assert np.all(dg[xs < 1.0] > 0) and np.all(dg[xs > 1.0] < 0)
    for knot in (0.5, 1.0):
        lo, hi = gate.jet(knot - 1e-9), gate.jet(knot + 1e-9)
        assert lo[0] == pytest.approx(hi[0], abs=1e-8)
        assert lo[1] == pytest.approx(hi[1], abs=1e-7)
    assert gate.jet(0.3)[0] == pytest.approx(0.3**3)


def test_f_g_examples():
    params = ModelParams(2, 2, 0.5, 0.5)
    c = 1.0
    f = f_g(params, c)
    assert f(0.0) == 0.0
    assert f.lf(2 * c) < 0
    xs = np.linspace(-2, 2 * c, 30)
    vals = [f(x) for x in xs]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    gen = GeneratorL(params)
    for x in (0.2, 0.7, 1.5, 2.5):
        assert gen.apply(f, x) == pytest.approx(f.lf(x), rel=1e-10, abs=1e-12)
        assert gen.apply_fd(f, x, h=1e-4) == pytest.approx(f.lf(x), rel=1e-4, abs=1e-6)
    # C^1 across 0
    assert f.derivative(-1e-9) == pytest.approx(f.derivative(1e-9), abs=1e-6)
    with pytest.raises(DomainError):
        f_g(params, 0.0)


def test_f_g_derivative_consistency():
    f = f_g(ModelParams(1.0, 3.0, 1.0, 0.5), 2.0)
    for x in (-1.0, 0.5, 1.0, 1.7, 3.0):
        h = 1e-5
        fd = (f(x + h) - f(x - h)) / (2 * h)
        assert fd == pytest.approx(f.derivative(x), rel=1e-6)
