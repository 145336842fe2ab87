import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fe_workbench import series
from fe_workbench.regulator import (Regulator, bosonic_q_matrix, covariance, covariance_sweep,
                                    bound_sweep, derivative_tensor, prop, prop_deriv, prop_dlam0, prop_dot, sigma,
                                    sigma_window, sweep_csv)


def _direction(seed):
    d = np.random.default_rng(seed).normal(size=4)
    return d / np.linalg.norm(d)


def test_sigma_examples():
    assert sigma(2.0, 0.0) == 1.0
    assert sigma(1.5, 1.5**2) == pytest.approx(math.exp(-1))
    assert np.all(sigma_window(1.3, 1.3, np.linspace(0, 5, 11)) == 0.0)
    with pytest.raises(ValueError):
        sigma(0.0, 1.0)


def test_regulator_validation():
    with pytest.raises(ValueError):
        Regulator(2.0, 1.0)
    with pytest.raises(ValueError):
        Regulator(1.0, 2.0, xi=0.0)


def test_gauge_feynman_gauge_is_diagonal():
    reg = Regulator(0.7, 5.0, xi=1.0)
    p = np.array([0.3, -0.4, 1.1, 0.2])
    assert np.allclose(prop("gauge", p, reg), np.eye(4) * prop("ghost", p, reg), rtol=1e-14, atol=0)


def test_ghost_at_lam_squared_infinite_cutoff():
    lam = 1.3
    p = lam * _direction(0)
    val = prop("ghost", p, Regulator(lam, math.inf))
    assert val == pytest.approx((1 - math.exp(-1)) / lam**2, rel=1e-14)


def test_ghost_small_momentum_slope():
    # sigma_window(s)/s -> (1/Lam^4 - 1/Lam0^4) s; oracle in extended precision
    lam, lam0 = 1.0, 3.0
    reg = Regulator(lam, lam0)
    for s in (1e-12, 1e-9, 1e-5, 1e-2):
        p = math.sqrt(s) * _direction(1)
        with mpmath.workdps(50):
            ms = mpmath.mpf(float(p @ p))
            exact = (mpmath.exp(-ms**2 / mpmath.mpf(lam0) ** 4) - mpmath.exp(-ms**2 / mpmath.mpf(lam) ** 4)) / ms
        assert float(prop("ghost", p, reg)) == pytest.approx(float(exact), rel=1e-12)
    assert float(prop("ghost", np.zeros(4), reg)) == 0.0


def test_lam_zero_is_singular_at_origin():
    reg = Regulator(0.0, 2.0)
    with pytest.raises(ZeroDivisionError):
        prop("ghost", np.zeros(4), reg)
    p = np.array([0.5, 0, 0, 0])
    assert float(prop("ghost", p, reg)) == pytest.approx(math.exp(-(0.25**2) / 16) / 0.25, rel=1e-14)


def test_first_derivative_chain_rule():
    reg = Regulator(0.8, 4.0)
    p = np.array([0.4, 0.9, -0.3, 0.5])
    s = p @ p
    win = sigma_window(reg.Lam, reg.Lam0, s)
    dwin = 2 * s * (math.exp(-(s**2) / reg.Lam**4) / reg.Lam**4 - math.exp(-(s**2) / reg.Lam0**4) / reg.Lam0**4)
    for mu in range(4):
        expected = 2 * p[mu] * (dwin / s - win / s**2)
        assert float(prop_deriv("ghost", p, reg, (mu,))) == pytest.approx(expected, rel=1e-12)


def test_order_zero_is_prop_and_order_cap():
    reg = Regulator(1.0, 2.0)
    p = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.array_equal(prop_deriv("gauge", p, reg, ()), prop("gauge", p, reg))
    with pytest.raises(ValueError):
        prop_deriv("ghost", p, reg, (0, 0, 0, 0, 0))


def test_gauge_transverse_longitudinal():
    for xi in (0.1, 1.0, 7.0):
        reg = Regulator(0.5, 3.0, xi)
        p = 0.8 * _direction(2)
        s = p @ p
        win = sigma_window(reg.Lam, reg.Lam0, s)
        pp = np.outer(p, p) / s
        expected = win * ((np.eye(4) - pp) / s + xi * pp / s)
        C = prop("gauge", p, reg)
        assert np.allclose(C, C.T)
        assert np.allclose(C, expected, rtol=1e-13, atol=1e-15)


def _fd(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


@pytest.mark.parametrize("kind", ["ghost", "gauge"])
@pytest.mark.parametrize("ratio", [0.1, 1.0, 10.0])
def test_derivatives_match_finite_differences(kind, ratio):
    reg = Regulator(1.0, 5.0, xi=2.5)
    p = ratio * _direction(3)
    h = 1e-3 * max(ratio, 0.3)
    for order in range(1, 5):
        exact = derivative_tensor(kind, p, reg, order)
        lower = lambda q: derivative_tensor(kind, q, reg, order - 1)
        for mu in range(4):
            step = np.zeros(4)
            step[mu] = 1.0
            fd = _fd(lambda t: lower(p + t * step), 0.0, h)
            got = exact[(slice(None),) * (order - 1) + (mu,)]
            scale = np.abs(exact).max()
            assert np.abs(got - fd).max() <= 1e-6 * scale


@pytest.mark.parametrize("kind", ["ghost", "gauge"])
def test_prop_dot_matches_scale_difference(kind):
    # momenta where the scale derivatives are well above finite-difference noise
    lam, lam0 = 1.2, 6.0
    for pn in (0.1, 1.0, 1.5):
        p = pn * _direction(4)
        h = 1e-5 * lam
        fd = (prop(kind, p, Regulator(lam + h, lam0, 2.0)) - prop(kind, p, Regulator(lam - h, lam0, 2.0))) / (2 * h)
        exact = prop_dot(kind, p, Regulator(lam, lam0, 2.0))
        assert np.allclose(exact, fd, rtol=1e-6, atol=1e-6 * np.abs(exact).max())
        fd0 = (prop(kind, p, Regulator(lam, lam0 + h, 2.0)) - prop(kind, p, Regulator(lam, lam0 - h, 2.0))) / (2 * h)
        exact0 = prop_dlam0(kind, p, Regulator(lam, lam0, 2.0))
        assert np.allclose(exact0, fd0, rtol=1e-6, atol=1e-6 * np.abs(exact0).max())


def test_prop_dot_examples():
    lam = 0.9
    reg = Regulator(lam, 10.0)
    assert float(prop_dot("ghost", np.zeros(4), reg)) == 0.0
    p = lam * _direction(5)
    assert float(prop_dot("ghost", p, reg)) == pytest.approx(-4 / lam**3 * math.exp(-1), rel=1e-14)


def test_window_over_s_far_tail_against_mpmath():
    # both Gaussians tiny: the difference form cancels, the product form must not
    reg = Regulator(1.0, 1.5)
    for pn in (1.5, 2.5, 4.0):
        s = pn * pn
        h = reg.h_derivs(np.array(s), 4)
        with mpmath.workdps(60):
            f = lambda x: (mpmath.exp(-x**2 / mpmath.mpf(1.5) ** 4) - mpmath.exp(-x**2)) / x**2
            for k in range(5):
                ref = mpmath.diff(f, mpmath.mpf(s), k)
                assert float(h[k]) == pytest.approx(float(ref), rel=1e-11)


def _series_prop(kind, p, u, reg, w):
    # independent path: compose exp, product and reciprocal of truncated series along p + t u
    X = series.vector(p, u, None, (w + 1, 1))
    r = series.norm_sq(X)
    r2 = series.mul(r, r)
    win = series.exp(-r2 / reg.Lam0**4) - series.exp(-r2 / reg.Lam**4)
    ghost = series.mul(win, series.reciprocal(r))
    if kind == "ghost":
        return series.coefficient_derivative(ghost, w)
    inv = series.reciprocal(r)
    long = series.mul(series.tensor_power(X, 2), series.mul(win, series.mul(inv, inv)))
    full = np.eye(4)[:, :, None, None] * ghost + (reg.xi - 1) * long
    return series.coefficient_derivative(full, w)


@pytest.mark.parametrize("kind", ["ghost", "gauge"])
def test_two_evaluation_paths_agree(kind):
    reg = Regulator(0.7, 3.0, xi=4.0)
    for seed, pn in enumerate((0.2, 0.7, 1.5, 2.5)):
        p = pn * _direction(10 + seed)
        u = _direction(20 + seed)
        for w in range(5):
            t = derivative_tensor(kind, p, reg, w)
            contracted = t
            for _ in range(w):
                contracted = np.tensordot(u, contracted, axes=([0], [0]))
            ref = _series_prop(kind, p, u, reg, w)
            scale = max(np.abs(ref).max(), 1e-300)
            assert np.abs(contracted - ref).max() <= 1e-8 * scale


def test_covariance_single_point():
    reg = Regulator(0.3, 1.0, xi=2.0)
    p = np.array([0.2, -0.5, 0.4, 0.1])
    cov = covariance(p, reg)
    assert np.abs(cov.matrix @ cov.inverse - np.eye(7)).max() < 1e-10
    sinv = 1 / float(reg.window(p @ p))
    assert np.allclose(cov.eigenvalues[:3], sinv)
    assert abs(cov.eigenvalues[3] * cov.eigenvalues[4] - sinv) < 1e-10 * sinv
    ev = np.sort_complex(np.linalg.eigvals(bosonic_q_matrix(p, reg)))
    assert np.allclose(ev, np.sort_complex(cov.eigenvalues), rtol=1e-10)


def test_covariance_requires_open_window():
    with pytest.raises(ValueError):
        covariance(np.ones(4), Regulator(1.0, 1.0))
    # the window underflows to zero far beyond Lam0
    with pytest.raises(ValueError):
        covariance(np.array([30.0, 0, 0, 0]), Regulator(0.5, 1.0))


def test_covariance_sweep_small_grid():
    res = covariance_sweep(points=4)
    assert res["points"] == 64
    assert res["max_inverse_error"] < 1e-10
    assert res["max_q4q5_error"] < 1e-10
    assert res["min_relative_real_q45"] > 0
    assert res["max_eigenvalue_error"] < 1e-8


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 20.0), st.floats(1.01, 1e3), st.floats(0.1, 10.0), st.integers(0, 1000))
def test_gauge_symmetric_and_bounded(pn, ratio, xi, seed):
    reg = Regulator(1.0, ratio, xi)
    p = pn * _direction(seed)
    C = prop("gauge", p, reg)
    assert np.allclose(C, C.T, rtol=0, atol=1e-15 * np.abs(C).max())
    # the window lies in [0, 1], so the ghost propagator is at most 1/p^2
    S = float(prop("ghost", p, reg))
    assert 0 <= S <= 1 / pn**2 * (1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.1, 10.0), st.integers(0, 1000))
def test_covariance_property(pn, xi, seed):
    reg = Regulator(0.4, 1.0, xi)
    cov = covariance(pn * _direction(seed), reg)
    assert np.abs(cov.matrix @ cov.inverse - np.eye(7)).max() < 1e-10
    assert cov.eigenvalues[3].real > 0 and cov.eigenvalues[4].real > 0


def test_derivative_tensor_is_symmetric():
    reg = Regulator(1.0, 4.0, 3.0)
    p = 0.6 * _direction(30)
    t = derivative_tensor("gauge", p, reg, 3)
    for perm in itertools.permutations(range(3)):
        assert np.array_equal(t, np.transpose(t, perm + (3, 4)))


def test_bound_sweep_rows():
    rows = bound_sweep(("ghost",), Lams=(1.0,), Lam0_ratios=(10.0,), p_ratios=(0.5, 2.0), ws=(0, 2))
    assert len(rows) == 4
    for r in rows:
        assert r["ratio"] == pytest.approx(r["value_norm"] / r["bound"])
        assert r["bound"] == pytest.approx(math.factorial(r["w_norm"]) / (r["Lam"] + r["p_norm"]) ** (r["w_norm"] + 2))
    r0 = [r for r in rows if r["w_norm"] == 0 and r["p_norm"] == 0.5][0]
    reg = Regulator(1.0, 10.0)
    assert r0["value_norm"] == pytest.approx(abs(float(prop("ghost", 0.5 * _direction(0), reg))), rel=1e-12)


def test_bound_sweep_gauge_covers_xi_and_csv():
    rows = bound_sweep(("ghost", "gauge"), Lams=(1.0,), Lam0_ratios=(10.0,), xis=(0.5, 2.0), p_ratios=(1.0,), ws=(1,))
    assert sorted((r["kind"], r["xi"]) for r in rows) == [("gauge", 0.5), ("gauge", 2.0), ("ghost", 0.5)]
    text = sweep_csv(rows).splitlines()
    assert text[0] == "kind,Lam,Lam0,xi,p_norm,w_norm,value_norm,bound,ratio"
    assert len(text) == 4
