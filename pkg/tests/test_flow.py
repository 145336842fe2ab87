import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fe_workbench.flow import (LOOP_MEASURE, TADPOLE_COEFFICIENT, P_polynomial, bound_check_thm1,
                               derivative_check, dot_scalar_propagator, integrate_flow, integrated_closed,
                               lam0_uniformity_probe, one_loop_rhs, one_loop_rhs_closed, scalar_propagator,
                               subtracted_bubble, tadpole_integral, tree_table)
from fe_workbench.momenta import symmetric_point

G = {"g4": 0.7, "g6": -1.3}


def test_constants():
    assert LOOP_MEASURE == pytest.approx(1 / (8 * math.pi**2), rel=1e-15)
    assert TADPOLE_COEFFICIENT == pytest.approx(math.sqrt(math.pi) / (16 * math.pi**2), rel=1e-15)


@pytest.mark.parametrize("lam", [0.01, 0.5, 1.0, 7.0])
def test_tadpole_against_extended_precision(lam):
    with mpmath.workdps(30):
        L = mpmath.mpf(lam)
        ref = mpmath.quad(lambda k: k**3 * (-4 * k**2 / L**5) * mpmath.exp(-(k**4) / L**4), [0, L, mpmath.inf])
        ref = ref / (8 * mpmath.pi**2)
    assert tadpole_integral(lam) == pytest.approx(float(ref), rel=1e-10)
    assert tadpole_integral(lam) == pytest.approx(-TADPOLE_COEFFICIENT * lam, rel=1e-10)


def test_dotted_propagator_is_scale_derivative():
    lam, lam0, h = 0.8, 5.0, 1e-5
    for k in (0.2, 0.8, 1.4):
        fd = (scalar_propagator(k, lam + h, lam0) - scalar_propagator(k, lam - h, lam0)) / (2 * h)
        assert float(dot_scalar_propagator(k, lam)) == pytest.approx(float(fd), rel=1e-7)


def test_rhs_matches_closed_form_and_ignores_momentum():
    for n in (2, 4):
        for lam in (0.3, 2.0):
            ref = one_loop_rhs_closed(G, lam, n=n, hbar=0.5)
            assert one_loop_rhs(G, lam, n=n, hbar=0.5) == pytest.approx(ref, rel=1e-10)
            for seed in range(3):
                cfg = symmetric_point(n, 1.0 + seed, seed=seed)
                assert one_loop_rhs(G, lam, cfg, n=n, hbar=0.5) == pytest.approx(ref, rel=1e-10)
    assert one_loop_rhs({}, 1.0) == 0.0
    with pytest.raises(ValueError):
        one_loop_rhs(G, 1.0, symmetric_point(3, 1.0), n=2)


@pytest.mark.parametrize("boundary", ["renormalized_at_0", "at_Lam0"])
def test_integrated_flow_matches_oracle(boundary):
    lam0 = 20.0
    sched = np.geomspace(0.05, lam0, 9)
    tab = integrate_flow(boundary, sched, G, lam0, n=2)
    for lam, v in zip(tab.Lams, tab.values[:, 0]):
        ref = integrated_closed(G, lam, lam0, boundary)
        assert abs(v - ref) <= 1e-8 * max(1.0, abs(ref))


def test_at_lam0_boundary_vanishes():
    tab = integrate_flow("at_Lam0", [1.0, 3.0], G, 3.0)
    assert tab.values[1, 0] == 0.0


def test_segment_additivity():
    lam0 = 8.0
    whole = integrate_flow("renormalized_at_0", [4.0], G, lam0).values[0, 0]
    pieces = integrate_flow("renormalized_at_0", [1.0, 2.5, 4.0], G, lam0).values[-1, 0]
    assert abs(whole - pieces) < 1e-9 * abs(whole)


def test_schedule_order_does_not_matter():
    a = integrate_flow("at_Lam0", [0.5, 2.0, 1.0], G, 4.0)
    b = integrate_flow("at_Lam0", [0.5, 1.0, 2.0], G, 4.0)
    assert a.values[2, 0] == pytest.approx(b.values[1, 0], rel=1e-12)


def test_flow_validation():
    with pytest.raises(ValueError):
        integrate_flow("nowhere", [1.0], G, 2.0)
    with pytest.raises(ValueError):
        integrate_flow("at_Lam0", [3.0], G, 2.0)
    with pytest.raises(ValueError):
        integrate_flow("at_Lam0", [], G, 2.0)
    with pytest.raises(ValueError):
        integrated_closed(G, 1.0, 2.0, "nowhere")


def test_derivative_check():
    tab = integrate_flow("renormalized_at_0", [0.5, 1.0, 3.0], G, 10.0)
    assert derivative_check(tab) < 1e-6


def test_table_serialization_and_scaling():
    tab = integrate_flow("renormalized_at_0", [0.5, 1.0], G, 10.0)
    d = tab.to_dict()
    assert d["boundary"] == "renormalized_at_0" and len(d["values"]) == 2
    assert tab.to_csv().splitlines()[0] == "Lam,config,p_norm,value"
    assert np.array_equal(tab.scaled(2.0).values, 2 * tab.values)
    with pytest.raises(ValueError):
        tab.values[0, 0] = 1.0


def test_P_polynomial_examples():
    cfg = symmetric_point(3, 1.0)
    # |p| and M equal 1-ish, so the first log+ vanishes for lam1 >= |p|
    assert P_polynomial(10.0, 1.0, 1, ((2.0, 5.0), (0.0, 3.0)), cfg) == pytest.approx(2.0)
    val = P_polynomial(10.0, math.e**2, 1, ((0.0, 0.0), (1.0, 3.0)), cfg)
    assert val == pytest.approx(1 + 3 * 2)
    with pytest.raises(ValueError):
        P_polynomial(1.0, 1.0, 1, ((-1.0, 0.0), (0.0, 0.0)), cfg)
    with pytest.raises(ValueError):
        P_polynomial(1.0, 1.0, 2, ((1.0, 0.0), (0.0, 0.0)), cfg)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(0.01, 100.0), st.floats(1.0, 10.0))
def test_P_polynomial_monotone(lam1, lam2, t):
    cfg = symmetric_point(3, 1.0)
    c = ((1.0, 0.5, 0.2), (0.0, 1.0, 0.3))
    base = P_polynomial(lam1, lam2, 2, c, cfg)
    assert P_polynomial(lam1 * t, lam2, 2, c, cfg) <= base + 1e-12
    assert P_polynomial(lam1, lam2 * t, 2, c, cfg) >= base - 1e-12


def test_degree_two_fit_feasible_and_scales():
    lam0 = 50.0
    tab = integrate_flow("renormalized_at_0", np.geomspace(0.1, lam0, 12), {"g4": 1.0}, lam0)
    # n = 2 at one loop: d = 2, degree r = 2
    rep = bound_check_thm1(tab, d=2, r=2)
    assert rep["feasible"] and rep["shape_consistent"]
    double = bound_check_thm1(tab.scaled(2.0), d=2, r=2)
    for key in ("P0", "P1"):
        assert np.allclose(double["coefficients"][key], 2 * np.asarray(rep["coefficients"][key]),
                           rtol=1e-6, atol=1e-9)


def test_wrong_dimension_flags_power_growth():
    lam0 = 50.0
    tab = integrate_flow("renormalized_at_0", np.geomspace(0.1, lam0, 12), {"g4": 1.0}, lam0)
    rep = bound_check_thm1(tab, d=0, r=2)
    assert not rep["shape_consistent"]


def test_tree_table():
    tab = tree_table({"g4": 0.25}, 4, [0.5, 1.0, 2.0], 2.0)
    assert np.all(tab.values == 0.25)
    rep = bound_check_thm1(tab, d=0, r=0)
    assert rep["feasible"] and rep["coefficients"]["P0"][0] == pytest.approx(0.25)


def test_subtracted_bubble_vanishes_at_zero_momentum():
    assert abs(subtracted_bubble(0.5, 4.0, 0.0)) < 1e-14
    assert subtracted_bubble(0.5, 4.0, 1.0) != 0.0
    with pytest.raises(ValueError):
        subtracted_bubble(2.0, 1.0, 1.0)


def test_lam0_uniformity_probe_passes():
    rep = lam0_uniformity_probe(0.5, 1.0, 4.0, doublings=3)
    assert rep["passed"]
    assert len(rep["values"]) == 4
