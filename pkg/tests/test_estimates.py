import math

import mpmath
import pytest

from fe_workbench.estimates import (CASE_IDS, CASES, f_lemma_derivative, f_lemma_derivative_direct,
                                    h_lemma_derivative, log_plus, parse_axes, verify, verify_c16)


def test_case_list():
    assert len(CASE_IDS) == 22
    assert {"int3", "twin", "frac", "int7", "dS", "dC", "c16"} <= set(CASE_IDS)
    for cid in ("int3", "twin", "frac", "int7"):
        assert CASES[cid].paper_constant is not None


def test_log_plus():
    assert log_plus(0.5) == 0.0
    assert log_plus(math.e) == pytest.approx(1.0)


def test_int3_closed_form_k0():
    # int_Lam^eta dl/(l+eta) = log(2 eta/(Lam+eta)) < log 2
    pt = {"Lam": 0.1, "eta": 2.0, "M": 5.0, "k": 0}
    lhs, shape = CASES["int3"].evaluate(pt)
    assert lhs == pytest.approx(math.log(4.0 / 2.1), rel=1e-10)
    assert lhs < CASES["int3"].paper_constant(pt) * shape


def test_twin_k0_closed_form():
    lam, p, q = 0.3, 2.0, 0.5
    ref = math.log((lam + p) / (lam + q)) / (p - q)
    lhs, _ = CASES["twin"].evaluate({"Lam": lam, "p": p, "q": q, "P": 5.0, "k": 0})
    assert lhs == pytest.approx(ref, rel=1e-10)


def test_int3_monotone_in_lower_limit():
    vals = [CASES["int3"].evaluate({"Lam": lam, "eta": 1.0, "M": 1.0, "k": 2})[0] for lam in (0.01, 0.1, 0.5)]
    assert vals[0] >= vals[1] >= vals[2] >= 0


def test_twin_monotone_in_lower_limit():
    vals = [CASES["twin"].evaluate({"Lam": lam, "p": 2.0, "q": 1.0, "P": 10.0, "k": 1})[0] for lam in (0.01, 1.0, 5.0)]
    assert vals[0] >= vals[1] >= vals[2] >= 0


@pytest.mark.parametrize("w", range(5))
def test_f_lemma_direct_agrees(w):
    for x in (1.0, 3.0, 20.0):
        for beta in (0.0, 0.3):
            assert f_lemma_derivative(x, beta, w) == pytest.approx(f_lemma_derivative_direct(x, beta, w), rel=1e-9)


@pytest.mark.parametrize("w", range(4))
def test_h_lemma_against_mpmath(w):
    beta = 0.4
    for x in (0.3, 1.2, 2.5):
        with mpmath.workdps(40):
            ref = mpmath.diff(lambda t: (mpmath.exp(-beta * t**2) - mpmath.exp(-t**2)) / t, mpmath.mpf(x), w)
        assert h_lemma_derivative(x, beta, w) == pytest.approx(abs(float(ref)), rel=1e-9)


def test_parse_axes():
    axes = parse_axes({"k": [0, 1], "Lam": {"logspace": [0.1, 10, 3]}, "x": {"linspace": [0, 1, 2]}})
    assert axes["k"] == [0, 1]
    assert axes["Lam"] == pytest.approx([0.1, 1.0, 10.0])
    assert axes["x"] == [0.0, 1.0]
    with pytest.raises(ValueError):
        parse_axes({"Lam": {"bogus": 1}})


def test_verify_rejects_bad_input():
    with pytest.raises(ValueError):
        verify("nope")
    with pytest.raises(ValueError):
        verify("int3", {"zzz": [1.0]})
    with pytest.raises(ValueError):
        verify("int3", {"k": [9]})


@pytest.mark.parametrize("cid,grid", [
    ("int3", {"Lam": {"logspace": [0.01, 10, 5]}, "eta": {"logspace": [0.01, 10, 5]}}),
    ("int7", {"p": [0.1, 1.0, 10.0], "q": [0.0, 1.0], "Lamp": [0.1, 1.0]}),
    ("frac", {"r": [0.1, 1.0], "y": [0.0, 1.0, 10.0]}),
    ("twin", {"Lam": [0.1, 1.0], "q": [0.1, 1.0], "p": [1.0, 10.0], "P": [10.0, 100.0]}),
    ("f_lemma", {"x": [0.0, 1.0, 100.0]}),
    ("dS", {"Lam": [1.0], "Lam0_ratio": [10.0]}),
    ("dC", {"Lam": [1.0], "Lam0_ratio": [10.0], "xi": [1.0]}),
])
def test_verify_small_grids(cid, grid):
    rep = verify(cid, grid)
    assert rep.passed, rep.failures[:3]
    assert rep.points > 0 and math.isfinite(rep.fitted_constant)
    assert rep.max_ratio <= 1.0 + 1e-12
    d = rep.to_dict()
    assert d["case"] == cid and d["passed"]


@pytest.mark.parametrize("cid", ["twin2", "int4", "plog", "d402t", "df_lemma", "dS2", "dS3"])
def test_fitted_constant_cases_finite(cid):
    axes = CASES[cid].axes
    # thin every axis to its ends and middle to keep the run short
    grid = {k: sorted({v[0], v[len(v) // 2], v[-1]}, key=lambda x: (str(type(x)), x)) for k, v in axes.items()}
    rep = verify(cid, grid)
    assert rep.passed and math.isfinite(rep.fitted_constant)


def test_c16_fit_then_fresh_sample():
    rep = verify_c16({"Lam": [1.0], "Lam0_ratio": [1.5, 1000.0], "xi": [0.1, 10.0]}, fresh_points=300)
    assert rep.passed
    assert rep.extra["c0"] >= 0 and rep.extra["c1"] >= 0 and rep.extra["d"] >= 1
    assert rep.max_ratio < 1.0
