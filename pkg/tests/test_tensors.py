import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ortho_group

from fe_workbench.tensors import (InvariantField, bound_check_73, count_monomials, covariance_error, decompose,
                                  delta_from_frame, enumerate_monomials, evaluate_monomial, gram_matrix,
                                  generic_vectors, independence, lemma_rn_constant, lemma_thresholds,
                                  orthogonal_frame, reconstruct, roundtrip_sweep, tensor_norm, threshold_sweep)


def _brute_count(m, r):
    # oracle: distinct dense tensors among all assignments of slots to
    # momenta or delta partners, at an orthonormal frame
    q = np.eye(4)[:m]
    seen = set()

    def rec(code):
        if None not in code:
            seen.add(tuple(code))
            return
        i = code.index(None)
        for j in range(m):
            rec(code[:i] + [j] + code[i + 1:])
        for k in range(i + 1, r):
            if code[k] is None:
                c = list(code)
                c[i], c[k] = -(k + 1), -(i + 1)
                rec(c)

    rec([None] * r)
    return len(seen)


@pytest.mark.parametrize("m,r", [(1, 1), (1, 3), (2, 2), (2, 4), (3, 3), (3, 5), (4, 2)])
def test_monomial_counts(m, r):
    monos = enumerate_monomials(m, r)
    assert len(monos) == count_monomials(m, r) == _brute_count(m, r)
    assert len({t.code for t in monos}) == len(monos)


def test_monomial_examples():
    assert len(enumerate_monomials(1, 1)) == 1
    two = enumerate_monomials(2, 2)
    assert len(two) == 5
    assert sum(1 for t in enumerate_monomials(3, 4) if t.n_deltas == 2) == 3
    for t in enumerate_monomials(2, 4):
        assert 2 * t.n_deltas + t.n_momenta == 4


def test_evaluate_examples():
    delta = [t for t in enumerate_monomials(1, 2) if t.n_deltas == 1][0]
    assert np.array_equal(evaluate_monomial(delta, np.ones((1, 4))), np.eye(4))
    qq = [t for t in enumerate_monomials(1, 2) if t.n_momenta == 2][0]
    val = evaluate_monomial(qq, [[1.0, 0, 0, 0]])
    assert val[0, 0] == 1.0 and np.count_nonzero(val) == 1


@pytest.mark.parametrize("m,r", [(1, 4), (2, 3), (3, 2), (2, 5)])
def test_norms_on_orthogonal_frame(m, r):
    M = 1.7
    q = orthogonal_frame(m, M)
    for t in enumerate_monomials(m, r):
        expected = 2**t.n_deltas * M**t.n_momenta
        assert tensor_norm(evaluate_monomial(t, q)) == pytest.approx(expected, rel=1e-14)


def test_norm_rule_two_to_the_s():
    # |delta| = sqrt(tr 1) = 2 in four dimensions
    delta = [t for t in enumerate_monomials(1, 2) if t.n_deltas == 1][0]
    assert tensor_norm(evaluate_monomial(delta, np.zeros((1, 4)))) == 2.0


def test_independence_examples():
    rng = np.random.default_rng(0)
    q2 = generic_vectors(2, rng)
    assert independence(q2, 5).independent
    assert not independence(q2, 6).independent
    q3 = generic_vectors(3, rng)
    assert all(independence(q3, r).independent for r in (1, 2, 3))
    assert lemma_thresholds(3)[0] == 3


def test_independence_flags_degenerate_input():
    q = np.array([[1.0, 0, 0, 0], [2.0, 0, 0, 0]])
    res = independence(q, 2)
    assert res.degenerate and not res.independent


def test_gram_psd_and_definiteness_matches_verdict():
    rng = np.random.default_rng(1)
    for m in (1, 2, 3):
        q = generic_vectors(m, rng)
        for r in range(1, 7):
            G = gram_matrix(q, r)
            assert np.allclose(G, G.T)
            ev = np.linalg.eigvalsh(G)
            assert ev.min() > -1e-10 * np.trace(G)
            assert (ev.min() > 1e-10 * ev.max()) == independence(q, r).independent


def test_decompose_delta():
    q = generic_vectors(2, np.random.default_rng(2))
    dec = decompose(np.eye(4), q, 2)
    for t, c in zip(dec.monomials, dec.coefficients):
        assert c == pytest.approx(1.0 if t.n_deltas == 1 else 0.0, abs=1e-12)


def test_decompose_symmetric_pair():
    q = generic_vectors(2, np.random.default_rng(3))
    F = np.outer(q[0], q[1]) + np.outer(q[1], q[0])
    dec = decompose(F, q, 2)
    ones = [t.code for t, c in zip(dec.monomials, dec.coefficients) if abs(c - 1) < 1e-10]
    assert sorted(ones) == [(0, 1), (1, 0)]
    assert np.sum(np.abs(dec.coefficients)) == pytest.approx(2.0, abs=1e-10)


def test_decompose_rejects_dependent_basis():
    q = generic_vectors(2, np.random.default_rng(4))
    with pytest.raises(ValueError):
        decompose(np.zeros((4,) * 6), q, 6)


def test_delta_from_full_frame():
    q = generic_vectors(4, np.random.default_rng(5))
    assert np.allclose(delta_from_frame(q), np.eye(4), atol=1e-10)


def test_lemma_constant_examples():
    c, info = lemma_rn_constant(2, 3, 2, details=True)
    assert info["A0"] == 1 and info["lambda_1"] > 0 and math.isfinite(c)
    _, info4 = lemma_rn_constant(4, 3, 1, details=True)
    assert info4["A0"] == 3
    with pytest.raises(ValueError):
        lemma_rn_constant(4, 4, 3)
    with pytest.raises(ValueError):
        lemma_rn_constant(3, 4, 1)


def _field_qq(q):
    return np.outer(q[0], q[0])


def test_bound_check_constant_field():
    F = InvariantField(2, lambda q: 3.0 * np.eye(4))
    chk = bound_check_73(F, generic_vectors(2, np.random.default_rng(6)))
    assert chk.holds
    assert max(chk.delta_coefficients) == pytest.approx(3.0)
    assert chk.lhs_momentum_part == pytest.approx(0.0, abs=1e-9)


def test_bound_check_momentum_field():
    F = InvariantField(2, _field_qq)
    chk = bound_check_73(F, generic_vectors(2, np.random.default_rng(7)))
    assert max(chk.delta_coefficients) == pytest.approx(0.0, abs=1e-10)
    assert chk.holds and chk.holds_momentum_part


def test_bound_check_random_polynomial_fields():
    rng = np.random.default_rng(8)
    for _ in range(100):
        a, b, c = rng.normal(size=3)
        F = InvariantField(2, lambda q, a=a, b=b, c=c: a * np.eye(4) * (q[0] @ q[1]) + b * np.outer(q[0], q[1])
                           + c * np.outer(q[1], q[1]))
        q = generic_vectors(2, rng)
        assert covariance_error(F, q, seed=1) < 1e-9
        chk = bound_check_73(F, q, M=1.0, n=3)
        assert chk.holds and chk.holds_momentum_part


def test_threshold_sweep_small():
    rep = threshold_sweep(trials=10, seed=3)
    assert all(v["misclassified"] == 0 for v in rep.values())


def test_roundtrip_sweep_small():
    rep = roundtrip_sweep(trials=40, seed=4)
    assert rep["max_residual"] < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6), st.floats(0.01, 100.0))
def test_verdict_invariant_under_rotation_and_scaling(m, seed, t):
    rng = np.random.default_rng(seed)
    q = generic_vectors(m, rng)
    R = ortho_group.rvs(4, random_state=seed)
    for r in range(1, lemma_thresholds(m)[1] + 1):
        base = independence(q, r).independent
        assert independence(q @ R.T, r).independent == base
        assert independence(t * q, r).independent == base


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6))
def test_decompose_reconstruct_identity(m, seed):
    rng = np.random.default_rng(seed)
    r = int(rng.integers(1, lemma_thresholds(m)[0] + 1))
    q = generic_vectors(m, rng)
    monos = enumerate_monomials(m, r)
    c = rng.normal(size=len(monos))
    F = reconstruct(monos, c, q)
    dec = decompose(F, q, r)
    assert dec.residual < 1e-10
    assert np.allclose(dec.coefficients, c, rtol=1e-8, atol=1e-8 * np.abs(c).max())


def test_monomials_are_rotation_covariant():
    q = generic_vectors(2, np.random.default_rng(9))
    for t in enumerate_monomials(2, 3):
        F = InvariantField(3, lambda x, t=t: evaluate_monomial(t, x))
        assert covariance_error(F, q, seed=2) < 1e-12


def test_code_symmetry():
    # each pair is stored at both slots
    for t in enumerate_monomials(2, 4):
        for a, b in t.pairs:
            assert t.code[a] == -(b + 1) and t.code[b] == -(a + 1)
        assert 2 * len(t.pairs) + len(t.momentum_slots) == 4
    assert list(itertools.chain.from_iterable(p for t in enumerate_monomials(1, 2) for p in t.pairs)) == [0, 1]
