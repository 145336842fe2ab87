import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fe_workbench.momenta import (MomentumConfig, check_multi_index, classify, coplanar_point, eta,
                                  gram_rank, multi_indices, symmetric_point)


def test_momentum_conservation_enforced():
    cfg = MomentumConfig(n=3, M=1.0, p=np.array([[9.0, 9, 9, 9], [1, 2, 3, 4], [0, 1, 0, 1]]))
    assert np.array_equal(cfg.p[0], -(cfg.p[1] + cfg.p[2]))
    assert np.array_equal(cfg.p.sum(axis=0), np.zeros(4))


def test_norm_sums_all_momenta():
    cfg = MomentumConfig.from_independent([[1.0, 0, 0, 0], [0, 2.0, 0, 0]])
    assert cfg.norm == pytest.approx(np.sqrt(1 + 4 + 5))


def test_json_roundtrip():
    cfg = symmetric_point(4, 2.0, seed=3)
    back = MomentumConfig.from_json(cfg.to_json())
    assert back.n == 4 and back.M == 2.0
    assert np.allclose(back.p, cfg.p, atol=1e-15)


def test_eta_two_point_large_momentum():
    cfg = MomentumConfig.from_independent([[2.0, 0, 0, 0]], M=1.0)
    assert eta(cfg) == 1.0


def test_eta_two_point_zero_is_exceptional():
    cfg = MomentumConfig.from_independent([[0.0, 0, 0, 0]])
    assert eta(cfg) == 0.0
    assert classify(cfg) == "exceptional"


def test_eta_symmetric_three_point():
    assert eta(symmetric_point(3, 1.0)) == pytest.approx(1.0, rel=1e-12)


def test_eta_rejects_large_n():
    cfg = MomentumConfig.from_independent(np.ones((20, 4)))
    with pytest.raises(ValueError):
        eta(cfg)


def test_classify_examples():
    assert classify(symmetric_point(3, 1.0), 0.5) == "in_M_n"
    p = np.array([0.3, 0.1, 0.0, 0.2])
    assert classify(MomentumConfig.from_independent([p, -p])) == "exceptional"
    small = MomentumConfig.from_independent([[0.1, 0, 0, 0], [0, 0.1, 0, 0]])
    assert classify(small, 0.5) == "nonexceptional"


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_symmetric_point_inner_products(n):
    M = 1.7
    cfg = symmetric_point(n, M, seed=n)
    q = cfg.independent
    target = M**2 / (n - 1) * (n * np.eye(n - 1) - 1)
    assert np.allclose(q @ q.T, target, rtol=1e-12, atol=1e-12 * M**2)


def test_symmetric_point_examples():
    assert symmetric_point(2, 1.0).independent[0] @ symmetric_point(2, 1.0).independent[0] == pytest.approx(1.0)
    q = symmetric_point(3, 1.0).independent
    assert q[0] @ q[1] == pytest.approx(-0.5)
    q = symmetric_point(5, 1.0).independent
    assert np.allclose(np.diag(q @ q.T), 1.0)
    assert q[0] @ q[3] == pytest.approx(-0.25)


def test_symmetric_point_dimension_limit():
    with pytest.raises(ValueError):
        symmetric_point(6, 1.0)


def test_symmetric_point_in_M_n_for_c_near_one():
    for n in range(2, 6):
        assert classify(symmetric_point(n, 1.0, seed=1), 1 - 1e-9) == "in_M_n"


@pytest.mark.parametrize("n", [3, 4, 5])
def test_coplanar_point(n):
    cfg = coplanar_point(n, 1.0, seed=2)
    assert gram_rank(cfg.p) == 2
    assert eta(cfg) > 0.5
    assert classify(cfg, 0.5) == "in_M_n"


def test_planar_equilateral_triangle():
    # three unit vectors at 120 degrees: p_i^2 = M^2, |p_1 + p_2| = M
    ang = 2 * np.pi / 3
    q = np.array([[1.0, 0, 0, 0], [np.cos(ang), np.sin(ang), 0, 0]])
    cfg = MomentumConfig.from_independent(q)
    assert eta(cfg) == pytest.approx(1.0)
    assert gram_rank(cfg.p) == 2


def test_multi_indices():
    ws = list(multi_indices(4, 2))
    assert all(w[0] == 0 and sum(w) == 2 for w in ws)
    assert len(ws) == 6  # two derivatives on three momenta
    with pytest.raises(ValueError):
        check_multi_index((1, 0, 0), 3)
    with pytest.raises(ValueError):
        check_multi_index((0, 5, 0), 3)


vectors = arrays(np.float64, (3, 4), elements=st.floats(-3, 3, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(vectors)
def test_eta_permutation_invariant(q):
    base = eta(MomentumConfig.from_independent(q))
    assert base <= 1.0
    for perm in itertools.permutations(range(3)):
        assert eta(MomentumConfig.from_independent(q[list(perm)])) == pytest.approx(base, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(vectors, st.floats(0.05, 0.95))
def test_eta_monotone_under_shrinking(q, t):
    cfg = MomentumConfig.from_independent(q)
    e = eta(cfg)
    if e < 1.0:
        assert eta(cfg.scaled(t)) <= e + 1e-12


@settings(max_examples=40, deadline=None)
@given(vectors)
def test_sum_is_zero(q):
    cfg = MomentumConfig.from_independent(q)
    assert np.allclose(cfg.p.sum(axis=0), 0.0, atol=1e-12)
