"""Tensor monomials built from Kronecker deltas and momenta in four dimensions.

A monomial of rank r is stored as a code tuple of length r: entry i is a
momentum number j >= 0 when slot i carries q_j, or -(k+1) when slot i is
paired by a delta with slot k.  Inner products between monomials are
computed by overlaying the two pairings: every closed loop of deltas
contributes a trace 4 and every open path ending on momenta q_x, q_y
contributes q_x . q_y.  This avoids building 4^r arrays for the Gram matrix.
"""
from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

DIM = 4
RANK_TOL = 1e-10
MAX_GRAM_RANK = 8
MAX_DENSE_RANK = 8


# --------------------------------------------------------------------------
# enumeration


@dataclass(frozen=True)
class TensorMonomial:
    code: tuple

    @property
    def rank(self) -> int:
        return len(self.code)

    @property
    def pairs(self) -> tuple:
        return tuple((i, -x - 1) for i, x in enumerate(self.code) if x < 0 and -x - 1 > i)

    @property
    def momentum_slots(self) -> tuple:
        return tuple((i, x) for i, x in enumerate(self.code) if x >= 0)

    @property
    def n_deltas(self) -> int:
        return len(self.pairs)

    @property
    def n_momenta(self) -> int:
        return len(self.momentum_slots)

    @property
    def groups(self) -> dict:
        """Slots carrying each momentum, V_j in the division language."""
        out = {}
        for i, j in self.momentum_slots:
            out.setdefault(j, []).append(i)
        return {j: tuple(v) for j, v in out.items()}

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "pairs": [list(p) for p in self.pairs],
            "momenta": [list(s) for s in self.momentum_slots],
        }

    def __str__(self):
        parts = [f"d({a},{b})" for a, b in self.pairs]
        parts += [f"q{j}({i})" for i, j in self.momentum_slots]
        return "*".join(parts) if parts else "1"


@lru_cache(maxsize=None)
def _codes(m: int, r: int) -> tuple:
    out = []

    def rec(code):
        try:
            i = code.index(None)
        except ValueError:
            out.append(tuple(code))
            return
        for j in range(m):
            code[i] = j
            rec(code)
        code[i] = None
        for k in range(i + 1, r):
            if code[k] is None:
                code[i] = -(k + 1)
                code[k] = -(i + 1)
                rec(code)
                code[k] = None
        code[i] = None

    rec([None] * r)
    # order by number of deltas (descending), then code
    out.sort(key=lambda c: (-sum(1 for x in c if x < 0), c))
    return tuple(out)


def enumerate_monomials(m: int, r: int) -> list:
    """All monomials of rank r in the deltas and m momenta."""
    if r < 0 or m < 0:
        raise ValueError("rank and momentum count must be nonnegative")
    if r > MAX_GRAM_RANK:
        raise ValueError(f"rank above {MAX_GRAM_RANK} is not supported")
    return [TensorMonomial(c) for c in _codes(m, r)]


def count_monomials(m: int, r: int) -> int:
    """Closed-form count: sum over s of C(r, 2s) (2s-1)!! m^(r-2s)."""
    total = 0
    for s in range(r // 2 + 1):
        k = r - 2 * s
        pairings = math.factorial(2 * s) // (2**s * math.factorial(s))
        total += math.comb(r, 2 * s) * pairings * m**k
    return total


# --------------------------------------------------------------------------
# evaluation


def evaluate_monomial(t: TensorMonomial, q) -> np.ndarray:
    """Dense component array of shape (4,)*r."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    r = t.rank
    if r > MAX_DENSE_RANK:
        raise ValueError("dense evaluation is limited to rank 8")
    if r == 0:
        return np.array(1.0)
    letters = string.ascii_letters[:r]
    ops, subs = [], []
    for a, b in t.pairs:
        ops.append(np.eye(DIM))
        subs.append(letters[a] + letters[b])
    for i, j in t.momentum_slots:
        if j >= q.shape[0]:
            raise ValueError(f"monomial uses q{j} but only {q.shape[0]} vectors given")
        ops.append(q[j])
        subs.append(letters[i])
    return np.einsum(",".join(subs) + "->" + letters, *ops)


def tensor_norm(x) -> float:
    return float(np.sqrt(np.sum(np.asarray(x) ** 2)))


def _overlay(ca, cb):
    """Loops and open paths of two overlaid pairings.

    Returns (number of closed loops, tuple of sorted momentum-label pairs).
    """
    r = len(ca)
    codes = (ca, cb)
    seen = [False] * r

    def walk(cur, side):
        # leave `cur` through `side` until a momentum slot ends the path
        while True:
            seen[cur] = True
            x = codes[side][cur]
            if x >= 0:
                return x
            cur = -x - 1
            seen[cur] = True
            side = 1 - side

    paths = []
    for start in range(r):
        if seen[start]:
            continue
        if ca[start] >= 0:
            paths.append(tuple(sorted((ca[start], walk(start, 1)))))
        elif cb[start] >= 0:
            paths.append(tuple(sorted((cb[start], walk(start, 0)))))
    loops = 0
    for start in range(r):
        if seen[start]:
            continue
        loops += 1
        cur, side = start, 0
        while True:
            seen[cur] = True
            cur = -codes[side][cur] - 1
            side = 1 - side
            if cur == start and side == 0:
                break
    return loops, tuple(sorted(paths))


@lru_cache(maxsize=None)
def _gram_pattern(m: int, r: int):
    """Loop counts and path-type counts for every pair of monomials."""
    codes = _codes(m, r)
    N = len(codes)
    types = [(x, y) for x in range(m) for y in range(x, m)]
    tindex = {t: i for i, t in enumerate(types)}
    loops = np.zeros((N, N), dtype=np.int64)
    counts = np.zeros((N, N, max(len(types), 1)), dtype=np.int64)
    for a in range(N):
        for b in range(a, N):
            lp, paths = _overlay(codes[a], codes[b])
            loops[a, b] = loops[b, a] = lp
            for pth in paths:
                counts[a, b, tindex[pth]] += 1
                if b != a:
                    counts[b, a, tindex[pth]] += 1
    return loops, counts, types


def gram_matrix(q, r: int, normalized: bool = True) -> np.ndarray:
    """Gram matrix (t_a, t_b) of all rank-r monomials in the vectors q."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    m = q.shape[0]
    loops, counts, types = _gram_pattern(m, r)
    inner = q @ q.T
    G = np.power(float(DIM), loops).astype(float)
    for k, (x, y) in enumerate(types):
        c = counts[:, :, k]
        if np.any(c):
            G = G * np.power(inner[x, y], c)
    if normalized:
        d = np.sqrt(np.diag(G))
        if np.any(d == 0):
            raise ValueError("a monomial vanishes identically; vectors are degenerate")
        G = G / np.outer(d, d)
    return G


def monomial_norms(q, r: int) -> np.ndarray:
    return np.sqrt(np.diag(gram_matrix(q, r, normalized=False)))


# --------------------------------------------------------------------------
# independence and decomposition


@dataclass
class IndependenceResult:
    independent: bool
    gram_min_eig: float
    rank: int
    size: int
    degenerate: bool


def independence(q, r: int) -> IndependenceResult:
    """Numerical rank of the normalized Gram matrix of rank-r monomials."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    m = q.shape[0]
    degenerate = np.linalg.matrix_rank(q, tol=RANK_TOL * max(np.abs(q).max(), 1e-300)) < m
    if degenerate:
        # a zero vector makes monomials vanish; report without normalizing
        G = gram_matrix(q, r, normalized=False)
    else:
        G = gram_matrix(q, r)
    ev = np.linalg.eigvalsh(G)
    top = ev.max()
    rank = int(np.sum(ev > RANK_TOL * top))
    return IndependenceResult(
        independent=(rank == G.shape[0] and not degenerate),
        gram_min_eig=float(ev.min()),
        rank=rank,
        size=G.shape[0],
        degenerate=bool(degenerate),
    )


def lemma_thresholds(m: int, D: int = DIM):
    """Largest rank guaranteed independent and smallest rank forced dependent."""
    return 2 * (D - m) + 1, 2 * (D - m + 1)


@dataclass
class InvariantField:
    """Rank-r tensor field of the momenta q_1..q_{n-1}."""

    rank: int
    evaluate: Callable
    n: int | None = None
    tags: dict = field(default_factory=dict)

    def __call__(self, q):
        return np.asarray(self.evaluate(np.atleast_2d(np.asarray(q, dtype=float))), dtype=float)


def covariance_error(F: InvariantField, q, seed: int = 0) -> float:
    """max |F(R q) - R^{(x)r} F(q)| for one random rotation R."""
    from scipy.stats import ortho_group

    q = np.atleast_2d(np.asarray(q, dtype=float))
    R = ortho_group.rvs(DIM, random_state=seed)
    lhs = F(q @ R.T)
    rhs = F(q)
    for axis in range(F.rank):
        rhs = np.moveaxis(np.tensordot(R, rhs, axes=([1], [axis])), 0, axis)
    return float(np.abs(lhs - rhs).max())


@dataclass
class Decomposition:
    monomials: list
    coefficients: np.ndarray
    residual: float

    def coefficient(self, t) -> float:
        code = t.code if isinstance(t, TensorMonomial) else tuple(t)
        for mono, c in zip(self.monomials, self.coefficients):
            if mono.code == code:
                return float(c)
        raise KeyError(code)


def decompose(F, q, r: int | None = None) -> Decomposition:
    """Coefficients F_t with F = sum_t F_t t over rank-r monomials in q."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if isinstance(F, InvariantField):
        r = F.rank if r is None else r
        arr = F(q)
    else:
        arr = np.asarray(F, dtype=float)
        r = arr.ndim if r is None else r
    if arr.shape != (DIM,) * r:
        raise ValueError(f"field has shape {arr.shape}, expected rank {r}")
    ind = independence(q, r)
    if not ind.independent:
        raise ValueError("monomials are linearly dependent: no unique decomposition")
    monos = enumerate_monomials(q.shape[0], r)
    G = gram_matrix(q, r, normalized=False)
    dense = [evaluate_monomial(t, q) for t in monos]
    b = np.array([np.sum(d * arr) for d in dense])
    # solve in the normalized basis for conditioning
    norms = np.sqrt(np.diag(G))
    Gn = G / np.outer(norms, norms)
    c = np.linalg.solve(Gn, b / norms) / norms
    recon = sum(ci * d for ci, d in zip(c, dense)) if dense else np.zeros_like(arr)
    scale = tensor_norm(arr)
    res = tensor_norm(arr - recon) / scale if scale > 0 else tensor_norm(recon)
    return Decomposition(monos, c, float(res))


def reconstruct(monomials, coefficients, q) -> np.ndarray:
    q = np.atleast_2d(np.asarray(q, dtype=float))
    out = None
    for t, c in zip(monomials, coefficients):
        term = c * evaluate_monomial(t, q)
        out = term if out is None else out + term
    return out


def delta_from_frame(q) -> np.ndarray:
    """delta_{mu nu} = sum_ij q_i (g^-1)_ij q_j for a full frame of 4 vectors."""
    q = np.asarray(q, dtype=float)
    g = q @ q.T
    return q.T @ np.linalg.solve(g, q)


# --------------------------------------------------------------------------
# constants of the invariant-field bound


def orthogonal_frame(m: int, M: float = 1.0) -> np.ndarray:
    return M * np.eye(DIM)[:m]


def lemma_rn_constant(r: int, n: int, m: int, M: float = 1.0, details: bool = False):
    """c = max(2^(r/2) |A0|, (n-1) sqrt(|A+| / (4 lambda_1))).

    |A0| counts pure-delta monomials of rank r, |A+| the ones with at least
    one momentum, and lambda_1 is the smallest eigenvalue of the normalized
    rank-(r+1) Gram matrix at an orthogonal frame with |e_i| = M.
    """
    if r not in (2, 4):
        raise ValueError("rank must be 2 or 4")
    if r + 1 > 9 - 2 * m:
        raise ValueError(f"r+1 = {r + 1} exceeds 9 - 2m = {9 - 2 * m}")
    monos = enumerate_monomials(m, r)
    a0 = sum(1 for t in monos if t.n_momenta == 0)
    aplus = len(monos) - a0
    G = gram_matrix(orthogonal_frame(m, M), r + 1)
    lam1 = float(np.linalg.eigvalsh(G).min())
    c = max(2 ** (r / 2) * a0, (n - 1) * math.sqrt(aplus / (4 * lam1)))
    if details:
        return c, {"A0": a0, "A_plus": aplus, "lambda_1": lam1}
    return c


def span_frame(q, M: float = 1.0, rel_tol: float = 1e-10) -> np.ndarray:
    """Orthogonal vectors of length M spanning the same space as q."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    u, s, vt = np.linalg.svd(q, full_matrices=False)
    k = int(np.sum(s > rel_tol * s[0]))
    # Gram-Schmidt on the right singular vectors is already orthonormal
    return M * vt[:k]


def field_gradient(F: InvariantField, q, h: float = 1e-4) -> list:
    """d F / d q_k for each k, shape (4,) + (4,)*r, by 4th-order central differences."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    grads = []
    for k in range(q.shape[0]):
        comps = []
        for mu in range(DIM):
            def at(step):
                qq = q.copy()
                qq[k, mu] += step
                return F(qq)
            comps.append((-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h))
        grads.append(np.stack(comps))
    return grads


@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool
    lhs_momentum_part: float
    rhs_momentum_part: float
    holds_momentum_part: bool
    constant: float
    delta_coefficients: list


def bound_check_73(F: InvariantField, q, M: float = 1.0, n: int | None = None, grads=None) -> BoundCheck:
    """Compare |F(q)| with c max(|F_t| over pure deltas, M |d_k F|).

    Also compares the momentum part of the decomposition with c max M |d_k F|.
    q holds the independent momenta q_1..q_{n-1}.
    """
    q = np.atleast_2d(np.asarray(q, dtype=float))
    n = q.shape[0] + 1 if n is None else n
    r = F.rank
    e = span_frame(q, M)
    m = e.shape[0]
    c = lemma_rn_constant(r, n, m, M)
    val = F(q)
    dec = decompose(val, e, r)
    delta_coefs = [abs(cf) for t, cf in zip(dec.monomials, dec.coefficients) if t.n_momenta == 0]
    if grads is None:
        grads = field_gradient(F, q)
    dmax = max(M * tensor_norm(g) for g in grads)
    lhs = tensor_norm(val)
    rhs = c * max(max(delta_coefs), dmax)
    mom = [(t, cf) for t, cf in zip(dec.monomials, dec.coefficients) if t.n_momenta > 0]
    mom_part = reconstruct([t for t, _ in mom], [cf for _, cf in mom], e) if mom else np.zeros_like(val)
    lhs2 = tensor_norm(mom_part)
    rhs2 = c * dmax
    return BoundCheck(lhs, rhs, bool(lhs <= rhs), lhs2, rhs2, bool(lhs2 <= rhs2), c,
                      [float(x) for x in delta_coefs])


# --------------------------------------------------------------------------
# randomized sweeps

MAX_CONDITION = 4.0


def generic_vectors(m: int, rng, max_condition: float = MAX_CONDITION) -> np.ndarray:
    """Gaussian m x 4 frame, redrawn until its condition number is at most
    max_condition (nearly collinear draws push Gram eigenvalues under RANK_TOL)."""
    while True:
        q = rng.normal(size=(m, DIM))
        sv = np.linalg.svd(q, compute_uv=False)
        if sv[-1] * max_condition >= sv[0]:
            return q


def threshold_sweep(ms=(1, 2, 3), trials: int = 100, seed: int = 0) -> dict:
    """Independence verdicts for random generic q at every rank up to the
    guaranteed-independent threshold and at the forced-dependent one."""
    rng = np.random.default_rng(seed)
    report = {}
    for m in ms:
        lo, hi = lemma_thresholds(m)
        wrong = 0
        for _ in range(trials):
            q = generic_vectors(m, rng)
            ok = all(independence(q, r).independent for r in range(1, lo + 1))
            ok = ok and not independence(q, hi).independent
            wrong += not ok
        report[str(m)] = {"independent_up_to": lo, "dependent_at": hi, "trials": trials,
                          "misclassified": wrong}
    return report


def roundtrip_sweep(trials: int = 500, seed: int = 0, ms=(1, 2, 3)) -> dict:
    """decompose(reconstruct(c)) for random m, rank and coefficients."""
    rng = np.random.default_rng(seed)
    worst_res = 0.0
    worst_coef = 0.0
    for _ in range(trials):
        m = int(rng.choice(ms))
        r = int(rng.integers(1, lemma_thresholds(m)[0] + 1))
        q = generic_vectors(m, rng)
        monos = enumerate_monomials(m, r)
        c = rng.normal(size=len(monos))
        dec = decompose(reconstruct(monos, c, q), q, r)
        worst_res = max(worst_res, dec.residual)
        worst_coef = max(worst_coef, float(np.linalg.norm(dec.coefficients - c) / np.linalg.norm(c)))
    return {"trials": trials, "max_residual": worst_res, "max_coefficient_error": worst_coef}
