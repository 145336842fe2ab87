"""Momentum configurations, exceptionality and renormalization-point geometry.

A configuration holds n four-momenta whose sum vanishes.  Only the last n-1
are free; the first one is stored as the negative of their sum.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.stats import ortho_group

W_MAX = 4
MAX_ETA_POINTS = 20
DIM = 4


@dataclass(frozen=True, eq=False)
class MomentumConfig:
    """n Euclidean four-momenta summing to zero, with a mass scale M."""

    n: int
    M: float
    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (self.n, DIM):
            raise ValueError(f"expected momenta of shape ({self.n}, 4), got {p.shape}")
        if self.n < 2:
            raise ValueError("need at least two momenta")
        if not self.M > 0:
            raise ValueError("mass scale M must be positive")
        p = p.copy()
        p[0] = -p[1:].sum(axis=0)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_independent(cls, q, M: float = 1.0) -> "MomentumConfig":
        """Build from the n-1 independent momenta p_1..p_{n-1}."""
        q = np.atleast_2d(np.asarray(q, dtype=float))
        p = np.vstack([np.zeros((1, DIM)), q])
        return cls(n=p.shape[0], M=float(M), p=p)

    @property
    def independent(self) -> np.ndarray:
        return self.p[1:]

    @property
    def norm(self) -> float:
        """|p| = sqrt(sum_i p_i^2) over all n momenta."""
        return float(np.sqrt(np.sum(self.p**2)))

    def scaled(self, t: float) -> "MomentumConfig":
        return MomentumConfig.from_independent(t * self.independent, self.M)

    def to_dict(self) -> dict:
        return {"n": self.n, "M": self.M, "p": self.p.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "MomentumConfig":
        p = np.asarray(d["p"], dtype=float)
        if p.shape[0] != d["n"]:
            raise ValueError("n does not match the number of momenta")
        return cls.from_independent(p[1:], d["M"])

    @classmethod
    def from_json(cls, text: str) -> "MomentumConfig":
        return cls.from_dict(json.loads(text))


def _subset_masks(k: int) -> np.ndarray:
    # every nonempty subset of k items as a 0/1 row
    codes = np.arange(1, 2**k)
    return ((codes[:, None] >> np.arange(k)) & 1).astype(float)


def subset_sums(cfg: MomentumConfig) -> np.ndarray:
    """Norms of all nonempty subsums of p_1..p_{n-1}."""
    masks = _subset_masks(cfg.n - 1)
    return np.linalg.norm(masks @ cfg.independent, axis=1)


def eta(cfg: MomentumConfig) -> float:
    """Distance from exceptionality: min over nonempty subsums of min(|sum|, M)."""
    if cfg.n > MAX_ETA_POINTS:
        raise ValueError(f"eta enumerates 2^(n-1) subsets; n={cfg.n} exceeds {MAX_ETA_POINTS}")
    return float(min(subset_sums(cfg).min(), cfg.M))


def classify(cfg: MomentumConfig, c: float = 0.5) -> str:
    """Return 'in_M_n', 'nonexceptional' or 'exceptional'."""
    e = eta(cfg)
    sq = np.sum(cfg.independent**2, axis=1)
    # squared norms are compared with a relative slack so that points built
    # to sit on the sphere p_i^2 = M^2 are not rejected by rounding
    if e > c * cfg.M and np.all(sq <= cfg.M**2 * (1 + 1e-12)):
        return "in_M_n"
    if e > 0:
        return "nonexceptional"
    return "exceptional"


def symmetric_gram(n: int, M: float) -> np.ndarray:
    """Target inner products p_i.p_j = M^2 (n delta_ij - 1)/(n-1), i,j >= 1."""
    k = n - 1
    return M**2 * (n * np.eye(k) - np.ones((k, k))) / k


def symmetric_point(n: int, M: float = 1.0, seed: int = 0) -> MomentumConfig:
    """A point of the symmetric renormalization set for n external legs."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if n - 1 > DIM:
        raise ValueError(f"n-1={n - 1} vectors with the symmetric Gram matrix need more than {DIM} dimensions")
    L = np.linalg.cholesky(symmetric_gram(n, M))
    q = np.zeros((n - 1, DIM))
    q[:, : n - 1] = L
    rot = ortho_group.rvs(DIM, random_state=seed)
    return MomentumConfig.from_independent(q @ rot.T, M)


def gram_rank(vectors, rel_tol: float = 1e-10) -> int:
    s = np.linalg.svd(np.atleast_2d(vectors), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def coplanar_point(n: int, M: float = 1.0, seed: int = 0, c: float = 0.5, max_tries: int = 20000) -> MomentumConfig:
    """A point of M_n whose momenta span exactly a 2-plane."""
    if n < 3:
        raise ValueError("coplanar points need n >= 3")
    rng = np.random.default_rng(seed)
    frame = ortho_group.rvs(DIM, random_state=rng)[:2]
    for _ in range(max_tries):
        angles = rng.uniform(0, 2 * np.pi, n - 1)
        radii = M * rng.uniform(0.7, 1.0, n - 1)
        plane = np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
        cfg = MomentumConfig.from_independent(plane @ frame, M)
        if gram_rank(cfg.p) == 2 and classify(cfg, c) == "in_M_n":
            return cfg
    raise RuntimeError(f"no coplanar point found for n={n} after {max_tries} tries")


def check_multi_index(w, n: int) -> tuple:
    """Validate a derivative multi-index (w_0, ..., w_{n-1})."""
    w = tuple(int(x) for x in w)
    if len(w) != n:
        raise ValueError(f"multi-index has {len(w)} entries, expected {n}")
    if any(x < 0 for x in w):
        raise ValueError("multi-index entries must be nonnegative")
    if w[0] != 0:
        raise ValueError("w_0 must vanish: p_0 is not an independent momentum")
    if sum(w) > W_MAX:
        raise ValueError(f"|w| = {sum(w)} exceeds w_max = {W_MAX}")
    return w


def multi_indices(n: int, total: int):
    """All multi-indices of length n with w_0 = 0 and |w| = total."""
    for comp in itertools.product(range(total + 1), repeat=n - 1):
        if sum(comp) == total:
            yield (0,) + comp
