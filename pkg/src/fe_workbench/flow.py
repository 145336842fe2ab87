"""Desk-scale one-loop flow in a scalar truncation and bound-shape checks.

The truncation keeps one scalar species with momentum-independent tree
vertices g_n and the ghost-type propagator S(k) = sigma_{Lam Lam0}(k^2)/k^2.
Every loop integral is reduced to a radial quadrature; the angular volume of
the unit three-sphere is 2 pi^2.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .chains import enumerate_chains  # noqa: F401  re-exported for the flow API
from .momenta import MomentumConfig, eta, symmetric_point
from .quadrature import DEFAULT_TOL, quad
from .regulator import sigma, sigma_window

ANGULAR_VOLUME = 2 * math.pi**2
LOOP_MEASURE = ANGULAR_VOLUME / (2 * math.pi) ** 4  # d^4k/(2pi)^4 -> LOOP_MEASURE k^3 dk
TADPOLE_COEFFICIENT = math.sqrt(math.pi) / (16 * math.pi**2)
BOUNDARIES = ("renormalized_at_0", "at_Lam0")
ANGLE_NODES = 48
TAIL_SLOPE_MAX = 0.5


def log_plus(x):
    """log max(1, x)."""
    return np.log(np.maximum(1.0, x))


def dot_sigma_window(s, Lam: float):
    """d/dLam sigma_{Lam Lam0}(s) = -d/dLam sigma_Lam(s); independent of Lam0."""
    return -4.0 * s**2 / Lam**5 * sigma(Lam, s)


def dot_scalar_propagator(k, Lam: float):
    """d/dLam of sigma_{Lam Lam0}(k^2)/k^2 as a function of |k|."""
    k = np.asarray(k, dtype=float)
    return -4.0 * k**2 / Lam**5 * np.exp(-(k**4) / Lam**4)


def scalar_propagator(k, Lam: float, Lam0: float):
    k = np.asarray(k, dtype=float)
    return sigma_window(Lam, Lam0, k**2) / k**2


def tree_vertex(couplings: dict, n: int) -> float:
    """Momentum-independent tree-level n-point vertex of the truncation."""
    return float(couplings.get(f"g{n}", 0.0))


def tadpole_integral(Lam: float, tol: float = DEFAULT_TOL) -> float:
    """int d^4k/(2pi)^4 of the dotted propagator, by radial quadrature."""
    if Lam <= 0:
        return 0.0
    val = quad(lambda k: k**3 * float(dot_scalar_propagator(k, Lam)), 0.0, tol=tol, scale=Lam)
    return LOOP_MEASURE * val


def one_loop_rhs(couplings: dict, Lam: float, cfg: MomentumConfig | None = None, n: int = 2,
                 hbar: float = 1.0, tol: float = DEFAULT_TOL) -> float:
    """One-loop flow rhs (hbar/2) int d^4k/(2pi)^4 Sdot(k) Gamma^{(n+2)}_tree.

    The tree vertex carries no momentum dependence, so the result does not
    depend on cfg.  The dotted propagator does not depend on Lam0 either.
    """
    if cfg is not None and cfg.n != n:
        raise ValueError(f"configuration has {cfg.n} legs, expected {n}")
    g = tree_vertex(couplings, n + 2)
    if g == 0.0:
        return 0.0
    return 0.5 * hbar * g * tadpole_integral(Lam, tol)


def one_loop_rhs_closed(couplings: dict, Lam: float, n: int = 2, hbar: float = 1.0) -> float:
    """Closed form of one_loop_rhs: -(hbar g/2) sqrt(pi)/(16 pi^2) Lam."""
    return -0.5 * hbar * tree_vertex(couplings, n + 2) * TADPOLE_COEFFICIENT * Lam


def integrated_closed(couplings: dict, Lam: float, Lam0: float, boundary: str, n: int = 2,
                      hbar: float = 1.0) -> float:
    """Closed-form integral of the one-loop rhs for either boundary."""
    c = -0.5 * hbar * tree_vertex(couplings, n + 2) * TADPOLE_COEFFICIENT
    if boundary == "renormalized_at_0":
        return c * Lam**2 / 2
    if boundary == "at_Lam0":
        return c * (Lam**2 - Lam0**2) / 2
    raise ValueError(f"boundary must be one of {BOUNDARIES}")


def mass_dimension(n: int, w_norm: int = 0) -> int:
    """d = 4 - n - |w| for a scalar field of dimension one."""
    return 4 - n - w_norm


@dataclass
class VertexTable:
    """Values of one vertex function on a (Lam, configuration) grid."""

    loop: int
    n: int
    Lam0: float
    Lams: np.ndarray
    configs: list
    values: np.ndarray  # shape (len(Lams), len(configs))
    boundary: str
    couplings: dict = field(default_factory=dict)
    hbar: float = 1.0

    def __post_init__(self):
        self.Lams = np.asarray(self.Lams, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.Lams), len(self.configs)):
            raise ValueError("values must have shape (len(Lams), len(configs))")
        self.values.setflags(write=False)

    def scaled(self, factor: float) -> "VertexTable":
        return VertexTable(self.loop, self.n, self.Lam0, self.Lams, self.configs,
                           factor * self.values, self.boundary, dict(self.couplings), self.hbar)

    def to_dict(self) -> dict:
        return {
            "loop": self.loop,
            "n": self.n,
            "Lam0": self.Lam0,
            "boundary": self.boundary,
            "couplings": dict(self.couplings),
            "hbar": self.hbar,
            "Lams": self.Lams.tolist(),
            "configs": [c.to_dict() for c in self.configs],
            "values": self.values.tolist(),
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf)
        wr.writerow(["Lam", "config", "p_norm", "value"])
        for i, lam in enumerate(self.Lams):
            for j, c in enumerate(self.configs):
                wr.writerow([repr(float(lam)), j, repr(c.norm), repr(float(self.values[i, j]))])
        return buf.getvalue()


def _default_configs(n: int):
    return [symmetric_point(n, 1.0, seed=0)] if n <= 5 else []


def _check_schedule(schedule, Lam0: float) -> np.ndarray:
    Lams = np.asarray(schedule, dtype=float)
    if Lams.ndim != 1 or Lams.size == 0:
        raise ValueError("schedule must be a nonempty 1d sequence")
    if np.any(Lams <= 0) or np.any(Lams > Lam0):
        raise ValueError("schedule must lie in (0, Lam0]")
    return Lams


def integrate_flow(boundary: str, schedule, couplings: dict, Lam0: float, n: int = 2, configs=None,
                   hbar: float = 1.0, tol: float = DEFAULT_TOL) -> VertexTable:
    """Integrate dGamma/dLam = one_loop_rhs over a Lam schedule.

    'renormalized_at_0' integrates upward from Lam = 0 with a vanishing
    condition there; 'at_Lam0' integrates downward from Lam0 with a vanishing
    boundary value.  Neighbouring schedule points are joined segment by
    segment and the segment integrals are accumulated.
    """
    if boundary not in BOUNDARIES:
        raise ValueError(f"boundary must be one of {BOUNDARIES}")
    if not Lam0 > 0:
        raise ValueError("Lam0 must be positive")
    Lams = _check_schedule(schedule, Lam0)
    configs = list(configs) if configs is not None else _default_configs(n)

    def rhs(lam):
        return one_loop_rhs(couplings, lam, n=n, hbar=hbar, tol=tol)

    order = np.argsort(Lams)
    srt = Lams[order]
    acc = np.empty_like(srt)
    if boundary == "renormalized_at_0":
        prev, total = 0.0, 0.0
        for i, lam in enumerate(srt):
            total += quad(rhs, prev, lam, tol=tol)
            acc[i], prev = total, lam
    else:
        prev, total = Lam0, 0.0
        for i in reversed(range(len(srt))):
            total -= quad(rhs, srt[i], prev, tol=tol)
            acc[i], prev = total, srt[i]
    vals = np.empty(len(Lams))
    vals[order] = acc
    values = np.repeat(vals[:, None], len(configs), axis=1)
    return VertexTable(1, n, float(Lam0), Lams, configs, values, boundary, dict(couplings), hbar)


def tree_table(couplings: dict, n: int, schedule, Lam0: float, configs=None) -> VertexTable:
    """Tree-level table: the bare coupling at every grid point."""
    Lams = _check_schedule(schedule, Lam0)
    configs = list(configs) if configs is not None else _default_configs(n)
    values = np.full((len(Lams), len(configs)), tree_vertex(couplings, n))
    return VertexTable(0, n, float(Lam0), Lams, configs, values, "tree", dict(couplings))


def derivative_check(table: VertexTable, rel_step: float = 1e-4, tol: float = DEFAULT_TOL) -> float:
    """Max relative mismatch between a central difference of the integrated
    table and one_loop_rhs at interior schedule points."""
    worst = 0.0
    for lam in table.Lams:
        h = rel_step * lam
        if lam - h <= 0 or lam + h > table.Lam0:
            continue
        pair = integrate_flow(table.boundary, [lam - h, lam + h], table.couplings, table.Lam0,
                              n=table.n, configs=table.configs[:1], hbar=table.hbar, tol=tol)
        fd = (pair.values[1, 0] - pair.values[0, 0]) / (2 * h)
        exact = one_loop_rhs(table.couplings, lam, n=table.n, hbar=table.hbar, tol=tol)
        worst = max(worst, abs(fd - exact) / max(abs(exact), 1e-300))
    return worst


def P_polynomial(lam1: float, lam2: float, s: int, coeffs, cfg: MomentumConfig) -> float:
    """P0_s(log+(max(|p|, M)/(lam1 + eta))) + P1_s(log+(lam2/M)).

    coeffs is a pair (c0, c1) of length-(s+1) coefficient lists, lowest
    degree first, all nonnegative.
    """
    c0, c1 = (np.asarray(c, dtype=float) for c in coeffs)
    if c0.shape != (s + 1,) or c1.shape != (s + 1,):
        raise ValueError(f"each coefficient list needs {s + 1} entries")
    if np.any(c0 < 0) or np.any(c1 < 0):
        raise ValueError("polynomial coefficients must be nonnegative")
    x = float(log_plus(max(cfg.norm, cfg.M) / (lam1 + eta(cfg))))
    y = float(log_plus(lam2 / cfg.M))
    return float(np.polyval(c0[::-1], x) + np.polyval(c1[::-1], y))


def _log_features(table: VertexTable):
    # per grid point: base (Lam + |p|), x = log+ argument of P0, y = log+ argument of P1
    rows = []
    for i, lam in enumerate(table.Lams):
        for j, c in enumerate(table.configs):
            x = float(log_plus(max(c.norm, c.M) / (lam + eta(c))))
            y = float(log_plus(lam / c.M))
            rows.append((i, j, lam + c.norm, x, y))
    return rows


def _design(rows, d: int, r: int):
    # columns: x^0..x^r for P0, y^1..y^r for P1 (the constants would coincide)
    out = []
    for _, _, base, x, y in rows:
        out.append([base**d * x**k for k in range(r + 1)] + [base**d * y**k for k in range(1, r + 1)])
    return np.asarray(out)


def _fit(A: np.ndarray, target: np.ndarray):
    res = linprog(np.ones(A.shape[1]), A_ub=-A, b_ub=-target, bounds=(0, None), method="highs")
    return res


def bound_check_thm1(table: VertexTable, d: int, r: int) -> dict:
    """Fit |Gamma| <= (Lam + |p|)^d P^{Lam Lam}_r(p) with nonnegative coefficients.

    The coefficients minimise their sum subject to the bound holding at every
    grid point (a linear program).  On a finite grid such a fit always
    exists, so the report also carries the log-log slope of
    |Gamma|/(Lam+|p|)^d at the largest Lam values; a clearly positive slope
    means power growth that no log polynomial bounds.
    """
    rows = _log_features(table)
    target = np.array([abs(table.values[i, j]) for i, j, *_ in rows])
    report = {"d": d, "r": r, "loop": table.loop, "n": table.n, "points": len(rows)}
    if not np.all(np.isfinite(target)):
        report.update(feasible=False, reason="non-finite table values")
        return report
    A = _design(rows, d, r)
    if not np.all(np.isfinite(A)):
        report.update(feasible=False, reason="bound shape not finite on the grid")
        return report
    res = _fit(A, target)
    if res.status != 0:
        report.update(feasible=False, reason=res.message)
        return report
    coef = res.x
    bound = A @ coef
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bound > 0, target / bound, np.where(target > 0, np.inf, 0.0))
    report.update(
        feasible=bool(np.max(ratios) <= 1 + 1e-9),
        coefficients={"P0": coef[: r + 1].tolist(), "P1": [0.0] + coef[r + 1:].tolist()},
        max_ratio=float(np.max(ratios)),
        objective=float(res.fun),
    )
    # power-law growth is what the log polynomial cannot absorb: measure the
    # log-log slope of the envelope |Gamma|/(Lam+|p|)^d over the top of the grid
    lams = np.unique(table.Lams)
    if lams.size >= 3:
        top = lams[-max(3, lams.size // 3):]
        env = []
        for lam in top:
            sel = [k for k, (i, *_r) in enumerate(rows) if table.Lams[i] == lam]
            env.append(max(target[k] / rows[k][2] ** d for k in sel))
        env = np.asarray(env)
        if np.all(env > 0):
            slope = float(np.polyfit(np.log(top), np.log(env), 1)[0])
            report["tail_slope"] = slope
            report["shape_consistent"] = bool(slope < TAIL_SLOPE_MAX)
    return report


def subtracted_bubble(Lam: float, Lam0: float, P: float, tol: float = DEFAULT_TOL,
                      angle_nodes: int = ANGLE_NODES) -> float:
    """int d^4k/(2pi)^4 C(k) [C(k+P) - C(k)] with C the scalar window propagator.

    The subtraction removes the value at zero external momentum, leaving the
    irrelevant part of the one-loop four-point function in one channel.  The
    polar angle is integrated with Gauss-Legendre nodes, the radius
    adaptively.
    """
    if not 0 < Lam < Lam0:
        raise ValueError("need 0 < Lam < Lam0")
    t, wt = np.polynomial.legendre.leggauss(angle_nodes)
    theta = 0.5 * math.pi * (t + 1)
    wt = 0.5 * math.pi * wt * np.sin(theta) ** 2
    cos = np.cos(theta)

    def radial(k):
        if k == 0.0:
            return 0.0
        ck = float(scalar_propagator(k, Lam, Lam0))
        q = np.sqrt(np.maximum(k * k + P * P + 2 * k * P * cos, 1e-300))
        cq = scalar_propagator(q, Lam, Lam0)
        return k**3 * ck * float(np.dot(wt, cq - ck))

    split = 2 * Lam + P
    val = quad(radial, 0.0, split, tol=tol) + quad(radial, split, tol=tol, scale=Lam0)
    return 4 * math.pi * val / (2 * math.pi) ** 4


def irrelevant_four_point(Lam: float, Lam0: float, P: float, couplings: dict, hbar: float = 1.0,
                          tol: float = DEFAULT_TOL) -> float:
    """One-loop s-channel four-point function minus its zero-momentum value.

    This piece is irrelevant, so it is fixed by a vanishing boundary value at
    Lam0, where the window propagator vanishes; its flow is generated by the
    two-vertex chain.
    """
    g = tree_vertex(couplings, 4)
    return -0.5 * hbar * g * g * subtracted_bubble(Lam, Lam0, P, tol)


def lam0_uniformity_probe(Lam: float, P: float, Lam0_start: float, doublings: int = 4,
                          couplings: dict | None = None, tol: float = DEFAULT_TOL) -> dict:
    """Track a renormalized one-loop quantity as Lam0 doubles repeatedly.

    Passes when each successive difference is at most half the previous one.
    The renormalized two-point function of the truncation does not depend on
    Lam0 at all, so the probe uses the irrelevant four-point part.
    """
    couplings = couplings or {"g4": 1.0}
    lam0s = [Lam0_start * 2**j for j in range(doublings + 1)]
    vals = [irrelevant_four_point(Lam, L0, P, couplings, tol=tol) for L0 in lam0s]
    diffs = np.abs(np.diff(vals))
    shrink = [float(diffs[j] / diffs[j + 1]) if diffs[j + 1] > 0 else math.inf for j in range(len(diffs) - 1)]
    return {
        "Lam": Lam,
        "P": P,
        "Lam0": lam0s,
        "values": [float(v) for v in vals],
        "differences": diffs.tolist(),
        "shrink_factors": shrink,
        "passed": bool(all(s >= 2 for s in shrink)),
    }
