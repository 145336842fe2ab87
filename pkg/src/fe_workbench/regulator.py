"""Gaussian-window regulator, regularized propagators and the 7x7 covariance.

The regulator is sigma_lam(s) = exp(-s^2/lam^4) and the window between an
infrared scale Lam and an ultraviolet scale Lam0 is

    sigma_{Lam,Lam0}(s) = sigma_{Lam0}(s) - sigma_{Lam}(s).

Writing a = Lam^-4 and E(z) = (1 - e^{-z})/z, the window divided by s^2 is
h(s) = a E(a s^2) - a0 E(a0 s^2), which is smooth at s = 0.  The ghost
propagator is g(s) = s h(s) with s = p^2, and the gauge propagator is
delta g + (xi - 1) p p h.  All momentum derivatives are built from the
derivatives of g and h in s, so nothing ever divides by p^2.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import eval_hermite, gammainc

from .momenta import W_MAX

SERIES_CUTOFF = 0.5
SERIES_TERMS = 30


def sigma(lam: float, s):
    """exp(-s^2/lam^4)."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    s = np.asarray(s, dtype=float)
    return np.exp(-(s**2) / lam**4)


def sigma_window(Lam: float, Lam0: float, s):
    """sigma_{Lam0}(s) - sigma_{Lam}(s), computed without cancellation."""
    s = np.asarray(s, dtype=float)
    # e^{-x0} - e^{-x} = e^{-x0} (1 - e^{-(x - x0)})
    x0 = s**2 / Lam0**4
    dx = s**2 * (1.0 / Lam**4 - 1.0 / Lam0**4)
    return -np.exp(-x0) * np.expm1(-dx)


def expm1_ratio_derivs(z, kmax: int) -> np.ndarray:
    """E^(j)(z) for j = 0..kmax where E(z) = (1 - e^{-z})/z = int_0^1 e^{-tz} dt.

    E^(j)(z) = (-1)^j int_0^1 t^j e^{-tz} dt.  Small z uses the power series,
    larger z the regularized lower incomplete gamma function.
    Returns an array of shape (kmax+1,) + z.shape.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty((kmax + 1,) + z.shape)
    small = z < SERIES_CUTOFF
    zs = np.where(small, z, 0.0)
    zl = np.where(small, 1.0, z)
    for j in range(kmax + 1):
        # series: sum_n (-z)^n / (n! (n + j + 1))
        ser = np.zeros_like(zs)
        term = np.ones_like(zs)
        for n in range(SERIES_TERMS):
            ser = ser + term / (n + j + 1)
            term = term * (-zs) / (n + 1)
        big = gammainc(j + 1, zl) * math.factorial(j) / zl ** (j + 1)
        out[j] = (-1) ** j * np.where(small, ser, big)
    return out


def _leibniz(f, g):
    """Derivatives of a product from the derivative lists of its factors."""
    return [sum(math.comb(k, j) * f[j] * g[k - j] for j in range(k + 1)) for k in range(len(f))]


def _composite_derivs(base_derivs, s, kmax):
    """Derivatives d^k/ds^k F(s^2) for k = 0..kmax, given F^(m)(y) at y = s^2.

    Uses d^k F(s^2) = sum_j k!/((k-2j)! j!) (2s)^{k-2j} F^{(k-j)}(s^2).
    """
    s = np.asarray(s, dtype=float)
    out = []
    for k in range(kmax + 1):
        acc = np.zeros_like(s)
        for j in range(k // 2 + 1):
            coef = math.factorial(k) / (math.factorial(k - 2 * j) * math.factorial(j))
            acc = acc + coef * (2 * s) ** (k - 2 * j) * base_derivs[k - j]
        out.append(acc)
    return out


@lru_cache(maxsize=None)
def matching_terms(w: int):
    """Term table for the w-th momentum derivative of a radial function F(p^2).

    d/dp_{mu_1} ... d/dp_{mu_w} F(p^2)
        = sum over partial matchings of the w slots with k pairs of
          2^{w-k} F^{(w-k)}(p^2) prod_pairs delta prod_singles p.
    Returns tuples (order, coefficient, pairs, singles) over slot positions.
    """
    terms = []

    def rec(remaining, pairs):
        if not remaining:
            return [(tuple(pairs),)]
        first, rest = remaining[0], remaining[1:]
        found = []
        # first slot left single
        for (pp,) in rec(rest, pairs):
            found.append((pp,))
        # or paired with a later slot
        for idx, other in enumerate(rest):
            for (pp,) in rec(rest[:idx] + rest[idx + 1:], pairs + [(first, other)]):
                found.append((pp,))
        return found

    for (pairs,) in rec(tuple(range(w)), []):
        used = {i for pr in pairs for i in pr}
        singles = tuple(i for i in range(w) if i not in used)
        k = len(pairs)
        terms.append((w - k, float(2 ** (w - k)), pairs, singles))
    return tuple(terms)


def radial_derivative(F_derivs, p, mus):
    """d/dp_{mus} of F(p^2), given the list F_derivs[j] = F^(j)(p^2).

    p has shape (..., 4); mus is a tuple of direction indices.
    """
    p = np.asarray(p, dtype=float)
    acc = np.zeros(p.shape[:-1])
    for order, coef, pairs, singles in matching_terms(len(mus)):
        if any(mus[a] != mus[b] for a, b in pairs):
            continue
        term = coef * F_derivs[order]
        for i in singles:
            term = term * p[..., mus[i]]
        acc = acc + term
    return acc


def _tensor_derivative(A_derivs, B_derivs, p, mus, mu, nu):
    """d/dp_{mus} of delta_{mu nu} A(p^2) + p_mu p_nu B(p^2)."""
    val = radial_derivative(A_derivs, p, mus) if mu == nu else np.zeros(np.shape(p)[:-1])
    if B_derivs is None:
        return val
    p = np.asarray(p, dtype=float)
    w = len(mus)
    # Leibniz over which derivative slots hit p_mu and p_nu
    for a in [None] + list(range(w)):
        if a is not None and mus[a] != mu:
            continue
        for b in [None] + list(range(w)):
            if b is not None and (b == a or mus[b] != nu):
                continue
            rest = tuple(mus[i] for i in range(w) if i != a and i != b)
            term = radial_derivative(B_derivs, p, rest)
            if a is None:
                term = term * p[..., mu]
            if b is None:
                term = term * p[..., nu]
            val = val + term
    return val


def _gauss_poly_derivs(b, y, kmax, with_y: bool):
    """Derivatives in y of e^{-b y^2} (or of y e^{-b y^2} when with_y)."""
    y = np.asarray(y, dtype=float)
    rb = math.sqrt(b)
    g = np.exp(-b * y**2)
    G = [(-rb) ** k * eval_hermite(k, rb * y) * g for k in range(kmax + 1)]
    if not with_y:
        return G
    return [y * G[k] + (k * G[k - 1] if k else 0.0) for k in range(kmax + 1)]


@dataclass(frozen=True)
class Regulator:
    """Infrared scale Lam, ultraviolet scale Lam0 and gauge parameter xi.

    Lam = 0 is accepted as the removed-infrared-cutoff limit; propagators are
    then singular at p = 0.
    """

    Lam: float
    Lam0: float
    xi: float = 1.0

    def __post_init__(self):
        if not (0 <= self.Lam <= self.Lam0):
            raise ValueError(f"need 0 <= Lam <= Lam0, got Lam={self.Lam}, Lam0={self.Lam0}")
        if not self.Lam0 > 0:
            raise ValueError("Lam0 must be positive")
        if not self.xi > 0:
            raise ValueError("xi must be positive")

    @property
    def a(self) -> float:
        return math.inf if self.Lam == 0 else self.Lam**-4

    @property
    def a0(self) -> float:
        return self.Lam0**-4

    def window(self, s):
        if self.Lam == 0:
            return sigma(self.Lam0, s)
        return sigma_window(self.Lam, self.Lam0, s)

    def h_derivs(self, s, kmax: int):
        """d^k/ds^k of sigma_window(s)/s^2, k = 0..kmax."""
        s = np.asarray(s, dtype=float)
        y = s**2
        a0 = self.a0
        E0 = expm1_ratio_derivs(a0 * y, kmax)
        base0 = [a0 ** (m + 1) * E0[m] for m in range(kmax + 1)]
        if self.Lam == 0:
            if np.any(s == 0):
                raise ZeroDivisionError("propagator at Lam = 0 is singular at p = 0")
            # h = 1/s^2 - a0 E(a0 s^2)
            inv = [(-1) ** k * math.factorial(k + 1) / s ** (k + 2) for k in range(kmax + 1)]
            comp = _composite_derivs(base0, s, kmax)
            out = [inv[k] - comp[k] for k in range(kmax + 1)]
        else:
            a = self.a
            E = expm1_ratio_derivs(a * y, kmax)
            base = [a ** (m + 1) * E[m] - base0[m] for m in range(kmax + 1)]
            out = _composite_derivs(base, s, kmax)
        far = a0 * y >= 1.0
        if np.any(far):
            direct = self._h_derivs_far(np.where(far, s, 1.0 / math.sqrt(a0)), kmax)
            out = [np.where(far, d, o) for d, o in zip(direct, out)]
        return out

    def _h_derivs_far(self, s, kmax: int):
        # sigma_window/s^2 = e^{-a0 s^2} (1 - e^{-(a - a0) s^2}) s^{-2}; the
        # difference form above cancels once both exponentials are small
        a0 = self.a0
        G = _gauss_poly_derivs(a0, s, kmax, with_y=False)
        if self.Lam == 0:
            F = [np.ones_like(s)] + [np.zeros_like(s)] * kmax
        else:
            delta = self.a - a0
            F = [-x for x in _gauss_poly_derivs(delta, s, kmax, with_y=False)]
            F[0] = -np.expm1(-delta * s**2)
        R = [(-1) ** m * math.factorial(m + 1) / s ** (m + 2) for m in range(kmax + 1)]
        return _leibniz(_leibniz(G, F), R)

    def g_derivs(self, s, kmax: int):
        """d^k/ds^k of sigma_window(s)/s, k = 0..kmax."""
        s = np.asarray(s, dtype=float)
        h = self.h_derivs(s, kmax)
        return [s * h[k] + (k * h[k - 1] if k else 0.0) for k in range(kmax + 1)]


def _check_order(mus):
    if len(mus) > W_MAX:
        raise ValueError(f"derivative order {len(mus)} exceeds w_max = {W_MAX}")


def _radial_parts(kind: str, p, reg: Regulator, order: int, part: str):
    """Radial coefficient functions (A, B) with prop = delta A + p p B.

    Returns lists of s-derivatives up to `order` (B is None for ghosts).
    """
    p = np.asarray(p, dtype=float)
    s = np.sum(p**2, axis=-1)
    if kind not in ("gauge", "ghost"):
        raise ValueError(f"unknown propagator kind {kind!r}")
    if part == "prop":
        if reg.Lam == 0 and np.any(s == 0):
            raise ZeroDivisionError("propagator at Lam = 0 is singular at p = 0")
        A = reg.g_derivs(s, order)
        B = None
        if kind == "gauge":
            B = [(reg.xi - 1) * x for x in reg.h_derivs(s, order)]
        return A, B
    if part == "dot":
        lam, sign = reg.Lam, -1.0
    elif part == "dlam0":
        lam, sign = reg.Lam0, 1.0
    else:
        raise ValueError(f"unknown part {part!r}")
    if not lam > 0:
        raise ValueError("scale derivative needs a positive scale")
    # d/dlam sigma_lam(s)/s = (4 s / lam^5) e^{-s^2/lam^4}
    pref = sign * 4.0 / lam**5
    b = lam**-4
    A = [pref * x for x in _gauss_poly_derivs(b, s, order, with_y=True)]
    B = None
    if kind == "gauge":
        B = [(reg.xi - 1) * pref * x for x in _gauss_poly_derivs(b, s, order, with_y=False)]
    return A, B


def prop_deriv(kind: str, p, reg: Regulator, mus=(), part: str = "prop"):
    """Momentum derivative d/dp_{mus} of a propagator.

    kind is 'gauge' (4x4 result) or 'ghost' (scalar).  part selects the
    propagator itself ('prop'), its Lam derivative ('dot') or its Lam0
    derivative ('dlam0').  p may carry leading batch axes.
    """
    mus = tuple(int(m) for m in mus)
    _check_order(mus)
    p = np.asarray(p, dtype=float)
    A, B = _radial_parts(kind, p, reg, len(mus), part)
    if kind == "ghost":
        return radial_derivative(A, p, mus)
    out = np.empty(p.shape[:-1] + (4, 4))
    for mu in range(4):
        for nu in range(mu, 4):
            out[..., mu, nu] = _tensor_derivative(A, B, p, mus, mu, nu)
            out[..., nu, mu] = out[..., mu, nu]
    return out


def prop(kind: str, p, reg: Regulator):
    """Regularized gauge (4x4) or ghost (scalar) propagator at momentum p."""
    return prop_deriv(kind, p, reg, ())


def prop_dot(kind: str, p, reg: Regulator):
    """d/dLam of the propagator at fixed p."""
    return prop_deriv(kind, p, reg, (), part="dot")


def prop_dlam0(kind: str, p, reg: Regulator):
    """d/dLam0 of the propagator at fixed p."""
    return prop_deriv(kind, p, reg, (), part="dlam0")


def derivative_tensor(kind: str, p, reg: Regulator, order: int, part: str = "prop") -> np.ndarray:
    """All components of the order-th momentum derivative, shape (4,)*order (+ (4,4))."""
    comps = {}
    shape = (4,) * order + ((4, 4) if kind == "gauge" else ())
    out = np.empty(np.shape(p)[:-1] + shape)
    for mus in itertools.product(range(4), repeat=order):
        key = tuple(sorted(mus))
        if key not in comps:
            comps[key] = prop_deriv(kind, p, reg, key, part)
        out[(Ellipsis,) + mus + ((slice(None), slice(None)) if kind == "gauge" else ())] = comps[key]
    return out


def sup_norm(tensor, batch_ndim: int = 0) -> np.ndarray:
    """Largest absolute component, optionally per batch entry."""
    t = np.abs(np.asarray(tensor))
    if batch_ndim == 0:
        return float(t.max()) if t.size else 0.0
    return t.reshape(t.shape[:batch_ndim] + (-1,)).max(axis=-1)


@dataclass(frozen=True)
class CovarianceData:
    matrix: np.ndarray
    inverse: np.ndarray
    eigenvalues: np.ndarray


def covariance(p, reg: Regulator) -> CovarianceData:
    """The 7x7 covariance on (A_0..A_3, B, c, cbar), its inverse and q_1..q_5.

    The eigenvalues are those of the bosonic block of the inverse after
    pulling out |p| from the four gauge directions.
    """
    if not (0 < reg.Lam < reg.Lam0):
        raise ValueError("the covariance is invertible only for 0 < Lam < Lam0")
    p = np.asarray(p, dtype=float)
    s = float(p @ p)
    if s == 0:
        raise ValueError("covariance inverse needs p != 0")
    xi = reg.xi
    win = float(reg.window(s))
    if win == 0:
        raise ValueError("window underflows at this momentum; the inverse is not representable")
    S = float(prop("ghost", p, reg))
    C = prop("gauge", p, reg)
    mat = np.zeros((7, 7))
    mat[:4, :4] = C
    mat[:4, 4] = S * p
    mat[4, :4] = -S * p
    mat[4, 4] = (1 - win) / xi
    mat[5, 6] = -S
    mat[6, 5] = S

    pp = np.outer(p, p)
    # inverse of the gauge propagator: transverse part p^2/win, longitudinal p^2/(xi win)
    Cinv = (s / win) * (np.eye(4) - pp / s) + (s / (xi * win)) * pp / s
    inv = np.zeros((7, 7))
    inv[:4, :4] = Cinv - pp / xi
    inv[:4, 4] = -p
    inv[4, :4] = p
    inv[4, 4] = xi
    inv[5, 6] = 1 / S
    inv[6, 5] = -1 / S

    sinv = 1.0 / win
    xi_eff = xi + (sinv - 1) / xi
    # factor xi_eff out of the square root so deep in the tail nothing overflows
    disc = xi_eff * np.sqrt(complex(1 - 4 * (sinv / xi_eff) / xi_eff))
    # xi_eff > 0, so the '+' root never cancels; the other follows from q4 q5 = sinv
    q4 = (xi_eff + disc) / 2
    q = np.array([sinv, sinv, sinv, q4, sinv / q4], dtype=complex)
    return CovarianceData(matrix=mat, inverse=inv, eigenvalues=q)


def bosonic_q_matrix(p, reg: Regulator) -> np.ndarray:
    """P^-1 (bosonic block of the inverse) P^-1 with P = diag(|p|,|p|,|p|,|p|,1)."""
    cov = covariance(p, reg)
    P = np.diag([np.linalg.norm(p)] * 4 + [1.0])
    Pi = np.linalg.inv(P)
    return Pi @ cov.inverse[:5, :5] @ Pi


def covariance_sweep(points: int = 10, Lam0: float = 1.0, ratio_range=(1e-3, 0.9),
                     xi_range=(0.1, 10.0), p_range=(0.1, 2.0), seed: int = 0) -> dict:
    """Inverse, eigenvalue and positivity checks on a points^3 log grid in
    (Lam/Lam0, xi, |p|/Lam0); directions of p are drawn from seed."""
    rng = np.random.default_rng(seed)
    inv_err = prod_err = eig_err = 0.0
    min_re = math.inf
    count = 0
    for ratio in np.geomspace(*ratio_range, points):
        for xi in np.geomspace(*xi_range, points):
            reg = Regulator(ratio * Lam0, Lam0, float(xi))
            for pn in np.geomspace(*p_range, points):
                d = rng.normal(size=4)
                p = pn * Lam0 * d / np.linalg.norm(d)
                cov = covariance(p, reg)
                inv_err = max(inv_err, float(np.abs(cov.matrix @ cov.inverse - np.eye(7)).max()))
                q = cov.eigenvalues
                sinv = 1.0 / float(reg.window(p @ p))
                prod_err = max(prod_err, abs(q[3] * q[4] - sinv) / sinv)
                min_re = min(min_re, q[3].real / abs(q[3]), q[4].real / abs(q[4]))
                ev = np.linalg.eigvals(bosonic_q_matrix(p, reg))
                dist = np.abs(ev[:, None] - q[None, :]) / np.abs(q)[None, :]
                rows, cols = linear_sum_assignment(dist)
                eig_err = max(eig_err, float(dist[rows, cols].max()))
                count += 1
    return {"points": count, "max_inverse_error": inv_err, "max_q4q5_error": float(prod_err),
            "min_relative_real_q45": float(min_re), "max_eigenvalue_error": eig_err}


SWEEP_COLUMNS = ("kind", "Lam", "Lam0", "xi", "p_norm", "w_norm", "value_norm", "bound", "ratio")


def bound_sweep(kinds=("ghost", "gauge"), Lams=(0.1, 1.0, 10.0), Lam0_ratios=(1.5, 10.0, 1000.0),
                xis=(0.1, 1.0, 10.0), p_ratios=tuple(np.geomspace(1e-2, 1e2, 9)), ws=range(W_MAX + 1),
                seed: int = 0) -> list:
    """|d^w prop| against w!/(Lam+|p|)^{w+2} on a grid; one dict per point.

    |p| is given in units of Lam and the direction of p is drawn from seed.
    The norm is the Frobenius norm over all derivative and propagator indices.
    """
    rng = np.random.default_rng(seed)
    d = rng.normal(size=4)
    u = d / np.linalg.norm(d)
    rows = []
    for kind in kinds:
        for lam, ratio, xi in itertools.product(Lams, Lam0_ratios, xis):
            if kind == "ghost" and xi != xis[0]:
                continue  # the ghost propagator does not depend on xi
            reg = Regulator(float(lam), float(lam * ratio), float(xi))
            for pr in p_ratios:
                pn = float(pr * lam)
                for w in ws:
                    val = float(np.linalg.norm(derivative_tensor(kind, pn * u, reg, w)))
                    bound = math.factorial(w) / (lam + pn) ** (w + 2)
                    rows.append({"kind": kind, "Lam": float(lam), "Lam0": reg.Lam0, "xi": reg.xi, "p_norm": pn,
                                 "w_norm": int(w), "value_norm": val, "bound": bound, "ratio": val / bound})
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    wr.writeheader()
    for row in rows:
        wr.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()
