"""Numerical sweeps of the basic one-dimensional and propagator estimates.

Each case pairs a left-hand side (an integral evaluated by adaptive
quadrature, or a closed expression) with a bound shape.  A sweep evaluates
both on a grid and reports the ratio.  Where the proof of an estimate
exhibits an explicit constant the sweep checks it; elsewhere it fits the
minimal constant and only asserts that it is finite.
"""
from __future__ import annotations

import itertools
import json
import math
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize_scalar

from . import series
from .quadrature import DEFAULT_TOL, QuadratureError, quad  # noqa: F401  quad is part of this API
from .regulator import Regulator, derivative_tensor, prop_dot, radial_derivative

MAX_EVALUATIONS = 10**6
W_MAX = 4
K_MAX = 4
LOG2 = math.log(2.0)
LOG4 = math.log(4.0)


def log_plus(x: float) -> float:
    """log max(1, x)."""
    return math.log(x) if x > 1.0 else 0.0


def logspace(lo: float, hi: float, n: int) -> list:
    return [float(v) for v in np.geomspace(lo, hi, n)]


def frobenius(t, batch_ndim: int = 0):
    t = np.asarray(t, dtype=float)
    if batch_ndim == 0:
        return float(np.sqrt(np.sum(t**2)))
    return np.sqrt(np.sum(t.reshape(t.shape[:batch_ndim] + (-1,)) ** 2, axis=-1))


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


# fixed orientations and derivative directions shared by the vector cases
_RNG = np.random.default_rng(20240531)
ORIENTATIONS = [_unit([1, 0, 0, 0]), _unit([1, 1, 1, 1]), _unit(_RNG.normal(size=4))]
_EXTRA_DIRECTIONS = [_unit(_RNG.normal(size=4)) for _ in range(2)]


def _directions(x):
    """Unit directions probed for directional derivatives at x."""
    dirs = list(np.eye(4)) + _EXTRA_DIRECTIONS
    if np.linalg.norm(x) > 0:
        dirs.append(_unit(x))
    return np.array(dirs)


@dataclass(frozen=True)
class InequalityCase:
    """lhs(point) <= C * shape(point)  (form 'product') or lhs <= C + shape ('sum')."""

    id: str
    statement: str
    axes: dict
    evaluate: Callable
    constraint: Callable | None = None
    paper_constant: Callable | None = None
    paper_constant_text: str | None = None
    form: str = "product"

    def points(self, axes: dict | None = None):
        axes = {**self.axes, **(axes or {})}
        names = list(axes)
        total = math.prod(len(axes[n]) for n in names)
        if total > MAX_EVALUATIONS:
            raise ValueError(f"grid has {total} points, more than {MAX_EVALUATIONS}")
        for combo in itertools.product(*(axes[n] for n in names)):
            pt = dict(zip(names, combo))
            if self.constraint is None or self.constraint(pt):
                yield pt


@dataclass
class SweepReport:
    case: str
    grid: dict
    points: int
    max_ratio: float
    fitted_constant: float
    paper_constant: str | None
    failures: list = field(default_factory=list)
    worst_point: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures and math.isfinite(self.fitted_constant)

    def to_dict(self) -> dict:
        d = {
            "case": self.case,
            "grid": self.grid,
            "points": self.points,
            "max_ratio": _json_float(self.max_ratio),
            "fitted_constant": _json_float(self.fitted_constant),
            "failures": self.failures,
            "passed": self.passed,
        }
        if self.paper_constant is not None:
            d["paper_constant"] = self.paper_constant
        if self.worst_point is not None:
            d["worst_point"] = self.worst_point
        if self.extra:
            d["extra"] = self.extra
        return d


def _json_float(x):
    return x if math.isfinite(x) else str(x)


# ---------------------------------------------------------------- log integrals

L10 = logspace(1e-2, 1e2, 10)
L8 = logspace(1e-2, 1e2, 8)
KS = list(range(K_MAX + 1))
WS = list(range(W_MAX + 1))


def _twin(pt):
    lam, p, q, P, k = pt["Lam"], pt["p"], pt["q"], pt["P"], pt["k"]
    if k == 0:
        lhs = quad(lambda x: 1.0 / ((x + p) * (x + q)), lam, scale=lam + p)
    elif lam >= P:
        lhs = 0.0
    else:
        lhs = quad(lambda x: math.log(P / x) ** k / ((x + p) * (x + q)), lam, P)
    return lhs, (1 + log_plus(P / (lam + q)) ** (k + 1)) / (lam + p + q)


def _twin_constant(pt):
    k = pt["k"]
    if k == 0:
        return 3 + 2 * LOG2
    a_k = 2 * (LOG2 + 1) ** (k + 1) / (k + 1)
    return a_k if pt["Lam"] >= pt["q"] else a_k + 6 * math.e * math.factorial(k)


def _twin2(pt):
    lam, p, q, M, k = pt["Lam"], pt["p"], pt["q"], pt["M"], pt["k"]
    eta = min(M, q)
    lo = lam if k == 0 else max(lam, M)
    lhs = quad(lambda x: log_plus(x / M) ** k / ((x + p) * (x + q)), lo, scale=lo + p)
    shape = (1 + log_plus(p / (lam + eta)) ** (k + 1) + log_plus(lam / M) ** (k + 1)) / (lam + p + q)
    return lhs, shape


def _int3(pt):
    lam, eta, M, k = pt["Lam"], pt["eta"], pt["M"], pt["k"]
    lhs = quad(lambda x: log_plus(x / M) ** k / (x + eta), lam, eta)
    return lhs, 1.0


def _int4(pt):
    lam, eta, P, k = pt["Lam"], pt["eta"], pt["P"], pt["k"]
    lhs = quad(lambda x: log_plus(P / x) ** k / (x + eta), lam, eta, points=[P])
    return lhs, 1 + log_plus(P / (lam + eta)) ** k


def _int4b(pt):
    lam, eta, M, P, k = pt["Lam"], pt["eta"], pt["M"], pt["P"], pt["k"]
    lhs = quad(lambda x: log_plus(P / x) ** k / (x + eta), lam, M)
    return lhs, 1 + log_plus(P / (lam + eta)) ** (k + 1)


def _int4a(pt):
    lam, lam0, q, P, k = pt["Lam"], pt["Lam0"], pt["q"], pt["P"], pt["k"]
    lhs = quad(lambda x: log_plus(P / x) ** k / (x + q), lam, lam0, points=[P])
    return lhs, 1 + log_plus(P / (lam + q)) ** (k + 1) + log_plus(lam0 / (lam + q))


def _int5(pt):
    a, b, d, m, k = pt["a"], pt["b"], pt["d"], pt["m"], pt["k"]
    lhs = quad(lambda x: x**m * log_plus(d / (b + x)) ** k if b + x > 0 else 0.0, 0.0, a, points=[d - b])
    return lhs, a ** (m + 1) * (1 + log_plus(d / (a + b)) ** k)


def _int7(pt):
    pn, qn, ang, lamp = pt["p"], pt["q"], pt["angle"], pt["Lamp"]
    eta = pt["eta_frac"] * lamp
    qpar, qperp = qn * math.cos(ang), qn * math.sin(ang)

    def f(t):
        return pn / (lamp + math.hypot(t * pn + qpar, qperp))

    tq = -qpar / pn
    lhs = quad(f, 0.0, 1.0, points=[tq])
    return lhs, LOG4 + log_plus(pn / (lamp + eta))


def _frac(pt):
    r, w, xn, yn, ang = pt["r"], pt["w"], pt["x"], pt["y"], pt["angle"]

    def lhs_at(xpar, xperp):
        return math.exp(-r * (xpar**2 + xperp**2)) / (1 + math.hypot(xpar - yn, xperp)) ** w

    if pt["worst"]:
        # maximise along the line through 0 and y, where the proof locates the extremum
        res = minimize_scalar(lambda t: -lhs_at(t, 0.0), bounds=(-1.0, yn + 1.0), method="bounded",
                              options={"xatol": 1e-12})
        lhs = max(-res.fun, lhs_at(0.0, 0.0), lhs_at(yn, 0.0))
    else:
        lhs = lhs_at(xn * math.cos(ang), xn * math.sin(ang))
    return lhs, 1.0 / (1 + yn) ** w


def _plog(pt):
    r, s, p, lam, M = pt["r"], pt["s"], pt["p"], pt["Lam"], pt["M"]
    lhs = math.exp(-r * s**2 / lam**2) * log_plus(max(M, math.hypot(p, s)) / lam)
    return lhs, 0.5 * log_plus(1 / r) + log_plus(max(M, p) / lam)


def _log_m(x, m):
    return log_plus(max(x, m))


def _logsplit_coeffs(seed, n):
    return np.random.default_rng(seed).uniform(0.0, 1.0, n + 1)


def _logsplit(pt):
    x, y, m, n = pt["x"], pt["y"], pt["m"], pt["degree"]
    c = _logsplit_coeffs(pt["seed"], n)
    lhs = sum(c[k] * _log_m(math.hypot(x, y), m) ** k for k in range(n + 1))
    rhs = sum(c[k] * 3**k * (_log_m(y, m) ** k + _log_m(x, m) ** k + 1) for k in range(n + 1))
    return lhs, rhs


# ---------------------------------------------------------- tensor derivatives


def _split_vectors(pt):
    """x1, x2 from |x|, the split angle phi and the relative angle psi."""
    xn, phi, psi = pt["x"], pt["phi"], pt["psi"]
    e = ORIENTATIONS[pt["orient"]]
    f = _unit(np.array([0.0, 1.0, 0.0, 0.0]) - e * e[1])
    x1 = xn * math.cos(phi) * e
    x2 = xn * math.sin(phi) * (math.cos(psi) * e + math.sin(psi) * f)
    return x1, x2


def _one_minus_exp_quartic(r2):
    """Series of 1 - exp(-|x|^4) with the constant term taken from expm1."""
    out = -series.exp(-series.mul(r2, r2))
    out[..., 0, 0] = -np.expm1(-r2[..., 0, 0] ** 2)
    return out


def _directional_norm(F, u, v, tensor_ndim):
    """max over direction batch of the Frobenius norm of i! j! F[..., u, v]."""
    vals = series.coefficient_derivative(F, u, v)
    return float(np.max(frobenius(vals, vals.ndim - tensor_ndim)))


def _d402t(pt):
    s, u, xn = pt["s"], pt["u"], pt["x"]
    x = xn * ORIENTATIONS[pt["orient"]]
    dirs = _directions(x)
    X = series.vector(x[None, :], dirs, None, (u + 1, 1))
    g = _one_minus_exp_quartic(series.norm_sq(X))
    F = series.mul(series.tensor_power(X, s), g.reshape(g.shape[:1] + (1,) * s + g.shape[1:]))
    lhs = _directional_norm(F, u, 0, s)
    shape = xn ** (s + 1 - u) if u <= s else 1.0
    return lhs, shape


def _pair_directions(x1, x2):
    d1 = np.array([_unit(x1) if np.linalg.norm(x1) else ORIENTATIONS[0], ORIENTATIONS[1], _EXTRA_DIRECTIONS[0]])
    d2 = np.array([_unit(x2) if np.linalg.norm(x2) else ORIENTATIONS[0], ORIENTATIONS[2], _EXTRA_DIRECTIONS[1]])
    h1 = np.repeat(d1, len(d2), axis=0)
    h2 = np.tile(d2, (len(d1), 1))
    return h1, h2


def _bivariate_shape(s, u, v, xn):
    return xn ** (s + 1 - u - v) if u + v <= s else xn + 1.0


def _d331b(pt):
    s, u, v = pt["s"], pt["u"], pt["v"]
    x1, x2 = _split_vectors(pt)
    h1, h2 = _pair_directions(x1, x2)
    sh = (u + 1, v + 1)
    X1 = series.vector(x1[None, :], h1, None, sh)
    X2 = series.vector(x2[None, :], None, h2, sh)
    g = _one_minus_exp_quartic(series.norm_sq(X1))
    T = series.mul(X2[:, :, None], series.tensor_power(X1, s - 1)[:, None]) if s > 1 else X2
    F = series.mul(T, g.reshape(g.shape[:1] + (1,) * s + g.shape[1:]))
    return _directional_norm(F, u, v, s), _bivariate_shape(s, u, v, pt["x"])


def _d402s(pt):
    s, u, v = pt["s"], pt["u"], pt["v"]
    x1, x2 = _split_vectors(pt)
    h1, h2 = _pair_directions(x1, x2)
    sh = (u + 1, v + 1)
    X1 = series.vector(x1[None, :], h1, None, sh)
    Y = X1 + series.vector(x2[None, :], None, h2, sh)
    r1, ry = series.norm_sq(X1), series.norm_sq(Y)
    g = series.exp(-series.mul(r1, r1)) - series.exp(-series.mul(ry, ry))
    F = series.mul(series.tensor_power(X1, s), g.reshape(g.shape[:1] + (1,) * s + g.shape[1:]))
    return _directional_norm(F, u, v, s), _bivariate_shape(s, u, v, pt["x"])


def f_lemma_derivative(x: float, beta: float, w: int) -> float:
    """|d^w/dx^w (e^{-beta x} - e^{-x})/x| via int_beta^1 g^w e^{-g x} dg."""
    return quad(lambda g: g**w * math.exp(-g * x), beta, 1.0)


def f_lemma_derivative_direct(x: float, beta: float, w: int) -> float:
    """Same derivative by Leibniz on e^{-c x}/x; accurate only for x not small."""
    def term(c):
        return sum(math.comb(w, j) * (-c) ** (w - j) * math.exp(-c * x) * (-1) ** j * math.factorial(j)
                   / x ** (j + 1) for j in range(w + 1))
    return abs(term(beta) - term(1.0))


def _f_lemma(pt):
    x, beta, w = pt["x"], pt["beta"], pt["w"]
    return f_lemma_derivative(x, beta, w), math.factorial(w) / (1 + x) ** (w + 1)


def h_lemma_derivative(x: float, beta: float, w: int) -> float:
    """|d^w/dx^w (e^{-beta x^2} - e^{-x^2})/x| from h(x) = x f(x^2)."""
    sh = (w + 1, 1)
    X = series.vector(np.array([x]), np.array([1.0]), None, sh)[0]
    y = series.mul(X, X)
    y0 = x * x
    derivs = [(-1) ** j * quad(lambda g, j=j: g**j * math.exp(-g * y0), beta, 1.0) for j in range(w + 1)]
    h = series.mul(X, series.compose(derivs, y))
    return abs(series.coefficient_derivative(h, w, 0))


def _h_lemma(pt):
    x, beta, w = pt["x"], pt["beta"], pt["w"]
    return h_lemma_derivative(x, beta, w), 1.0 / (1 + x) ** (w + 1)


def _h_constant(pt):
    w, c = pt["w"], pt["C"]
    return math.factorial(w) * math.e * (c + 1) * (2 * math.sqrt(math.e) * c) ** w


_DF_FUNCS = {
    "exp": lambda y, j: (-1) ** j * math.exp(-y),
    "inverse": lambda y, j: (-1) ** j * math.factorial(j) / (1 + y) ** (j + 1),
    "sqrt": lambda y, j: math.prod(0.5 - i for i in range(j)) * (1 + y) ** (0.5 - j),
}


def _df_lemma(pt):
    w, pn, name = pt["w"], pt["p"], pt["f"]
    p = pn * ORIENTATIONS[pt["orient"]]
    y = pn * pn
    fd = [_DF_FUNCS[name](y, j) for j in range(w + 1)]
    tens = np.empty((4,) * w)
    for mus in itertools.product(range(4), repeat=w):
        tens[mus] = radial_derivative(fd, p, mus)
    rhs = 2**w * sum(math.factorial(w) / (math.factorial(w - 2 * k) * math.factorial(k)) * pn ** (w - 2 * k)
                     * abs(fd[w - k]) for k in range(w // 2 + 1))
    return frobenius(tens), rhs


def _times_exp(v: float, x: float) -> float:
    """v e^x without overflow when v has underflowed to zero."""
    return 0.0 if v == 0 else math.exp(math.log(v) + x)


def _propagator_point(pt, scale_key="Lam"):
    lam = pt["Lam"]
    reg = Regulator(lam, lam * pt["Lam0_ratio"], pt.get("xi", 1.0))
    pn = pt["p_ratio"] * (reg.Lam0 if scale_key == "Lam0" else lam)
    return reg, pn * ORIENTATIONS[pt.get("orient", 1)], pn


def _dS(pt):
    reg, p, pn = _propagator_point(pt)
    w = pt["w"]
    return frobenius(derivative_tensor("ghost", p, reg, w)), 1.0 / (reg.Lam + pn) ** (w + 2)


def _dS_constant(pt):
    w, c = pt["w"], pt["C"]
    return 2 * math.factorial(w) * math.e * (c + 1) * (4 * math.e**1.5 * c * c) ** w


def _dC(pt):
    reg, p, pn = _propagator_point(pt)
    w = pt["w"]
    return frobenius(derivative_tensor("gauge", p, reg, w)), 1.0 / (reg.Lam + pn) ** (w + 2)


def _dC_constant(pt):
    w, c, xi = pt["w"], pt["C"], pt["xi"]
    return 8 * math.factorial(w) * math.e * (c + 1 + (xi + 1) * (c * c + 3)) * (4 * math.e**1.5 * c * c) ** w


def _dS2(pt):
    reg, p, pn = _propagator_point(pt)
    x = (pn / reg.Lam) ** 2
    # both sides multiplied by e^{x} so that the Gaussian tails do not underflow
    lhs = _times_exp(frobenius(prop_dot(pt["kind"], p, reg)), x)
    return lhs, 1.0 / reg.Lam**3


def _dS3(pt):
    reg, p, pn = _propagator_point(pt, "Lam0")
    w = pt["w"]
    lhs = frobenius(derivative_tensor(pt["kind"], p, reg, w, "dlam0"))
    return lhs, 1.0 / (reg.Lam0 * (reg.Lam0 + pn) ** (2 + w))


def _c16(pt):
    reg, p, pn = _propagator_point(pt)
    w = pt["w"]
    lhs = frobenius(derivative_tensor(pt["kind"], p, reg, w))
    return lhs, math.factorial(w) / (reg.Lam + pn) ** (w + 2)


PROP_AXES = {
    "Lam": logspace(0.1, 10.0, 4),
    "Lam0_ratio": [1.5, 10.0, 1000.0],
    "p_ratio": logspace(1e-2, 1e2, 9),
    "w": WS,
}

CASES = {
    "twin": InequalityCase(
        "twin", "int_Lam^inf log+^k(P/l) dl/((l+p)(l+q)) <= C_k (1+log+^{k+1}(P/(Lam+q)))/(Lam+p+q)",
        {"Lam": L10, "q": L10, "p": L10, "P": L10, "k": KS}, _twin,
        constraint=lambda t: t["q"] <= t["p"] <= t["P"],
        paper_constant=_twin_constant,
        paper_constant_text="k=0: 3+2log2; k>=1: A_k=2(log2+1)^{k+1}/(k+1), plus 6e k! when Lam<q"),
    "twin2": InequalityCase(
        "twin2", "int_Lam^inf log+^k(l/M) dl/((l+p)(l+q)) <= C_k (1+log+^{k+1}(p/(Lam+eta))+log+^{k+1}(Lam/M))/(Lam+p+q)",
        {"Lam": L10, "q": L10, "p": L10, "M": [0.1, 1.0, 10.0], "k": KS}, _twin2,
        constraint=lambda t: t["q"] <= t["p"]),
    "int3": InequalityCase(
        "int3", "int_Lam^eta log+^k(l/M) dl/(l+eta) < 1 for 0<Lam<eta<=M",
        {"Lam": L10, "eta": L10, "M": L10, "k": KS}, _int3,
        constraint=lambda t: t["Lam"] < t["eta"] <= t["M"],
        paper_constant=lambda t: LOG2 if t["k"] == 0 else 1.0,
        paper_constant_text="1; log 2 for k=0"),
    "int4": InequalityCase(
        "int4", "int_Lam^eta log+^k(P/l) dl/(l+eta) < C_k (1+log+^k(P/(Lam+eta)))",
        {"Lam": L10, "eta": L10, "P": L10, "k": KS}, _int4,
        constraint=lambda t: t["Lam"] < t["eta"] <= t["P"]),
    "int4b": InequalityCase(
        "int4b", "int_Lam^M log+^k(P/l) dl/(l+eta) < C_k (1+log+^{k+1}(P/(Lam+eta)))",
        {"Lam": L10, "eta": [0.0] + L10, "M": L8, "P": L8, "k": KS}, _int4b,
        constraint=lambda t: t["Lam"] < t["M"] <= t["P"] and t["eta"] <= t["M"]),
    "int4a": InequalityCase(
        "int4a", "int_Lam^Lam0 log+^k(P/l) dl/(l+q) < C_k (1+log+^{k+1}(P/(Lam+q))+log+(Lam0/(Lam+q)))",
        {"Lam": L8, "Lam0": L8, "q": [0.0] + L8, "P": L8, "k": KS}, _int4a,
        constraint=lambda t: t["Lam"] < t["Lam0"]),
    "int5": InequalityCase(
        "int5", "int_0^a x^m log+^k(d/(b+x)) dx <= C_{k,m} a^{m+1} (1+log+^k(d/(a+b)))",
        {"a": L8, "b": [0.0] + L8, "d": L8, "m": KS, "k": KS}, _int5),
    "int7": InequalityCase(
        "int7", "int_0^1 |p| dt/(Lam'+|tp+q|) <= 2(log4+log+(|p|/(Lam'+eta)))",
        {"p": L10, "q": [0.0] + L10, "angle": [0.0, math.pi / 3, math.pi / 2, 2 * math.pi / 3, math.pi],
         "Lamp": L10, "eta_frac": [0.0, 0.5, 1.0]}, _int7,
        paper_constant=lambda t: 2.0, paper_constant_text="2"),
    "frac": InequalityCase(
        "frac", "e^{-r x^2}/(1+|x-y|)^w <= w! max(2,1+1/(2r))^w/(1+|y|)^w",
        {"r": logspace(1e-2, 1e2, 9), "w": WS, "x": [0.0] + logspace(1e-2, 30.0, 9),
         "y": [0.0] + L10, "angle": [0.0, math.pi / 4, math.pi / 2, math.pi], "worst": [False, True]}, _frac,
        constraint=lambda t: not t["worst"] or (t["x"] == 0.0 and t["angle"] == 0.0),
        paper_constant=lambda t: math.factorial(t["w"]) * max(2.0, 1 + 1 / (2 * t["r"])) ** t["w"],
        paper_constant_text="w! max(2, 1+1/(2r))^w"),
    "plog": InequalityCase(
        "plog", "e^{-r s^2/Lam^2} log+(max(M,sqrt(p^2+s^2))/Lam) < C + log+(1/r)/2 + log+(max(M,p)/Lam)",
        {"r": logspace(1e-2, 1e2, 9), "s": [0.0] + L10, "p": [0.0] + L10, "Lam": L10, "M": [1.0]}, _plog,
        form="sum"),
    "logsplit": InequalityCase(
        "logsplit", "P0(log_m sqrt(x^2+y^2)) <= P1(log_m y) + P2(log_m x)",
        {"x": [0.0] + L10, "y": [0.0] + L10, "m": [0.0, 0.5, 1.0, 10.0], "degree": KS, "seed": [0, 1, 2]},
        _logsplit, paper_constant=lambda t: 1.0,
        paper_constant_text="P1(t)=P2(t)+sum c_k 3^k, P2(t)=sum c_k 3^k t^k"),
    "d402t": InequalityCase(
        "d402t", "|d^u (x^{(x)s}(1-e^{-x^4}))| <= c |x|^{s+1-u} (u<=s), c (u>s)",
        {"s": [0, 1, 2, 3], "u": WS, "x": logspace(1e-2, 20.0, 14), "orient": [0, 1, 2]}, _d402t),
    "d331b": InequalityCase(
        "d331b", "|d2^v d1^u (x2 (x) x1^{(x)s-1}(1-e^{-x1^4}))| <= c |x|^{s+1-u-v} (u+v<=s), c(|x|+1) otherwise",
        {"s": [1, 2, 3], "u": WS, "v": WS, "x": logspace(1e-2, 20.0, 8), "phi": [math.pi / 8, 3 * math.pi / 8],
         "psi": [0.0, math.pi / 2, math.pi], "orient": [1]}, _d331b),
    "d402s": InequalityCase(
        "d402s", "|d2^v d1^u (x1^{(x)s}(e^{-x1^4}-e^{-(x1+x2)^4}))| <= c |x|^{s+1-u-v} (u+v<=s), c(|x|+1) otherwise",
        {"s": [0, 1], "u": WS, "v": WS, "x": logspace(1e-2, 20.0, 10),
         "phi": [math.pi / 8, math.pi / 4, 3 * math.pi / 8], "psi": [0.0, math.pi / 2, math.pi], "orient": [1]},
        _d402s),
    "f_lemma": InequalityCase(
        "f_lemma", "|d^w (e^{-beta x}-e^{-x})/x| < e w!/(1+x)^{w+1}",
        {"beta": [0.0, 0.1, 0.5, 0.9, 1.0], "x": [0.0] + logspace(1e-3, 300.0, 14), "w": WS}, _f_lemma,
        paper_constant=lambda t: math.e, paper_constant_text="e"),
    "h_lemma": InequalityCase(
        "h_lemma", "|d^w (e^{-beta x^2}-e^{-x^2})/x| < w! e (C+1) (2 sqrt(e) C)^w/(1+x)^{w+1}",
        {"beta": [0.0, 0.1, 0.5, 0.9, 1.0], "x": [0.0] + logspace(1e-3, 30.0, 12), "w": WS,
         "C": [1.0001, 2.0, 5.0]}, _h_lemma,
        paper_constant=_h_constant, paper_constant_text="w! e (C+1) (2 sqrt(e) C)^w"),
    "df_lemma": InequalityCase(
        "df_lemma", "|d^w f(p^2)| <= 2^w sum_k w!/((w-2k)! k!) |p|^{w-2k} |f^{(w-k)}(p^2)|",
        {"w": WS, "p": logspace(1e-2, 10.0, 8), "f": list(_DF_FUNCS), "orient": [0, 1, 2]}, _df_lemma,
        paper_constant=lambda t: 1.0, paper_constant_text="1 (the bound is explicit)"),
    "dS": InequalityCase(
        "dS", "|d^w S(p)| < 2 w! e (C+1) (4 e^{3/2} C^2)^w/(Lam+|p|)^{w+2}",
        {**PROP_AXES, "C": [1.0001]}, _dS,
        paper_constant=_dS_constant, paper_constant_text="2 w! e (C+1) (4 e^{3/2} C^2)^w, C -> 1+"),
    "dC": InequalityCase(
        "dC", "|d^w C_{mu nu}(p)| < 8 w! e (C+1+(xi+1)(C^2+3)) (4 e^{3/2} C^2)^w/(Lam+|p|)^{w+2}",
        {**PROP_AXES, "xi": [0.1, 1.0, 10.0], "C": [1.0001]}, _dC,
        paper_constant=_dC_constant, paper_constant_text="8 w! e (C+1+(xi+1)(C^2+3)) (4 e^{3/2} C^2)^w, C -> 1+"),
    "dS2": InequalityCase(
        "dS2", "|Cdot(p)| <= C e^{-p^2/Lam^2}/Lam^3 for S and C_{mu nu}",
        {"Lam": logspace(0.1, 10.0, 5), "Lam0_ratio": [1.5, 10.0, 1000.0], "p_ratio": [0.0] + logspace(1e-2, 10.0, 10),
         "xi": [0.1, 1.0, 10.0], "kind": ["ghost", "gauge"]}, _dS2),
    "dS3": InequalityCase(
        "dS3", "|d^w dLam0 C(p)| <= C/(Lam0 (Lam0+|p|)^{2+w}) for S and C_{mu nu}",
        {"Lam": logspace(0.1, 10.0, 3), "Lam0_ratio": [1.0, 10.0, 1000.0], "p_ratio": logspace(1e-2, 1e2, 9),
         "w": WS, "xi": [0.1, 1.0, 10.0], "kind": ["ghost", "gauge"]}, _dS3),
    "c16": InequalityCase(
        "c16", "|d^w C(p)| < w! d^w c_xi/(|p|+Lam)^{w+2}, |Cdot(p)| < c_xi e^{-p^2/Lam^2}/Lam^3, c_xi = c0 + xi c1",
        {"Lam": logspace(0.1, 10.0, 3), "Lam0_ratio": [1.5, 1000.0], "p_ratio": logspace(1e-2, 1e2, 7),
         "w": WS, "xi": logspace(0.1, 10.0, 5), "kind": ["ghost", "gauge"]}, _c16),
}

CASE_IDS = tuple(CASES)


def parse_axes(spec: dict | None) -> dict:
    """Grid overrides: axis -> list, or {"logspace": [lo, hi, n]} / {"linspace": [...]}."""
    out = {}
    for name, val in (spec or {}).items():
        if isinstance(val, dict):
            if "logspace" in val:
                lo, hi, n = val["logspace"]
                val = logspace(lo, hi, int(n))
            elif "linspace" in val:
                lo, hi, n = val["linspace"]
                val = [float(v) for v in np.linspace(lo, hi, int(n))]
            else:
                raise ValueError(f"unknown axis spec for {name!r}")
        out[name] = list(val)
    return out


def _evaluate_chunk(pts: list, case_id: str):
    case = CASES[case_id]
    return [case.evaluate(pt) for pt in pts]


def _map_chunks(func, pts: list, jobs: int, arg):
    """func(chunk, arg) over contiguous chunks; results come back in input order."""
    if jobs <= 1 or len(pts) < 64:
        return func(pts, arg)
    size = math.ceil(len(pts) / (4 * jobs))
    chunks = [pts[i:i + size] for i in range(0, len(pts), size)]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        parts = ex.map(func, chunks, [arg] * len(chunks))
        return [r for part in parts for r in part]


def _evaluate(case: InequalityCase, pts: list, jobs: int):
    return _map_chunks(_evaluate_chunk, pts, jobs, case.id)


def _ratio(lhs, shape, form):
    if form == "sum":
        return lhs - shape
    if shape > 0:
        return lhs / shape
    return 0.0 if lhs == 0 else math.inf


def _point_json(pt):
    return {k: (bool(v) if isinstance(v, (bool, np.bool_)) else v) for k, v in pt.items()}


def verify(case_id: str, grid: dict | None = None, jobs: int = 1, rel_tol: float = 1e-12) -> SweepReport:
    """Sweep one case over its grid (defaults overridden by `grid` axes)."""
    if case_id not in CASES:
        raise ValueError(f"unknown case {case_id!r}; expected one of {', '.join(CASE_IDS)}")
    if case_id == "c16":
        return verify_c16(grid, jobs=jobs)
    case = CASES[case_id]
    axes = parse_axes(grid)
    unknown = set(axes) - set(case.axes)
    if unknown:
        raise ValueError(f"unknown axes for {case_id}: {sorted(unknown)}")
    _check_orders(axes)
    pts = list(case.points(axes))
    results = _evaluate(case, pts, jobs)
    failures = []
    fitted, worst = -math.inf, None
    max_ratio = -math.inf
    for pt, (lhs, shape) in zip(pts, results):
        if not (math.isfinite(lhs) and math.isfinite(shape)):
            failures.append({"point": _point_json(pt), "reason": "non-finite side", "lhs": str(lhs), "rhs": str(shape)})
            continue
        r = _ratio(lhs, shape, case.form)
        if r > fitted:
            fitted, worst = r, pt
        if case.paper_constant is not None:
            c = case.paper_constant(pt)
            rhs = c * shape
            pr = _ratio(lhs, rhs, case.form)
            max_ratio = max(max_ratio, pr)
            if lhs > rhs * (1 + rel_tol) + 1e-300:
                failures.append({"point": _point_json(pt), "lhs": lhs, "rhs": rhs})
        else:
            max_ratio = max(max_ratio, r)
    if not math.isfinite(fitted):
        failures.append({"reason": "fitted constant is not finite"})
    grid_desc = {k: v for k, v in {**case.axes, **axes}.items()}
    return SweepReport(case_id, grid_desc, len(pts), max_ratio, fitted, case.paper_constant_text,
                       failures, _point_json(worst) if worst else None)


def _check_orders(axes):
    for key, cap in (("k", K_MAX), ("w", W_MAX), ("u", W_MAX), ("v", W_MAX)):
        if key in axes and any(int(x) > cap or int(x) < 0 for x in axes[key]):
            raise ValueError(f"axis {key} must lie in 0..{cap}")


C16_INFLATE = 2.0
C16_FRESH_POINTS = 10_000


def _c16_dot(kind, reg, p, pn):
    x = (pn / reg.Lam) ** 2
    return _times_exp(frobenius(prop_dot(kind, p, reg)), x) * reg.Lam**3


def _c16_fresh_chunk(pts: list, consts) -> list:
    c0, c1, d = consts
    out = []
    for pt in pts:
        reg, p, pn = _propagator_point(pt)
        c_xi = c0 + pt["xi"] * c1
        lhs = frobenius(derivative_tensor(pt["kind"], p, reg, pt["w"]))
        rhs = math.factorial(pt["w"]) * d ** pt["w"] * c_xi / (pn + reg.Lam) ** (pt["w"] + 2)
        out.append(max(lhs / rhs, _c16_dot(pt["kind"], reg, p, pn) / c_xi))
    return out


def verify_c16(grid: dict | None = None, jobs: int = 1, seed: int = 0,
               fresh_points: int = C16_FRESH_POINTS) -> SweepReport:
    """Fit c0, c1, d on a coarse grid, inflate them, test a fresh random sample."""
    case = CASES["c16"]
    axes = parse_axes(grid)
    _check_orders(axes)
    pts = list(case.points(axes))
    results = _evaluate(case, pts, jobs)
    xis = sorted({pt["xi"] for pt in pts})
    need = {}  # (xi, w) -> max |d^w C| (|p|+Lam)^{w+2}/w!
    for pt, (lhs, shape) in zip(pts, results):
        key = (pt["xi"], pt["w"])
        need[key] = max(need.get(key, 0.0), lhs / shape)
    dot_need = {xi: 0.0 for xi in xis}
    for pt in pts:
        if pt["w"] == 0:
            reg, p, pn = _propagator_point(pt)
            dot_need[pt["xi"]] = max(dot_need[pt["xi"]], _c16_dot(pt["kind"], reg, p, pn))
    ws = sorted({pt["w"] for pt in pts})
    base = max(need[(xi, 0)] for xi in xis) if 0 in ws else 1.0
    d = max([1.0] + [(max(need[(xi, w)] for xi in xis) / base) ** (1.0 / w) for w in ws if w > 0])
    required = np.array([max([dot_need[xi]] + [need[(xi, w)] / d**w for w in ws]) for xi in xis])
    # c0 + xi c1 >= required(xi), c0, c1 >= 0, minimal mean value over the xi grid
    res = linprog([1.0, float(np.mean(xis))], A_ub=-np.column_stack([np.ones(len(xis)), xis]),
                  b_ub=-required, bounds=(0, None), method="highs")
    c0, c1 = (float(v) for v in res.x)
    c0i, c1i, di = C16_INFLATE * c0, C16_INFLATE * c1, C16_INFLATE * d

    rng = np.random.default_rng(seed)
    lam_lo, lam_hi = min(case.axes["Lam"]), max(case.axes["Lam"])
    xi_lo, xi_hi = min(xis), max(xis)
    fresh = []
    for _ in range(fresh_points):
        fresh.append({
            "Lam": float(np.exp(rng.uniform(math.log(lam_lo), math.log(lam_hi)))),
            "Lam0_ratio": float(np.exp(rng.uniform(0.0, math.log(1000.0)))),
            "p_ratio": float(np.exp(rng.uniform(math.log(1e-2), math.log(1e2)))),
            "w": int(rng.integers(0, W_MAX + 1)),
            "xi": float(np.exp(rng.uniform(math.log(xi_lo), math.log(xi_hi)))),
            "kind": str(rng.choice(["ghost", "gauge"])),
            "orient": int(rng.integers(0, len(ORIENTATIONS))),
        })
    ratios = _map_chunks(_c16_fresh_chunk, fresh, jobs, (c0i, c1i, di))
    failures, worst, max_ratio = [], None, 0.0
    for pt, r in zip(fresh, ratios):
        if r > max_ratio:
            max_ratio, worst = r, pt
        if r > 1.0:
            failures.append({"point": pt, "ratio": r})
    fitted = max(c0 + c1 * xi for xi in xis)
    return SweepReport("c16", {k: v for k, v in {**case.axes, **axes}.items()}, len(pts) + fresh_points,
                       max_ratio, fitted, None, failures, worst,
                       extra={"c0": c0, "c1": c1, "d": d, "inflate": C16_INFLATE, "fresh_points": fresh_points,
                              "seed": seed})


def verify_all(jobs: int = 1) -> dict:
    return {cid: verify(cid, jobs=jobs) for cid in CASE_IDS}


def report_json(report: SweepReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True)
