"""Truncated bivariate Taylor series in (t1, t2).

A series is a float array c of shape (..., K1+1, K2+1) with c[..., i, j] the
coefficient of t1^i t2^j; leading axes are batch axes and broadcast.  Mixed
derivatives at the origin are d^i_1 d^j_2 f = i! j! c[..., i, j].  Used for
exact directional derivatives of composite functions without symbolic algebra.
"""
from __future__ import annotations

import math

import numpy as np


def constant(value, shape) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    out = np.zeros(value.shape + tuple(shape))
    out[..., 0, 0] = value
    return out


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    k1, k2 = a.shape[-2:]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for i in range(k1):
        for j in range(k2):
            out[..., i:, j:] += a[..., i:i + 1, j:j + 1] * b[..., : k1 - i, : k2 - j]
    return out


def compose(derivs, a: np.ndarray) -> np.ndarray:
    """f(a(t)) from the derivatives f^(j) at the constant term of a, j = 0..K1+K2."""
    n = a.copy()
    n[..., 0, 0] = 0.0
    top = a.shape[-2] + a.shape[-1] - 2
    if len(derivs) < top + 1:
        raise ValueError(f"need {top + 1} derivatives, got {len(derivs)}")
    # n has no constant term, so n^j vanishes once j exceeds the total order
    out = constant(derivs[0], a.shape[-2:]) + np.zeros_like(a)
    pw = np.ones_like(a) * constant(1.0, a.shape[-2:])
    for j in range(1, top + 1):
        pw = mul(pw, n)
        out = out + np.asarray(derivs[j], dtype=float)[..., None, None] / math.factorial(j) * pw
    return out


def exp(a: np.ndarray) -> np.ndarray:
    e0 = np.exp(a[..., 0, 0])
    top = a.shape[-2] + a.shape[-1] - 1
    return compose([e0] * top, a)


def reciprocal(a: np.ndarray) -> np.ndarray:
    a0 = a[..., 0, 0]
    if np.any(a0 == 0):
        raise ZeroDivisionError("series with vanishing constant term")
    top = a.shape[-2] + a.shape[-1] - 1
    derivs = [(-1) ** j * math.factorial(j) / a0 ** (j + 1) for j in range(top)]
    return compose(derivs, a)


def coefficient_derivative(c: np.ndarray, i: int, j: int = 0) -> np.ndarray:
    """i! j! c[..., i, j]."""
    return math.factorial(i) * math.factorial(j) * c[..., i, j]


def vector(x0, h1, h2, shape) -> np.ndarray:
    """Coordinate series of x0 + t1 h1 + t2 h2, shape (..., dim, K1+1, K2+1)."""
    x0 = np.asarray(x0, dtype=float)
    h1 = np.zeros_like(x0) if h1 is None else np.asarray(h1, dtype=float)
    h2 = np.zeros_like(x0) if h2 is None else np.asarray(h2, dtype=float)
    bshape = np.broadcast_shapes(x0.shape, h1.shape, h2.shape)
    out = np.zeros(bshape + tuple(shape))
    out[..., 0, 0] = x0
    if shape[0] > 1:
        out[..., 1, 0] = h1
    if shape[1] > 1:
        out[..., 0, 1] = h2
    return out


def norm_sq(coords: np.ndarray) -> np.ndarray:
    """Series of |x(t)|^2 from coordinate series (..., dim, K1+1, K2+1)."""
    return mul(coords, coords).sum(axis=-3)


def tensor_power(coords: np.ndarray, s: int) -> np.ndarray:
    """Series of x(t)^{(x) s}, shape (..., dim, ..., dim, K1+1, K2+1)."""
    dim = coords.shape[-3]
    batch = coords.shape[:-3]
    out = constant(1.0, coords.shape[-2:]) * np.ones(batch + (1, 1))
    for k in range(s):
        left = out[..., None, :, :]
        right = coords.reshape(batch + (1,) * k + (dim,) + coords.shape[-2:])
        out = mul(left, right)
    return out
