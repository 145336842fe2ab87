"""Adaptive quadrature on finite and semi-infinite intervals."""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

DEFAULT_TOL = 1e-10
DEFAULT_LIMIT = 400


class QuadratureError(RuntimeError):
    pass


def quad(f, a: float, b: float = math.inf, tol: float = DEFAULT_TOL, scale: float = 1.0,
         points=None, limit: int = DEFAULT_LIMIT) -> float:
    """Integrate f over [a, b] with Gauss-Kronrod refinement.

    A semi-infinite interval is mapped onto [0, 1) by x = a + scale*t/(1-t).
    tol is used both as absolute and relative tolerance.  Raises
    QuadratureError when the error estimate stays above sqrt(tol) relative.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if b == a:
        return 0.0
    if math.isinf(b):
        if b < 0:
            raise ValueError("only [a, inf) is supported")

        def g(t):
            u = 1.0 - t
            return f(a + scale * t / u) * scale / (u * u) if u > 0 else 0.0

        lo, hi = 0.0, 1.0
        brk = None
        if points is not None:
            brk = [(x - a) / (scale + (x - a)) for x in points if x > a]
    else:
        g, lo, hi = f, a, b
        brk = [x for x in points if a < x < b] if points is not None else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        kw = {"points": brk} if brk else {}
        val, err = integrate.quad(g, lo, hi, epsabs=tol, epsrel=tol, limit=limit, **kw)
    if not np.isfinite(val) or err > math.sqrt(tol) * max(1.0, abs(val)):
        raise QuadratureError(f"quadrature did not converge: value {val}, error estimate {err}")
    return float(val)
