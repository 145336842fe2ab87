import math

import pytest

from fe_workbench.quadrature import QuadratureError, quad


def test_exponential():
    assert quad(lambda x: math.exp(-x), 0.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("lam", [0.3, 1.0, 4.0])
def test_quartic_gaussian_moment(lam):
    got = quad(lambda k: k**5 * math.exp(-(k**4) / lam**4), 0.0, scale=lam)
    assert got == pytest.approx(math.sqrt(math.pi) * lam**6 / 8, rel=1e-10)


@pytest.mark.parametrize("lam,eta", [(0.5, 2.0), (1.0, 10.0)])
def test_log_integral(lam, eta):
    got = quad(lambda x: 1 / (x + eta), lam, eta)
    assert got == pytest.approx(math.log(2 * eta / (lam + eta)), rel=1e-12)


def test_breakpoints_and_empty_interval():
    f = lambda x: abs(x - 1.0)
    assert quad(f, 0.0, 3.0, points=[1.0]) == pytest.approx(2.5, rel=1e-12)
    assert quad(f, 2.0, 2.0) == 0.0


def test_errors():
    with pytest.raises(ValueError):
        quad(math.exp, 0.0, 1.0, tol=0)
    with pytest.raises(ValueError):
        quad(math.exp, 0.0, -math.inf)
    with pytest.raises(QuadratureError):
        quad(lambda x: 1 / x, 0.0, 1.0)
