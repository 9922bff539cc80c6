import math

import numpy as np
import pytest

from opconvex.decompose import (
    RangeError,
    decomposition_range,
    extremal_decomposition,
    ray_transport,
    tangent_line,
)
from opconvex.measure import INF
from opconvex.ocfun import combination, evaluate, linear, make_extreme

from conftest import XGRID, random_members


def x_plus_resolvent():
    return make_extreme(INF, 1.0) + linear(0.0, 1.0)


def quadratic():
    # 2x^2 - 2x + 1 = 2 (x - 1/2)^2 + 1/2
    return 2.0 * make_extreme(0.5, INF) + linear(0.5, 0.0)


def test_range_for_x_plus_resolvent():
    rng = decomposition_range(x_plus_resolvent())
    assert rng.alpha0 == 0.0 and rng.alpha1 == INF


def test_range_for_quadratic():
    rng = decomposition_range(quadratic())
    assert rng.alpha0 == pytest.approx(0.5, abs=1e-10)
    assert rng.alpha1 == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-10)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0, 4.0, 20.0])
def test_x_plus_resolvent_closed_form(alpha):
    d = extremal_decomposition(x_plus_resolvent(), alpha)
    s = (alpha + 1.0) ** 2
    assert d.a == pytest.approx((2 * alpha + 1) / s, abs=1e-12)
    assert d.c == pytest.approx((alpha**2 + 2 * alpha) / s, abs=1e-12)
    x = XGRID
    remainder = (x - alpha) ** 2 / (s * (x + 1.0))
    np.testing.assert_allclose(d.remainder(x), remainder, rtol=1e-10, atol=1e-14)


@pytest.mark.parametrize("alpha", np.linspace(0.5, 1 / math.sqrt(2.0), 5))
def test_quadratic_closed_form(alpha):
    d = extremal_decomposition(quadratic(), alpha)
    assert d.a == pytest.approx(1.0 - 2 * alpha**2, abs=1e-12)
    assert d.c == pytest.approx(2.0 * (2 * alpha - 1.0), abs=1e-12)
    assert d.remainder.boundary_coefficient == pytest.approx(2.0, rel=1e-12)


def test_decomposition_reconstructs_random_members():
    checked = 0
    for f in random_members(20, 7):
        try:
            rng = decomposition_range(f)
        except ValueError:
            continue
        hi = min(rng.alpha1, rng.alpha0 + 10.0)
        for alpha in np.linspace(rng.alpha0, hi, 5):
            d = extremal_decomposition(f, alpha)
            assert d.a >= 0 and d.c >= 0
            np.testing.assert_allclose(d(XGRID), f(XGRID), rtol=1e-9)
            checked += 1
    assert checked >= 20


def test_tangent_outside_range_raises():
    with pytest.raises(RangeError):
        tangent_line(quadratic(), 2.0)
    with pytest.raises(RangeError):
        extremal_decomposition(quadratic(), 0.1)


def test_range_rejects_face_members():
    with pytest.raises(ValueError):
        decomposition_range(make_extreme(2.0, 1.0))
    with pytest.raises(ValueError):
        decomposition_range(make_extreme(INF, 1.0))


@pytest.mark.parametrize("alpha,lam", [(1.0, 2.0), (3.0, INF), (INF, 0.5), (0.0, 4.0)])
def test_ray_transport(alpha, lam):
    beta = 1.7
    factor, fb = ray_transport(alpha, lam, beta)
    np.testing.assert_allclose(fb(XGRID), factor * make_extreme(beta, lam)(XGRID), rtol=1e-9, atol=1e-12)


def test_ray_transport_rejects_linear_generators():
    with pytest.raises(ValueError):
        ray_transport(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        ray_transport(2.0, 1.0, 2.0)


def test_range_grid_needs_cap():
    rng = decomposition_range(x_plus_resolvent())
    with pytest.raises(ValueError):
        rng.grid(4)
    assert rng.grid(3, cap=2.0).tolist() == [0.0, 1.0, 2.0]


def test_remainder_is_f_minus_tangent():
    f = combination([(1.0, 1.0, 2.0), (1.0, INF, 3.0)])
    d = extremal_decomposition(f, decomposition_range(f).alpha0)
    assert d.remainder(2.5) == pytest.approx(evaluate(f, 2.5) - d.a - 2.5 * d.c)
