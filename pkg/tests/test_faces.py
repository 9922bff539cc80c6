import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opconvex.faces import (
    E,
    F,
    NotInFaceError,
    base_normalize,
    face_contains,
    face_generator,
    face_rep,
    is_maximal,
    is_simplicial,
    member,
    non_simplicial_witness,
    parse_face,
    smallest_closed_face,
    tau_face,
    vanishing_point,
)
from opconvex.measure import INF, ClosedSet, FiniteMeasure
from opconvex.ocfun import OcFunction, combination, evaluate, linear, make_extreme, tau_transform

from conftest import XGRID


def test_parse_face():
    assert str(parse_face("F(1, {3})")) == "F(1, {3})"
    assert str(parse_face("E({0..2, inf})")) == "E({0..2, inf})"
    assert parse_face("F(inf, 0..inf)").alpha == INF
    with pytest.raises(ValueError):
        parse_face("G(1, {2})")
    with pytest.raises(ValueError):
        parse_face("F(1, {})")


def test_face_generator_normalized_at_alpha_plus_one():
    for alpha in (0.0, 0.5, 3.0):
        for lam in (0.0, 2.0, INF):
            assert face_generator(alpha, lam, alpha + 1.0) == pytest.approx(1.0)
    for lam in (0.0, 2.0, INF):
        assert face_generator(INF, lam, 1.0) == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 2.0, INF])
def test_face_rep_resums_to_f(alpha):
    f = combination([(1.0, alpha, 0.3), (2.0, alpha, 5.0), (0.5, alpha, INF)])
    rep = face_rep(f, alpha)
    np.testing.assert_allclose(rep(XGRID), f(XGRID), rtol=1e-10, atol=1e-12)


def test_face_rep_with_segment_resums_to_f_inf():
    # constant density d on [lo, hi]: f'(inf) = d1 + d * int (2 + lam), so this d1 puts f in F_inf
    lo, hi, d = 0.5, 4.0, 0.01
    d1 = -d * ((hi - lo) * 2.0 + 0.5 * (hi * hi - lo * lo))
    f = OcFunction(1.0, d1, FiniteMeasure(segments=((lo, hi, d),)))
    rep = face_rep(f, INF)
    x = np.geomspace(1e-2, 1e2, 60)
    np.testing.assert_allclose(rep(x), f(x), rtol=1e-10)
    assert rep.weights.segments


@pytest.mark.parametrize("alpha", [0.5, 2.0])
def test_face_rep_with_segment_resums_to_f(alpha):
    f = make_extreme(alpha, 1.0)
    f = OcFunction(f.f1, f.d1, f.nu + FiniteMeasure(segments=((0.5, 4.0, 0.3),)))
    # subtract the tangent at alpha so that f(alpha) = f'(alpha) = 0
    v, s = f(alpha), f.derivative(alpha)
    f = OcFunction(f.f1 - v - s * (1.0 - alpha), f.d1 - s, f.nu)
    rep = face_rep(f, alpha)
    x = np.geomspace(1e-2, 1e2, 60)
    np.testing.assert_allclose(rep(x), f(x), rtol=1e-10, atol=1e-13)


def test_face_rep_rejects_non_members():
    with pytest.raises(NotInFaceError):
        face_rep(make_extreme(1.0, 2.0), 2.0)
    with pytest.raises(NotInFaceError):
        face_rep(linear(1.0, 1.0), INF)


def test_base_normalize():
    g = base_normalize(3.0 * make_extreme(2.0, 1.0), 2.0)
    assert evaluate(g, 3.0) == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0, 4.0, INF])
@pytest.mark.parametrize("lam", [0.0, 1.0, 7.0, INF])
def test_extreme_ray_membership(alpha, lam):
    g = make_extreme(alpha, lam)
    if not (alpha == INF and lam == INF) and not (alpha == 0.0 and lam == 0.0):
        assert member(g, F(alpha, ClosedSet.points(lam)))
        assert vanishing_point(g) == pytest.approx(alpha)
    assert member(g, F(alpha, ClosedSet.full()))
    other = 3.0 if lam != 3.0 else 2.0
    if lam != INF or alpha not in (0.0,):
        assert not member(g, F(alpha, ClosedSet.points(other))) or (alpha, lam) in ((INF, INF), (0.0, 0.0))


def test_linear_functions_and_e_faces():
    # x = g_{0,0} and 1 = g_{inf,inf} lie in every E
    assert member(linear(0.0, 1.0), E())
    assert member(linear(1.0, 0.0), E())
    assert member(linear(1.0, 2.0), E())
    assert not member(make_extreme(1.0, 2.0), E(ClosedSet.points(3.0)))
    assert member(make_extreme(1.0, 2.0), E(ClosedSet.points(2.0)))


def test_smallest_closed_face():
    assert str(smallest_closed_face(make_extreme(2.0, 3.0))) == "F(2, {3})"
    f = make_extreme(INF, 1.0) + linear(0.0, 1.0)
    assert str(smallest_closed_face(f)) == "E({1})"
    f = combination([(1.0, 1.0, 0.5), (1.0, 1.0, INF)])
    assert str(smallest_closed_face(f)) == "F(1, {0.5, inf})"
    with pytest.raises(ValueError):
        smallest_closed_face(OcFunction(0.0, 0.0))


def test_face_contains_and_maximal():
    assert face_contains(F(1.0, "{2}"), F(1.0, "{0..3}"))
    assert not face_contains(F(1.0, "{2}"), F(2.0, "{0..3}"))
    assert face_contains(F(0.0, "{0, 2}"), E("{2}"))
    assert not face_contains(F(0.5, "{0, 2}"), E("{2}"))
    assert face_contains(F(INF, "{inf, 2}"), E("{2}"))
    assert not face_contains(E(), F(1.0, "0..inf"))
    assert is_maximal(F(1.0, "0..inf"))
    assert not is_maximal(F(1.0, "0..5"))
    assert not is_maximal(E("0..inf"))


def test_tau_face():
    assert str(tau_face(F(2.0, "{0, 4}"))) == "F(0.5, {0.25, inf})"
    assert str(tau_face(E("{1..2}"))) == "E({0.5..1})"


@pytest.mark.parametrize("lam", [0.0, 1.0, 4.0, INF])
def test_non_simplicial_witness_identity(lam):
    w = non_simplicial_witness(lam)
    x = np.geomspace(1e-2, 1e2, 128)
    assert w.gap(x) <= 1e-12 * np.max(np.abs(w.lhs()(x)))


def test_is_simplicial():
    assert is_simplicial(F(1.0, "0..inf")) == (True, None)
    assert is_simplicial(E())[0]
    ok, w = is_simplicial(E("{2}"))
    assert not ok and w.lam == 2.0


alphas = st.one_of(st.just(0.0), st.just(INF), st.floats(0.01, 100.0))
lams = st.one_of(st.just(0.0), st.just(INF), st.floats(0.01, 100.0))


@settings(max_examples=40, deadline=None)
@given(alphas, st.lists(lams, min_size=1, max_size=3))
def test_membership_is_tau_invariant(alpha, lam_list):
    f = combination([(1.0, alpha, lam) for lam in lam_list])
    if f.is_zero():
        return
    face = F(alpha, ClosedSet.points(*lam_list))
    assert member(f, face)
    assert member(tau_transform(f), tau_face(face))
    np.testing.assert_allclose(tau_transform(f)(XGRID[::16]), XGRID[::16] * f(1 / XGRID[::16]), rtol=1e-9)
