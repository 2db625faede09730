import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from twistorgh import catalog
from twistorgh.fibermaps import (
    ANTIPODAL, CONST_OMEGA, IDEAL, IDENTITY, FiberMap, apply, fiber_differential, lam,
    lambda_by_charts, nabla_omega, omega_field, pushforward_horizontal, star_pushforward, stereo,
    stereo_inverse,
)

vec3 = arrays(np.float64, 3, elements=st.floats(-2, 2, allow_nan=False))
coef = st.floats(-3, 3, allow_nan=False)
S = np.eye(3)


def _unit(v):
    n = np.linalg.norm(v)
    assume(n > 1e-2)
    return v / n


@pytest.mark.parametrize("text", ["id", "antipodal", "omega", "lambda:+:2,1", "lambda:-:0.6,0.8"])
def test_parse_round_trip(text):
    assert str(FiberMap.parse(text)) == text


@pytest.mark.parametrize("text", ["", "lambda:2,1", "lambda:*:1,2", "lambda:+:1", "rotate", "lambda:+:a,b"])
def test_parse_rejects_garbage(text):
    with pytest.raises(ValueError):
        FiberMap.parse(text)


def test_holomorphic_flags():
    assert IDENTITY.holomorphic and CONST_OMEGA.holomorphic and lam(2, 1, 1).holomorphic
    assert not ANTIPODAL.holomorphic and not lam(2, 1, -1).holomorphic


def test_needs_omega():
    with pytest.raises(ValueError):
        apply(CONST_OMEGA, S[0])
    assert np.allclose(apply(ANTIPODAL, S[1]), -S[1])


@given(vec3, vec3)
def test_special_multipliers(s, o):
    s, o = _unit(s), _unit(o)
    assert np.allclose(apply(lam(1, 0, 1), s, o), s, atol=1e-12)
    assert np.allclose(apply(lam(-1, 0, -1), s, o), -s, atol=1e-12)
    assert np.allclose(apply(lam(0, 0, 1), s, o), -o, atol=1e-12)
    assert np.allclose(apply(lam(0, 0, -1), s, o), o, atol=1e-12)


@given(vec3, vec3, coef, coef, st.sampled_from([1, -1]))
def test_closed_formula_agrees_with_chart_composition(s, o, a, b, sign):
    s, o = _unit(s), _unit(o)
    assume(abs(s @ o - 1.0) > 1e-6)  # the chart pole itself is a removable point
    f = apply(lam(a, b, sign), s, o)
    assert np.linalg.norm(f) == pytest.approx(1.0, abs=1e-10)
    assert np.allclose(f, lambda_by_charts(a, b, sign, s, o), atol=1e-9)


def test_poles_map_to_plus_minus_omega():
    o = S[2]
    for sign in (1, -1):
        fm = lam(2.0, 1.0, sign)
        assert np.allclose(apply(fm, o, o), sign * o)
        assert np.allclose(lambda_by_charts(2.0, 1.0, sign, o, o), sign * o)


@given(vec3, vec3, st.sampled_from([1, -1]))
def test_stereographic_round_trip(s, o, pole):
    s, o = _unit(s), _unit(o)
    z = stereo(o, s, pole)
    if z is IDEAL:
        assert np.allclose(s, pole * o)
    else:
        assert np.allclose(stereo_inverse(o, z, pole), s, atol=1e-8)
    assert stereo(o, pole * o, pole) is IDEAL
    assert np.allclose(stereo_inverse(o, IDEAL, pole), pole * o)


@given(vec3, vec3, vec3, coef, coef)
def test_holomorphy_dichotomy(s, o, v, a, b):
    s, o = _unit(s), _unit(o)
    assume(abs(s @ o) < 0.99 and a * a + b * b > 1e-2)
    V = np.cross(s, v)
    for sign in (1, -1):
        fm = lam(a, b, sign)
        f = apply(fm, s, o)
        lhs = fiber_differential(fm, s, np.cross(s, V), o)
        rhs = np.cross(f, fiber_differential(fm, s, V, o))
        assert np.allclose(lhs, sign * rhs, atol=1e-10 * (1 + np.abs(rhs).max()))


def test_lambda_plus_value_and_minus_differential_at_omega():
    a, b = 2.0, 1.0
    ll = a * a + b * b
    o = S[2]
    expected = (2 * a * S[0] + 2 * b * S[1] + (ll - 1) * S[2]) / (ll + 1)
    assert np.allclose(apply(lam(a, b, 1), S[0], o), expected)
    fm = lam(a, b, -1)
    assert np.allclose(fiber_differential(fm, o, S[0], o), (a * S[0] + b * S[1]) / ll)
    assert np.allclose(fiber_differential(fm, o, S[1], o), (a * S[1] - b * S[0]) / ll)


def test_minus_map_mirrors_plus_map():
    s, o = np.array([0.6, 0.0, 0.8]), S[2]
    for a, b in [(2.0, 1.0), (0.6, 0.8), (0.3, -1.7)]:
        plus = apply(lam(a, b, 1), s, o)
        minus = apply(lam(a, b, -1), s, o)
        assert np.allclose(minus, plus - 2 * (plus @ o) * o)


def test_constant_map_has_zero_fibre_differential():
    assert np.allclose(fiber_differential(CONST_OMEGA, S[0], S[1], S[2]), 0)
    assert np.allclose(fiber_differential(ANTIPODAL, S[0], S[1]), -S[1])


def test_omega_is_s1_for_the_standard_structure():
    ch = catalog.build("round_sphere")
    assert np.allclose(omega_field(ch, np.array([0.1, 0.2, 0.3, -0.1])), S[0])


@pytest.mark.parametrize("name", ["flat", "s2xh2", "s2xs2", "fubini_study"])
def test_kahler_bases_have_parallel_omega(name):
    nab = nabla_omega(catalog.build(name), np.array([[0.1, -0.2, 0.05, 0.3]]))
    assert np.abs(nab).max() < 1e-12


@pytest.mark.parametrize("name", ["round_sphere", "conformal_flat", "perturbed_flat"])
@pytest.mark.parametrize("ab", [(0.6, 0.8), (-0.8, 0.6), (1.0, 0.0)])
def test_unit_modulus_pushforward_matches_general_algorithm(name, ab):
    ch = catalog.build(name)
    x = np.array([[0.1, -0.2, 0.05, 0.3], [-0.25, 0.1, 0.2, 0.0]])
    s = np.array([[0.36, 0.48, 0.8], [0.0, -0.6, 0.8]])
    nab = nabla_omega(ch, x)
    assert np.abs(nab).max() > 1e-3
    om = omega_field(ch, x)
    for sign in (1, -1):
        fm = lam(*ab, sign)
        gen = pushforward_horizontal(fm, ch, x, s)
        star = star_pushforward(fm, s[:, None, :], om[:, None, :], nab)
        assert np.allclose(gen, star, atol=1e-12)


def test_identity_and_antipodal_pushforward_is_zero():
    ch = catalog.build("perturbed_flat")
    x = np.array([0.1, 0.2, -0.1, 0.3])
    for fm in (IDENTITY, ANTIPODAL):
        assert np.abs(pushforward_horizontal(fm, ch, x, S[1])).max() < 1e-12


def test_pushforward_needs_structure():
    ch = catalog.build("flat")
    bare = type(ch)("bare", ch.metric)
    with pytest.raises(ValueError):
        pushforward_horizontal(CONST_OMEGA, bare, np.zeros(4), S[0])
