import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from twistorgh import ad, catalog
from twistorgh.fibermaps import omega_field
from twistorgh.riemann import (
    check_spd, christoffels, curv_op_from_frame, curvature_operator, decompose, frame_curvature,
    gram_schmidt, is_anti_self_dual, is_einstein, is_kahler_at, is_self_dual, nabla_j, ricci,
    scalar_curvature,
)

point = arrays(np.float64, 4, elements=st.floats(-0.35, 0.35, allow_nan=False))


def test_flat_christoffels_and_curvature_vanish():
    ch = catalog.build("flat")
    p = np.array([0.1, -0.2, 0.3, 0.0])
    assert np.abs(christoffels(ch, p)).max() == 0.0
    assert np.abs(curvature_operator(ch, p)).max() == 0.0


@given(point)
def test_sphere_christoffels_match_conformal_formula(p):
    ch = catalog.build("round_sphere")
    du = -2.0 * p / (1.0 + p @ p)  # g = exp(2u) delta with exp(u) = 2 / (1 + |x|^2)
    eye = np.eye(4)
    expected = np.einsum("ca,b->cab", eye, du) + np.einsum("cb,a->cab", eye, du) - np.einsum("ab,c->cab", eye, du)
    assert np.allclose(christoffels(ch, p), expected, atol=1e-13)


def test_product_christoffels_are_block_diagonal():
    gam = christoffels(catalog.build("s2xh2"), np.array([0.1, 0.2, -0.15, 0.05]))
    first, second = [0, 1], [2, 3]
    for c in range(4):
        blk = first if c < 2 else second
        other = second if c < 2 else first
        assert np.abs(gam[c][np.ix_(other, range(4))]).max() < 1e-15
        assert np.abs(gam[c][np.ix_(blk, other)]).max() < 1e-15


@pytest.mark.parametrize("name", ["round_sphere", "fubini_study", "perturbed_flat", "conformal_flat"])
def test_christoffels_agree_with_finite_differences(name):
    ch = catalog.build(name)
    p = np.array([0.12, -0.05, 0.2, 0.07])
    h = 1e-3
    g = lambda q: ad.value(ch.g(q))  # noqa: E731
    dg = np.zeros((4, 4, 4))
    for c in range(4):
        e = np.eye(4)[c] * h
        dg[c] = (-g(p + 2 * e) + 8 * g(p + e) - 8 * g(p - e) + g(p - 2 * e)) / (12 * h)
    low = 0.5 * (np.einsum("adb->dab", dg) + np.einsum("bda->dab", dg) - dg)
    fd = np.einsum("cd,dab->cab", np.linalg.inv(g(p)), low)
    gam = christoffels(ch, p)
    assert np.allclose(gam, fd, atol=1e-6)
    assert np.allclose(gam, np.swapaxes(gam, 1, 2), atol=1e-14)


def test_metric_compatibility():
    ch = catalog.build("fubini_study")
    p = np.array([0.1, 0.3, -0.2, 0.05])
    xi = ad.seed_batch(p)
    g, dg = (ad.value(v) for v in ad.partials(ch.g(xi), xi))
    gam = christoffels(ch, p)
    nabla_g = dg - np.einsum("mca,mb->cab", gam, g) - np.einsum("mcb,am->cab", gam, g)
    assert np.abs(nabla_g).max() < 1e-10


@pytest.mark.parametrize("r", [1.0, 2.0])
def test_round_sphere_curvature_operator(r):
    ch = catalog.build("round_sphere", {"r": r})
    op = curvature_operator(ch, np.array([0.2, -0.1, 0.05, 0.3]))
    assert np.allclose(op, 2.0 / r ** 2 * np.eye(6), atol=1e-12)
    d = decompose(op)
    assert d.s == pytest.approx(12.0 / r ** 2)
    assert np.abs(d.Wplus).max() < 1e-12 and np.abs(d.Wminus).max() < 1e-12 and np.abs(d.B).max() < 1e-12


def test_zero_operator_decomposes_to_zero():
    d = decompose(np.zeros((6, 6)))
    assert d.s == 0.0 and not d.Wplus.any() and not d.Wminus.any() and not d.B.any()


def test_asymmetric_operator_is_rejected():
    op = np.zeros((6, 6))
    op[0, 1] = 1.0
    with pytest.raises(ValueError):
        decompose(op)


def test_fubini_study_spectrum_and_kahler_form():
    ch = catalog.build("fubini_study")
    p = np.array([0.2, -0.1, 0.3, 0.15])
    d = decompose(curvature_operator(ch, p))
    assert d.s == pytest.approx(24.0)
    w, v = np.linalg.eigh(d.Wplus)
    assert np.allclose(w[::-1] / (d.s / 6.0), [2.0, -1.0, -1.0], atol=1e-10)
    om = ad.value(omega_field(ch, p))
    assert abs(abs(v[:, -1] @ om) - 1.0) < 1e-10
    # scalar part plus the Weyl eigenvalue: g(R(omega), omega) = s/6 + s/3
    op = curvature_operator(ch, p)
    assert om @ op[:3, :3] @ om == pytest.approx(d.s / 2.0)
    assert om @ d.Wplus @ om == pytest.approx(d.s / 3.0)


def test_s2xh2_is_scalar_flat_kahler_with_split_ricci():
    ch = catalog.build("s2xh2")
    p = np.array([0.1, 0.2, -0.1, 0.05])
    rf = frame_curvature(ch, p)
    assert np.allclose(ricci(rf), np.diag([1.0, 1.0, -1.0, -1.0]), atol=1e-12)
    assert scalar_curvature(ch, p) == pytest.approx(0.0, abs=1e-12)
    assert is_kahler_at(ch, p) and not is_einstein(ch, p)
    om = ad.value(omega_field(ch, p))
    assert om @ curvature_operator(ch, p)[:3, :3] @ om == pytest.approx(0.0, abs=1e-12)


def test_predicates_on_flat_and_sphere():
    flat, sphere = catalog.build("flat"), catalog.build("round_sphere")
    p = np.array([0.1, 0.0, -0.2, 0.3])
    assert all(f(flat, p) for f in (is_einstein, is_self_dual, is_anti_self_dual, is_kahler_at))
    assert is_einstein(sphere, p) and not is_kahler_at(sphere, p)
    assert np.abs(nabla_j(sphere, p)).max() > 0.1


def test_kahler_test_requires_j():
    ch = catalog.build("flat")
    bare = type(ch)("bare", ch.metric)
    with pytest.raises(ValueError):
        nabla_j(bare, np.zeros(4))


def test_non_spd_metric_is_rejected():
    ch = type(catalog.build("flat"))("neg", lambda x: -np.broadcast_to(np.eye(4), ad.shape_of(x)[:-1] + (4, 4)))
    with pytest.raises(ValueError):
        check_spd(ch, np.zeros(4))
    with pytest.raises(ValueError):
        christoffels(ch, np.zeros(4))


def test_gram_schmidt_frame_is_oriented_orthonormal():
    g = ad.value(catalog.build("perturbed_flat").g(np.array([0.3, -0.2, 0.1, 0.25])))
    E = ad.value(gram_schmidt(g))
    assert np.allclose(E.T @ g @ E, np.eye(4), atol=1e-12)
    assert np.linalg.det(E) > 0


def _random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(4, 4)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, [2, 3]] = q[:, [3, 2]]
    return q


@pytest.mark.parametrize("name", ["fubini_study", "s2xs2", "perturbed_flat"])
def test_invariants_do_not_depend_on_the_frame(name, rng):
    ch = catalog.build(name)
    p = np.array([0.1, -0.3, 0.2, 0.05])
    E = ad.value(gram_schmidt(ch.g(p)))
    d1 = decompose(curvature_operator(ch, p))
    d2 = decompose(curvature_operator(ch, p, frame=E @ _random_rotation(rng)))
    assert d1.s == pytest.approx(d2.s, abs=1e-9)
    assert np.allclose(np.linalg.eigvalsh(d1.Wplus), np.linalg.eigvalsh(d2.Wplus), atol=1e-9)
    assert np.allclose(np.linalg.eigvalsh(d1.Wminus), np.linalg.eigvalsh(d2.Wminus), atol=1e-9)


@pytest.mark.parametrize("name", catalog.names())
def test_bianchi_symmetry_and_reassembly(name):
    ch = catalog.build(name)
    p = np.array([0.05, 0.1, -0.2, 0.3])
    rf = frame_curvature(ch, p)
    assert np.abs(rf + np.einsum("abcd->bcad", rf) + np.einsum("abcd->cabd", rf)).max() < 1e-9
    op = curv_op_from_frame(rf)
    d = decompose(op)
    assert np.abs(d.reassemble() - op).max() < 1e-10
    assert abs(np.trace(d.Wplus)) < 1e-10 and abs(np.trace(d.Wminus)) < 1e-10
