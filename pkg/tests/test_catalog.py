import numpy as np
import pytest

from twistorgh import ad, analysis, catalog
from twistorgh.fibermaps import ANTIPODAL, CONST_OMEGA, IDENTITY, lam

FAMILIES = {"omega": CONST_OMEGA, "lambda+": lam(2, 1, 1), "lambda-": lam(2, 1, -1),
            "id": IDENTITY, "antipodal": ANTIPODAL}


@pytest.mark.parametrize("name", catalog.names())
def test_measured_flags_match_the_entry(name):
    e = catalog.entry(name)
    ch = e.build()
    pts = analysis.base_points(3, ch.radius)
    assert catalog.measured_flags(ch, pts) == e.flags(e.defaults)


@pytest.mark.parametrize("name", catalog.names())
def test_almost_complex_structure_is_orthogonal(name):
    ch = catalog.build(name)
    x = analysis.base_points(4, ch.radius)
    J, g = ad.value(ch.J(x)), ad.value(ch.g(x))
    assert np.allclose(J @ J, -np.eye(4), atol=1e-10)
    assert np.allclose(np.swapaxes(J, -1, -2) @ g @ J, g, atol=1e-10)


@pytest.mark.parametrize(
    "name, family",
    [(n, f) for n in catalog.names() for f in catalog.entry(n).classes(catalog.entry(n).defaults)],
)
def test_expected_classes_at_unit_scale(name, family):
    e = catalog.entry(name)
    rep = analysis.analyze(e.build(), FAMILIES[family], 1.0)
    assert rep.class_name == e.classes(e.defaults)[family]


@pytest.mark.parametrize(
    "name, params, flags",
    [("s2xs2", {"c1": 1.0, "c2": 2.0}, {"einstein": False, "kahler": True}),
     ("conformal_flat", {"amp": 0.0}, {"ricci_flat": True, "kahler": True}),
     ("round_sphere", {"r": 3.0}, {"einstein": True, "self_dual": True})],
)
def test_flags_follow_parameters(name, params, flags):
    e = catalog.entry(name)
    ch = e.build(params)
    measured = catalog.measured_flags(ch, analysis.base_points(2, ch.radius))
    expected = e.flags(e.merged(params))
    assert measured == expected
    for k, v in flags.items():
        assert expected[k] == v


def test_perturbation_is_bounded_on_the_unit_box(rng):
    c0, c1, c2 = catalog._perturbation(3)
    x = rng.uniform(-1, 1, size=(200, 4))
    p = c0 + np.einsum("ni,ijk->njk", x, c1) + np.einsum("ni,nj,ijkl->nkl", x, x, c2)
    assert np.linalg.norm(p, 2, axis=(1, 2)).max() <= 1.0
    assert np.allclose(p, np.swapaxes(p, 1, 2))


def test_perturbation_depends_on_seed():
    a = ad.value(catalog.build("perturbed_flat", {"seed": 1}).g(np.full(4, 0.2)))
    b = ad.value(catalog.build("perturbed_flat", {"seed": 2}).g(np.full(4, 0.2)))
    assert not np.allclose(a, b)


@pytest.mark.parametrize(
    "name, params",
    [("nope", None), ("flat", {"r": 1.0}), ("round_sphere", {"r": -1.0}), ("s2xs2", {"c1": 0.0}),
     ("perturbed_flat", {"eps": 1.5}), ("s2xh2", {"c": 0.0})],
)
def test_invalid_requests(name, params):
    with pytest.raises(ValueError):
        catalog.build(name, params)
