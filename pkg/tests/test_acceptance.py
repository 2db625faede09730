"""Acceptance criteria, one test per criterion.

Each test prints (and records for the terminal summary) a line
``CRITERION <k>: PASS|FAIL <details>``.  Run this file directly to get only
those lines.
"""

import numpy as np
import pytest

from twistorgh import analysis as an
from twistorgh import catalog, cli, suites
from twistorgh.fibermaps import CONST_OMEGA, lam, omega_field
from twistorgh.riemann import curvature_operator, decompose

TOL = an.DEFAULT_TOL
MARGIN = an.MARGIN * TOL
T_GRID = (0.5, 1.0, 2.0)


def _emit(k, checks, record=None):
    """``checks`` is a list of ``(label, ok, value)``; returns overall success."""
    ok = all(c[1] for c in checks)
    failed = [f"{c[0]} ({c[2]})" for c in checks if not c[1]]
    detail = f"{len(checks)} checks" if ok else "failed: " + "; ".join(failed)
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    if record is not None:
        record("acceptance", line)
    return ok, failed


def _suite_checks(checks):
    return [(f"{c.suite}/{c.name} {c.where}".strip(), c.passed, f"{c.defect:.2e} > {c.tol:.0e}") for c in checks]


def criterion_1():
    out = []
    for name in catalog.names():
        out += _suite_checks(suites.algebra_suite(catalog.build(name), n=64, seed=11, tol=1e-10))
    return out


def criterion_2():
    out = []
    for name in catalog.names():
        out += _suite_checks(suites.decomposition_suite(catalog.build(name), n=8, seed=12, tol=1e-10))
    return out


def criterion_3():
    out = []
    for name in ("fubini_study", "s2xs2"):
        ch = catalog.build(name)
        for p in an.base_points(4, ch.radius):
            d = decompose(curvature_operator(ch, p))
            w, v = np.linalg.eigh(d.Wplus)
            target = np.array([d.s / 3.0, -d.s / 6.0, -d.s / 6.0])
            rel = np.abs(w[::-1] - target).max() / abs(d.s)
            om = omega_field(ch, p)
            align = 1.0 - abs(v[:, -1] @ om)
            out.append((f"{name} spectrum at {p}", rel <= 1e-6, f"{rel:.2e}"))
            out.append((f"{name} eigenvector omega at {p}", align <= 1e-6, f"{align:.2e}"))
    return out


def _oracle_checks(kinds):
    out = []
    for name in catalog.names():
        checks = suites.oracle_suite(catalog.build(name), suites.STANDARD_MAPS, T_GRID, n_points=1, n_fiber=8, seed=0)
        out += _suite_checks([c for c in checks if c.suite == "oracle" and c.name.split(" [")[0] in kinds])
    return out


def criterion_4():
    return _oracle_checks(("covariant derivative", "vanishing blocks"))


def criterion_5():
    return _oracle_checks(("Nijenhuis tensor",))


def _res(name, fm, t=1.0):
    return an.analyze(catalog.build(name), fm, t, strict=False)


def criterion_6():
    flat = _res("flat", CONST_OMEGA)
    prod = _res("s2xh2", CONST_OMEGA)
    sph = _res("round_sphere", CONST_OMEGA)
    s2s2 = _res("s2xs2", CONST_OMEGA)
    r = sph.residuals
    return [
        ("flat is Kahler", flat.class_name == "K", flat.class_name),
        ("s2xh2 is W3", prod.class_name == "W3", prod.class_name),
        ("round_sphere in G1", r["G1"] <= TOL and r["G1_N"] <= TOL, f"r_G1 = {r['G1']:.3g}"),
        ("round_sphere not Hermitian", r["N"] > MARGIN, f"r_N = {r['N']:.3g}"),
        ("round_sphere not in G2", r["G2"] > MARGIN and r["G2_N"] > MARGIN, f"r_G2 = {r['G2']:.3g}"),
        ("s2xs2 not semi-Kahler", s2s2.residuals["SK"] > MARGIN, f"r_SK = {s2s2.residuals['SK']:.3g}"),
    ]


def criterion_7():
    fp, fm = lam(2, 1, 1), lam(2, 1, -1)
    flat_m, flat_p = _res("flat", fm), _res("flat", fp)
    prod_p, prod_m = _res("s2xh2", fp), _res("s2xh2", fm)
    return [
        ("flat J- is W1+W2", flat_m.class_name == "W1+W2", flat_m.class_name),
        ("flat J- G1 defect", flat_m.residuals["G1"] > MARGIN, flat_m.residuals["G1"]),
        ("flat J- G2 defect", flat_m.residuals["G2"] > MARGIN, flat_m.residuals["G2"]),
        ("flat J+ integrable", flat_p.residuals["N"] <= TOL, flat_p.residuals["N"]),
        ("flat J+ not quasi-Kahler", flat_p.residuals["QK"] > MARGIN, flat_p.residuals["QK"]),
        ("s2xh2 J+ is W3", prod_p.class_name == "W3", prod_p.class_name),
        ("s2xh2 J- semi-Kahler", prod_m.residuals["SK"] <= TOL, prod_m.residuals["SK"]),
        ("s2xh2 J- not quasi-Kahler", prod_m.residuals["QK"] > MARGIN, prod_m.residuals["QK"]),
    ]


def criterion_8():
    out = []
    for name in catalog.names():
        out += _suite_checks(suites.maps_suite(catalog.build(name), suites.STANDARD_MAPS, n=16, seed=8, tol=1e-8))
    return out


def criterion_9():
    fp, fm = lam(0.6, 0.8, 1), lam(0.6, 0.8, -1)
    out = [
        ("flat J- quasi-Kahler", _res("flat", fm).residuals["QK"] <= TOL, _res("flat", fm).residuals["QK"]),
        ("flat J+ not quasi-Kahler", _res("flat", fp).residuals["QK"] > MARGIN, _res("flat", fp).residuals["QK"]),
    ]
    for f in (fp, fm):
        r = _res("s2xs2", f).residuals
        out.append((f"s2xs2 {f} not nearly Kahler", r["W1"] > MARGIN, r["W1"]))
        out.append((f"s2xs2 {f} not almost Kahler", r["dOmega"] > MARGIN, r["dOmega"]))
    return out


def criterion_10():
    configs = [
        ["classify", "--metric", "perturbed_flat", "--seed", "7", "--fibermap", "lambda:+:0.3,0.7", "--t", "0.5", "--t", "2"],
        ["classify", "--metric", "fubini_study", "--fibermap", "omega", "--output", "csv"],
        ["curvature", "--metric", "s2xs2", "--params", '{"c1": 1, "c2": 2}'],
        ["verify", "--metric", "conformal_flat", "--fibermap", "lambda:-:0.6,0.8"],
    ]
    out = []
    for args in configs:
        args = args + ["--no-timestamp"] + ([] if "--output" in args else ["--output", "json"])
        first, second = cli.run(args)[0], cli.run(args)[0]
        out.append((" ".join(args[:3]), first.encode() == second.encode(), "reports differ"))
    return out


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("k", range(1, 11))
def test_criterion(k, record_property):
    ok, failed = _emit(k, CRITERIA[k - 1](), record_property)
    assert ok, failed


if __name__ == "__main__":
    for i in range(1, 11):
        _emit(i, CRITERIA[i - 1]())
