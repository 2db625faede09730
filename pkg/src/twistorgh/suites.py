"""Invariant suites run by ``twistorgh verify`` and the regression tests.

Every check reduces to a defect norm compared with a tolerance.  A check
remembers the sample where its defect was largest so failures can be traced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import analysis as an
from .fiber import (
    biv_matrix, cross, k_endo, k_sd, matrix_metric, sd_matrix, sd_pair, wedge, wedge_metric,
)
from .fibermaps import (
    ANTIPODAL, CONST_OMEGA, IDENTITY, FiberMap, apply, lam, lambda_by_charts, nabla_omega,
    omega_field, pushforward_horizontal, star_pushforward, stereo, stereo_inverse,
)
from .riemann import MetricChart, curv_apply, curv_op_from_frame, decompose, frame_curvature
from .twistor import curv_on_sd

STANDARD_MAPS = (
    IDENTITY, ANTIPODAL, CONST_OMEGA,
    lam(2, 1, 1), lam(2, 1, -1), lam(0.6, 0.8, 1), lam(0.6, 0.8, -1),
)


@dataclass
class Check:
    suite: str
    name: str
    defect: float
    tol: float
    where: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.defect <= self.tol)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "check": self.name, "defect": self.defect, "tol": self.tol,
                "passed": self.passed, "where": self.where}


def _worst(suite: str, name: str, defects, tol: float, labels) -> Check:
    defects = np.asarray(defects, dtype=float).ravel()
    i = int(np.argmax(defects))
    return Check(suite, name, float(defects[i]), tol, labels[i] if labels else "")


def _fmt(v) -> str:
    return "[" + ", ".join(f"{c:.4g}" for c in np.ravel(v)) + "]"


def _unit(rng, n, d):
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_points(chart: MetricChart, n: int, rng) -> np.ndarray:
    return chart.radius * rng.uniform(-1.0, 1.0, size=(n, 4))


# -- algebraic identities ---------------------------------------------------------

def algebra_suite(chart: MetricChart, n: int = 64, seed: int = 0, tol: float = 1e-10) -> list:
    """Pointwise identities relating 2-vectors, ``K``, the cross product and curvature."""
    rng = np.random.default_rng(seed)
    x = random_points(chart, n, rng)
    a6 = rng.normal(size=(n, 6))
    b, c, a3 = rng.normal(size=(n, 3)), rng.normal(size=(n, 3)), rng.normal(size=(n, 3))
    sig = _unit(rng, n, 3)
    V = np.cross(sig, rng.normal(size=(n, 3)))
    X, Y = rng.normal(size=(n, 4)), rng.normal(size=(n, 4))
    labels = [f"x={_fmt(p)}" for p in x]
    rf = frame_curvature(chart, x)
    scale = 1.0 + np.linalg.norm(curv_op_from_frame(rf), axis=(-2, -1))

    lhs = np.einsum("nab,nb,na->n", k_endo(a6), X, Y)
    eq2 = np.abs(lhs - 2.0 * wedge_metric(a6, wedge(X, Y)))

    # g(R(a) b, c) = g(R(b x c), a), R(a) acting on Lambda^2_+ as a derivation
    ra_b = curv_on_sd(rf, biv_matrix(a6), b)
    r_bc = curv_apply(rf, sd_matrix(cross(b, c)))
    eq4 = np.abs(np.sum(ra_b * c, axis=-1) - matrix_metric(r_bc, biv_matrix(a6))) / scale

    sV = np.cross(sig, V)
    Ks = k_sd(sig)
    KX, KY = np.einsum("nab,nb->na", Ks, X), np.einsum("nab,nb->na", Ks, Y)
    ref = sd_pair(V, X, Y)
    eq5 = np.maximum(np.abs(sd_pair(sV, X, KY) - ref), np.abs(sd_pair(sV, KX, Y) - ref))

    prod = k_sd(a3) @ k_sd(b)
    rhs = -np.sum(a3 * b, axis=-1)[:, None, None] * np.eye(4) + k_sd(np.cross(a3, b))
    eq6 = np.abs(prod - rhs).max(axis=(-2, -1))

    return [
        _worst("algebra", "K_a vs 2-vector pairing", eq2, tol, labels),
        _worst("algebra", "curvature and cross product", eq4, tol, labels),
        _worst("algebra", "sigma-cross pairing", eq5, tol, labels),
        _worst("algebra", "product of K endomorphisms", eq6, tol, labels),
    ]


# -- curvature decomposition -------------------------------------------------------

def decomposition_suite(chart: MetricChart, n: int = 8, seed: int = 0, tol: float = 1e-10) -> list:
    rng = np.random.default_rng(seed)
    x = random_points(chart, n, rng)
    labels = [f"x={_fmt(p)}" for p in x]
    rf = frame_curvature(chart, x)
    ops = curv_op_from_frame(rf)
    recon, traces, blocks, sym, bianchi = [], [], [], [], []
    for op, r in zip(ops, rf):
        d = decompose(0.5 * (op + op.T))
        recon.append(np.abs(d.reassemble() - op).max())
        traces.append(max(abs(np.trace(d.Wplus)), abs(np.trace(d.Wminus))))
        # B is the only block exchanging the two halves; W+ lives on the self-dual block alone
        full_wplus = np.zeros((6, 6))
        full_wplus[:3, :3] = d.Wplus
        blocks.append(max(np.abs(op[:3, 3:] - d.B.T).max(), np.abs(full_wplus[:, 3:]).max()))
        sym.append(np.abs(op - op.T).max())
        bianchi.append(np.abs(r + np.einsum("abcd->bcad", r) + np.einsum("abcd->cabd", r)).max())
    return [
        _worst("decomposition", "reassembly", recon, tol, labels),
        _worst("decomposition", "traceless Weyl halves", traces, tol, labels),
        _worst("decomposition", "block mapping", blocks, tol, labels),
        _worst("decomposition", "self-adjointness", sym, tol, labels),
        _worst("decomposition", "first Bianchi identity", bianchi, 1e-9, labels),
    ]


# -- closed forms against the oracles --------------------------------------------------

def _maps_for(chart: MetricChart, maps) -> list:
    return [m for m in maps if chart.J is not None or not m.needs_omega]


def oracle_suite(chart: MetricChart, maps=STANDARD_MAPS, ts=(0.5, 1.0, 2.0), n_points: int = 1,
                 n_fiber: int = 8, seed: int = 0, rel_tol: float = 1e-5, block_tol: float = 1e-6) -> list:
    """Covariant derivative and Nijenhuis tensor: closed forms against differentiation oracles."""
    x, s = an.sample_twistor_points(chart, n_points, n_fiber, seed)
    maps = _maps_for(chart, maps)
    jets = an.oracle_jets(chart, x, s, maps)
    bd = an.base_data(chart, x, s)
    out = []
    for fm in maps:
        fd = an.fiber_data(chart, bd, fm)
        d_cov, d_blk, d_nij, d_nd, where = [], [], [], [], []
        for t in ts:
            T_or = an.cov_deriv_oracle(t, jets, fm)
            T_cl = an.cov_deriv_closed(t, bd, fd)
            N_or = an.nijenhuis_oracle(t, jets, fm)
            N_cl = an.nijenhuis_closed(t, bd, fd)
            for i in range(len(x)):
                d_cov.append(an.relative_defect(T_cl[i], T_or[i]))
                d_blk.append(max(np.abs(T_or[i, :4, 4:, 4:]).max(), np.abs(T_or[i, 4:, :4, 4:]).max(),
                                 np.abs(T_or[i, 4:, 4:, :]).max()))
                d_nij.append(an.relative_defect(N_cl[i], N_or[i]))
                nd = an.nijenhuis_from_dOmega(T_cl[i], an.j_basis(fd)[i])
                d_nd.append(np.abs(nd - N_cl[i]).max())
                where.append(f"fibermap={fm} t={t:g} x={_fmt(x[i])} sigma={_fmt(s[i])}")
        out += [
            _worst("oracle", f"covariant derivative [{fm}]", d_cov, rel_tol, where),
            _worst("oracle", f"vanishing blocks [{fm}]", d_blk, block_tol, where),
            _worst("oracle", f"Nijenhuis tensor [{fm}]", d_nij, rel_tol, where),
            _worst("consistency", f"Nijenhuis from covariant derivative [{fm}]", d_nd, 1e-10, where),
        ]
    return out


def consistency_suite(chart: MetricChart, maps=STANDARD_MAPS, t: float = 1.0, n_points: int = 2,
                      n_fiber: int = 8, seed: int = 0, tol: float = 1e-10) -> list:
    """Exterior derivative and codifferential closed forms against traces of the covariant derivative."""
    x, s = an.sample_twistor_points(chart, n_points, n_fiber, seed)
    bd = an.base_data(chart, x, s)
    out = []
    for fm in _maps_for(chart, maps):
        fd = an.fiber_data(chart, bd, fm)
        T = an.cov_deriv_closed(t, bd, fd)
        scale = 1.0 + np.abs(T).max()
        d_sk = np.abs(an.codifferential_closed(t, bd, fd) - an.codifferential(T)).max(axis=-1) / scale
        skew = np.abs(T + np.swapaxes(T, -1, -2)).max(axis=(-3, -2, -1))
        where = [f"fibermap={fm} x={_fmt(p)} sigma={_fmt(q)}" for p, q in zip(x, s)]
        out += [
            _worst("consistency", f"codifferential [{fm}]", d_sk, tol, where),
            _worst("consistency", f"skew in last two slots [{fm}]", skew, tol, where),
        ]
    return out


# -- fibre maps --------------------------------------------------------------------

def maps_suite(chart: MetricChart, maps=STANDARD_MAPS, n: int = 16, seed: int = 0, tol: float = 1e-8) -> list:
    """Special values of the lambda family, chart round trips and the unit-modulus pushforward."""
    rng = np.random.default_rng(seed)
    sig = _unit(rng, n, 3)
    om = _unit(rng, n, 3)
    where = [f"sigma={_fmt(p)} omega={_fmt(q)}" for p, q in zip(sig, om)]
    d_special = np.max(np.abs(np.stack([
        apply(lam(1, 0, 1), sig, om) - sig,
        apply(lam(-1, 0, -1), sig, om) + sig,
        apply(lam(0, 0, 1), sig, om) + om,
        apply(lam(0, 0, -1), sig, om) - om,
    ])), axis=(0, 2))
    d_charts, d_round = [], []
    for i in range(n):
        for pole in (1, -1):
            z = stereo(om[i], sig[i], pole)
            d_round.append(np.abs(stereo_inverse(om[i], z, pole) - sig[i]).max())
        for sign in (1, -1):
            a, b = rng.normal(size=2)
            d_charts.append(np.abs(lambda_by_charts(a, b, sign, sig[i], om[i])
                                   - apply(lam(a, b, sign), sig[i], om[i])).max())
    out = [
        Check("maps", "special multipliers", float(d_special.max()), tol, where[int(np.argmax(d_special))]),
        _worst("maps", "stereographic round trip", d_round, tol, [w for w in where for _ in (0, 1)]),
        _worst("maps", "closed formula vs charts", d_charts, tol, [w for w in where for _ in (0, 1)]),
    ]
    if chart.J is None:
        return out
    x = random_points(chart, 4, rng)
    sx = _unit(rng, 4, 3)
    nab = nabla_omega(chart, x)
    omx = omega_field(chart, x)
    for fm in maps:
        if fm.kind != "lambda" or abs(fm.a ** 2 + fm.b ** 2 - 1.0) > 1e-12:
            continue
        gen = pushforward_horizontal(fm, chart, x, sx)
        star = star_pushforward(fm, sx[:, None, :], omx[:, None, :], nab)
        d = np.abs(gen - star).max(axis=(-2, -1))
        out.append(_worst("maps", f"unit-modulus pushforward [{fm}]", d, tol,
                          [f"x={_fmt(p)} sigma={_fmt(q)}" for p, q in zip(x, sx)]))
    return out


def run_all(chart: MetricChart, maps=None, ts=(1.0,), seed: int = 0, n_points: int = 1, n_fiber: int = 8) -> list:
    """Every suite for one chart; ``maps`` defaults to the standard list."""
    maps = STANDARD_MAPS if maps is None else tuple(maps)
    return (
        algebra_suite(chart, seed=seed)
        + decomposition_suite(chart, seed=seed)
        + oracle_suite(chart, maps, ts, n_points, n_fiber, seed)
        + consistency_suite(chart, maps, ts[0], n_points, n_fiber, seed)
        + maps_suite(chart, maps, seed=seed)
    )
