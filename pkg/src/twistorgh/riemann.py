"""Riemannian geometry of a 4-dimensional chart.

The curvature sign convention is ``R(X, Y) = nabla_[X,Y] - [nabla_X, nabla_Y]``,
the negative of the common ``[nabla_X, nabla_Y] - nabla_[X,Y]``.  The only place
the conversion happens is :func:`curvature_coords`.  With this sign the unit
round 4-sphere has curvature operator ``2 Id`` on 2-vectors and scalar
curvature 12.

Metric fields are written once over :mod:`twistorgh.ad` scalars, so every
derivative below is exact up to rounding.  All point arguments may carry
leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import ad
from .fiber import S_ALL, S_PLUS


@dataclass(frozen=True)
class MetricChart:
    """A metric (and optional almost-complex) field on a box in R^4.

    ``metric(x)`` maps points of shape ``(..., 4)`` to ``(..., 4, 4)``; ``J(x)``
    likewise gives the matrix of ``J`` acting on coordinate column vectors.
    Both must be written with :mod:`twistorgh.ad` operations.
    """

    name: str
    metric: Callable
    J: Optional[Callable] = None
    radius: float = 0.4
    params: dict = field(default_factory=dict)

    def g(self, x):
        return self.metric(x)


def gram_schmidt(g):
    """Oriented orthonormal frame from the coordinate fields; columns are ``E_a``.

    Orthonormalising ``d/dx_1 .. d/dx_4`` in order yields an upper-triangular
    matrix with positive diagonal, so the frame is positively oriented.
    """
    batch = ad.shape_of(g)[:-2]
    cols = []
    for a in range(4):
        v = np.broadcast_to(np.eye(4)[a], batch + (4,))
        ga = g[..., :, a]
        for e in cols:
            v = v - ad.einsum("...i,...i->...", ga, e)[..., None] * e
        n = ad.sqrt(ad.einsum("...i,...ij,...j->...", v, g, v))
        cols.append(v / n[..., None])
    return ad.stack(cols, axis=-1)


def metric_jet(chart: MetricChart, x):
    """``(g, dg)`` with ``dg[..., c, a, b] = d_c g_ab``."""
    xi = ad.seed_batch(x)
    return ad.partials(chart.g(xi), xi)


def _lowered(dg):
    # Gamma_{d a b} = 1/2 (d_a g_db + d_b g_da - d_d g_ab), returned as [..., d, a, b]
    return 0.5 * (
        ad.einsum("...adb->...dab", dg) + ad.einsum("...bda->...dab", dg) - dg
    )


def christoffel_field(chart: MetricChart, x):
    """``Gamma[..., c, a, b] = Gamma^c_{ab}``; accepts dual-number points."""
    g, dg = metric_jet(chart, x)
    return ad.einsum("...cd,...dab->...cab", ad.inv(g), _lowered(dg))


def christoffels(chart: MetricChart, p) -> np.ndarray:
    """Christoffel symbols at plain points; non-positive metrics are rejected."""
    p = np.asarray(p, dtype=float)
    check_spd(chart, p)
    return ad.value(christoffel_field(chart, p))


def check_spd(chart: MetricChart, p) -> None:
    g = ad.value(chart.g(np.asarray(p, dtype=float)))
    if not np.all(np.linalg.eigvalsh(g) > 0):
        raise ValueError(f"metric of chart {chart.name!r} is not positive definite at {p}")


def frame_connection(chart: MetricChart, x):
    """Frame field and its connection forms.

    Returns ``(g, E, W)`` where ``E`` is the Gram-Schmidt frame and
    ``W[..., c, a, b] = g(nabla_{d/dx_c} E_a, E_b)``.  Works for dual points.
    """
    xi = ad.seed_batch(x)
    g_d = chart.g(xi)
    e_d = gram_schmidt(g_d)
    g, dg = ad.partials(g_d, xi)
    e, de = ad.partials(e_d, xi)
    low = _lowered(dg)
    # g(E_b, d_c E_a + Gamma_c E_a)
    w = ad.einsum("...ib,...ij,...cja->...cab", e, g, de) + ad.einsum(
        "...ib,...icj,...ja->...cab", e, low, e
    )
    return g, e, w


def sd_connection(w):
    """``A[..., c, k, l] = g(nabla_c s_k, s_l)`` from frame connection forms."""
    # nabla s_k has matrix W^T S_k + S_k W
    d = ad.einsum("...cba,kbd->...ckad", w, S_PLUS) + ad.einsum("...kab,...cbd->...ckad", np.broadcast_to(S_PLUS, (3, 4, 4)), w)
    return 0.25 * ad.einsum("...ckad,lad->...ckl", d, S_PLUS)


def curvature_coords(chart: MetricChart, x) -> np.ndarray:
    """``Rc[..., a, b, c, d] = g(R(d_a, d_b) d_c, d_d)`` at plain points."""
    x = np.asarray(x, dtype=float)
    xi = ad.seed_batch(x)
    gam, dgam = ad.partials(christoffel_field(chart, xi), xi)
    gam, dgam = ad.value(gam), ad.value(dgam)
    g = ad.value(chart.g(x))
    # dgam[..., m, c, a, b] = d_m Gamma^c_ab
    # common convention: R^d_{cab} = d_a G^d_bc - d_b G^d_ac + G^d_ae G^e_bc - G^d_be G^e_ac
    r_std = (
        np.einsum("...adbc->...dcab", dgam)
        - np.einsum("...bdac->...dcab", dgam)
        + np.einsum("...dae,...ebc->...dcab", gam, gam)
        - np.einsum("...dbe,...eac->...dcab", gam, gam)
    )
    # sign flip to R(X,Y) = nabla_[X,Y] - [nabla_X, nabla_Y]
    return -np.einsum("...dm,...mcab->...abcd", g, r_std)


def frame_curvature(chart: MetricChart, x, frame=None) -> np.ndarray:
    """``Rf[..., a, b, c, d] = g(R(E_a, E_b) E_c, E_d)`` in an orthonormal frame."""
    x = np.asarray(x, dtype=float)
    rc = curvature_coords(chart, x)
    e = ad.value(gram_schmidt(chart.g(x))) if frame is None else np.asarray(frame, dtype=float)
    return np.einsum("...ijkl,...ia,...jb,...kc,...ld->...abcd", rc, e, e, e, e, optimize=True)


def curv_op_from_frame(rf) -> np.ndarray:
    """6x6 matrix of the curvature operator in the basis (s1, s2, s3, sb1, sb2, sb3)."""
    return 0.25 * np.einsum("iab,jcd,...abcd->...ij", S_ALL, S_ALL, rf, optimize=True)


def curvature_operator(chart: MetricChart, p, frame=None) -> np.ndarray:
    return curv_op_from_frame(frame_curvature(chart, p, frame))


def curv_apply(rf, a_mat):
    """Matrix of the 2-vector ``R(a)`` for ``a`` given as a matrix."""
    return np.einsum("...ab,...abcd->...cd", a_mat, rf)


def curv_endo(rf, a_mat):
    """Matrix ``L`` of the endomorphism ``R(a) = 1/2 sum a_ab R(E_a, E_b)``."""
    return 0.5 * np.einsum("...ab,...abcd->...dc", a_mat, rf)


@dataclass(frozen=True)
class CurvDecomp:
    s: float
    Wplus: np.ndarray
    Wminus: np.ndarray
    B: np.ndarray

    def reassemble(self) -> np.ndarray:
        op = np.zeros((6, 6))
        op[:3, :3] = self.Wplus + self.s / 6.0 * np.eye(3)
        op[3:, 3:] = self.Wminus + self.s / 6.0 * np.eye(3)
        op[3:, :3] = self.B
        op[:3, 3:] = self.B.T
        return op


def decompose(op, tol: float = 1e-10) -> CurvDecomp:
    """Split the curvature operator into ``s/6 Id + B + W+ + W-``."""
    op = np.asarray(op, dtype=float)
    if np.abs(op - op.T).max() > tol * (1.0 + np.abs(op).max()):
        raise ValueError("curvature operator is not symmetric")
    s = float(np.trace(op))
    eye = np.eye(3)
    return CurvDecomp(
        s=s,
        Wplus=op[:3, :3] - s / 6.0 * eye,
        Wminus=op[3:, 3:] - s / 6.0 * eye,
        B=op[3:, :3].copy(),
    )


def ricci(rf) -> np.ndarray:
    """Ricci tensor in the frame: ``Ric(Y, Z) = sum_a <R_std(E_a, Y) Z, E_a>``."""
    return -np.einsum("...abca->...bc", rf)


def scalar_curvature(chart: MetricChart, p) -> float:
    return float(np.trace(curvature_operator(chart, p)))


def _rel(x, op) -> float:
    return float(np.linalg.norm(x)) / (1.0 + float(np.linalg.norm(op)))


def is_einstein(chart: MetricChart, p, tol: float = 1e-8) -> bool:
    op = curvature_operator(chart, p)
    return _rel(decompose(op).B, op) <= tol


def is_self_dual(chart: MetricChart, p, tol: float = 1e-8) -> bool:
    op = curvature_operator(chart, p)
    return _rel(decompose(op).Wminus, op) <= tol


def is_anti_self_dual(chart: MetricChart, p, tol: float = 1e-8) -> bool:
    op = curvature_operator(chart, p)
    return _rel(decompose(op).Wplus, op) <= tol


def nabla_j(chart: MetricChart, p) -> np.ndarray:
    """``(nabla_c J)^a_b`` at plain points, as ``[..., c, a, b]``."""
    if chart.J is None:
        raise ValueError(f"chart {chart.name!r} has no almost-complex structure")
    p = np.asarray(p, dtype=float)
    xi = ad.seed_batch(p)
    j, dj = ad.partials(chart.J(xi), xi)
    j, dj = ad.value(j), ad.value(dj)
    gam = christoffels(chart, p)
    return dj + np.einsum("...acm,...mb->...cab", gam, j) - np.einsum("...am,...mcb->...cab", j, gam)


def is_kahler_at(chart: MetricChart, p, tol: float = 1e-8) -> bool:
    return float(np.abs(nabla_j(chart, p)).max()) <= tol
