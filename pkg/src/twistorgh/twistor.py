"""The twistor space of a chart: points, tangent vectors, charts and the metrics h_t.

A point of the twistor space is a base point ``x`` together with a unit
self-dual 2-vector ``sigma`` (components in the Gram-Schmidt s-basis at ``x``).
A tangent vector is split into a horizontal part (frame components of its
projection) and a vertical part (self-dual components orthogonal to ``sigma``).

For coordinate computations the fibre is parametrised around ``sigma0`` by
``sigma(u) = (sigma0 + u1 nu1 + u2 nu2) / |.|``, giving 6 unconstrained
coordinates ``z = (x, u)``.  The linear map ``T`` sends a coordinate vector to
its (horizontal frame components, vertical s-components) so that

    h_t = T^T diag(1, 1, 1, 1, t, t, t) T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ad
from .fiber import cross, cross_matrix, k_sd, sd_dot, sd_matrix, S_PLUS
from .fibermaps import FiberMap, apply, omega_from
from .riemann import MetricChart, curv_endo, frame_connection, gram_schmidt, sd_connection


def vertical_frame(sigma) -> np.ndarray:
    """Orthonormal ``(nu1, nu2)`` with ``sigma x nu1 = nu2``, as ``[..., 2, 3]``.

    ``nu1`` is the basis vector ``s_k`` with smallest ``|sigma_k|`` (first on
    ties), orthogonalised against ``sigma``.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(np.abs(np.linalg.norm(sigma, axis=-1) - 1.0) > 1e-9):
        raise ValueError("sigma must be a unit self-dual 2-vector")
    k = np.argmin(np.abs(sigma), axis=-1)
    e = np.eye(3)[k]
    v = e - np.sum(e * sigma, axis=-1)[..., None] * sigma
    nu1 = v / np.linalg.norm(v, axis=-1)[..., None]
    nu2 = np.cross(sigma, nu1)
    return np.stack([nu1, nu2], axis=-2)


@dataclass(frozen=True)
class TwistorPoint:
    x: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.norm(self.sigma) - 1.0) > 1e-12:
            raise ValueError("sigma must have unit norm")


@dataclass(frozen=True)
class TwistorVec:
    hor: np.ndarray
    ver: np.ndarray

    def __add__(self, other: "TwistorVec") -> "TwistorVec":
        return TwistorVec(self.hor + other.hor, self.ver + other.ver)

    def __mul__(self, c: float) -> "TwistorVec":
        return TwistorVec(c * self.hor, c * self.ver)

    __rmul__ = __mul__

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.hor, self.ver])


def ht_inner(t: float, A: TwistorVec, B: TwistorVec) -> float:
    return float(A.hor @ B.hor + t * (A.ver @ B.ver))


def f_sigma(fm: FiberMap, chart: MetricChart, pt: TwistorPoint) -> np.ndarray:
    om = None
    if fm.needs_omega:
        if chart.J is None:
            raise ValueError(f"fibre map {fm} needs a chart with an almost-complex structure")
        g = chart.g(pt.x)
        om = omega_from(chart.J(pt.x), g, gram_schmidt(g))
    return np.asarray(apply(fm, pt.sigma, om), dtype=float)


def jf_apply(fm: FiberMap, chart: MetricChart, pt: TwistorPoint, A: TwistorVec) -> TwistorVec:
    """``J_f A``: ``K_{f(sigma)}`` on the horizontal part, ``sigma x .`` on the vertical part."""
    f = f_sigma(fm, chart, pt)
    return TwistorVec(k_sd(f) @ A.hor, np.cross(pt.sigma, A.ver))


def kahler_form(t: float, fm: FiberMap, chart: MetricChart, pt: TwistorPoint, A: TwistorVec, B: TwistorVec) -> float:
    return ht_inner(t, jf_apply(fm, chart, pt, A), B)


# -- coordinate charts ------------------------------------------------------

@dataclass
class ChartFields:
    """Coordinate-level data of a twistor chart at (possibly dual) points ``z``."""

    g: object
    E: object
    A: object  # A[..., c, k, l] = g(nabla_c s_k, s_l)
    y: object  # sigma(u)
    Yu: object  # d sigma / d u, [..., k, i]
    G: object  # vertical part of d/dx_c, [..., k, c]
    T: object  # (ξ, V) = T dz, [..., 7, 6]
    omega: object = None

    def lift_inverse(self):
        """``L`` with ``dz = L (ξ, V)`` for vertical parts orthogonal to ``y``."""
        P = ad.einsum("...ij,...kj->...ik", ad.inv(ad.einsum("...ki,...kj->...ij", self.Yu, self.Yu)), self.Yu)
        batch = ad.shape_of(self.E)[:-2]
        top = ad.concatenate([self.E, np.zeros(batch + (4, 3))], axis=-1)
        bottom = ad.concatenate([-ad.einsum("...ik,...kc,...ca->...ia", P, self.G, self.E), P], axis=-1)
        return ad.concatenate([top, bottom], axis=-2)


@dataclass(frozen=True)
class TwistorChart:
    """Coordinates ``z = (x, u)`` around the twistor points ``(x0, sigma0)``."""

    chart: MetricChart
    x0: np.ndarray
    sigma0: np.ndarray
    nu: np.ndarray

    @classmethod
    def at(cls, chart: MetricChart, x0, sigma0) -> "TwistorChart":
        sigma0 = np.asarray(sigma0, dtype=float)
        return cls(chart, np.asarray(x0, dtype=float), sigma0, vertical_frame(sigma0))

    def z0(self) -> np.ndarray:
        batch = self.x0.shape[:-1]
        return np.concatenate([self.x0, np.zeros(batch + (2,))], axis=-1)

    def fields(self, z, with_omega: bool = False) -> ChartFields:
        x = z[..., :4]
        u = z[..., 4:]
        g, E, W = frame_connection(self.chart, x)
        A = sd_connection(W)
        v = self.sigma0 + ad.einsum("...i,...ik->...k", u, self.nu)
        nv = ad.sqrt(sd_dot(v, v))
        y = v / nv[..., None]
        # d y / d u_i = (nu_i - y (y . nu_i)) / |v|
        yn = ad.einsum("...k,...ik->...i", y, self.nu)
        Yu = (ad.einsum("...ik->...ki", self.nu + 0.0 * u[..., None]) - ad.einsum("...k,...i->...ki", y, yn)) / nv[..., None, None]
        G = ad.einsum("...j,...cjk->...kc", y, A)
        batch = ad.shape_of(x)[:-1]
        einv = ad.einsum("...ia,...ij->...aj", E, g)
        top = ad.concatenate([einv, np.zeros(batch + (4, 2))], axis=-1)
        bottom = ad.concatenate([G, Yu], axis=-1)
        T = ad.concatenate([top, bottom], axis=-2)
        om = None
        if with_omega and self.chart.J is not None:
            om = omega_from(self.chart.J(x), g, E)
        return ChartFields(g, E, A, y, Yu, G, T, om)


HOR = np.diag([1.0, 1, 1, 1, 0, 0, 0])
VER = np.diag([0.0, 0, 0, 0, 1, 1, 1])


def ht_parts(T):
    """``(H0, H1)`` with ``h_t = H0 + t H1`` in z-coordinates."""
    return (ad.einsum("...ai,ab,...bj->...ij", T, HOR, T), ad.einsum("...ai,ab,...bj->...ij", T, VER, T))


def ht_matrix(T, t: float):
    h0, h1 = ht_parts(T)
    return h0 + t * h1


def omega_parts(T, Kf, C):
    """``(W0, W1)`` with ``Omega = W0 + t W1`` in z-coordinates."""
    w0 = ad.einsum("...ai,...ba,...bj->...ij", T[..., :4, :], Kf, T[..., :4, :])
    w1 = ad.einsum("...ai,...ba,...bj->...ij", T[..., 4:, :], C, T[..., 4:, :])
    return w0, w1


def jf_coords(fl: ChartFields, Kf, C):
    """Matrix of ``J_f`` acting on z-coordinate vectors."""
    batch = ad.shape_of(Kf)[:-2]
    top = ad.concatenate([Kf, np.zeros(batch + (4, 3))], axis=-1)
    bottom = ad.concatenate([np.zeros(batch + (3, 4)), C], axis=-1)
    mid = ad.concatenate([top, bottom], axis=-2)
    return ad.einsum("...ij,...jk,...kl->...il", fl.lift_inverse(), mid, fl.T)


def onb_coords(fl: ChartFields, t: float) -> np.ndarray:
    """Columns: z-components of ``E_1^h..E_4^h, nu_1/sqrt t, nu_2/sqrt t`` at ``u = 0``."""
    L = ad.value(fl.lift_inverse())
    batch = L.shape[:-2]
    nu = np.asarray(fl.Yu, dtype=float) if not isinstance(fl.Yu, ad.Dual) else ad.value(fl.Yu)
    cols = np.zeros(batch + (7, 6))
    cols[..., :4, :4] = np.eye(4)
    cols[..., 4:, 4:] = nu / np.sqrt(t)  # at u = 0 the columns of Yu are nu_1, nu_2
    return np.einsum("...ij,...jk->...ik", L, cols)


def horizontal_lift_coords(tc: TwistorChart, X) -> np.ndarray:
    """z-components of ``X^h`` at ``(x0, sigma0)`` for a coordinate vector ``X``."""
    fl = tc.fields(tc.z0())
    L = ad.value(fl.lift_inverse())
    E = ad.value(fl.E)
    xi = np.linalg.solve(E, np.asarray(X, dtype=float))
    return L[..., :, :4] @ xi


# -- closed-form Levi-Civita connection --------------------------------------

def curv_on_sd(rf, a_mat, sigma) -> np.ndarray:
    """Self-dual components of ``R(a) sigma`` (curvature acting as a derivation)."""
    L = curv_endo(rf, a_mat)
    S = sd_matrix(np.asarray(sigma, dtype=float))
    M = L @ S + S @ np.swapaxes(L, -1, -2)
    return 0.25 * np.einsum("...ab,kab->...k", M, S_PLUS)


def levi_civita_closed(t: float, rf, W, sigma, kind: str, X, Y) -> TwistorVec:
    """``D_{X^h} Y^h`` (kind ``"hh"``) or ``D_V X^h`` (kind ``"vh"``, ``X`` is ``V``).

    For ``"hh"``, ``Y`` is extended with constant frame components, so
    ``nabla_X Y = sum_a Y_a nabla_X E_a``; ``W[a, b] = g(nabla_X E_a, E_b)`` is
    the frame connection along ``X``.  ``rf`` is the frame curvature tensor.
    """
    X, Y, sigma = (np.asarray(v, dtype=float) for v in (X, Y, sigma))
    if kind == "hh":
        nab = np.asarray(W, dtype=float).T @ Y
        a = np.outer(X, Y) - np.outer(Y, X)
        return TwistorVec(nab, 0.5 * curv_on_sd(rf, a, sigma))
    if kind == "vh":
        V, Xh = X, Y
        L = curv_endo(rf, sd_matrix(np.cross(sigma, V)))
        return TwistorVec(-0.5 * t * (L @ Xh), np.zeros(3))
    raise ValueError(f"unsupported kind {kind!r}")
