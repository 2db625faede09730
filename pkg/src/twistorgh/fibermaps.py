"""Fibre-preserving maps of the twistor bundle and their differentials.

A fibre map sends a unit self-dual 2-vector ``sigma`` at ``p`` to another one
at the same point.  Four families are supported:

* ``id``: ``sigma -> sigma``
* ``antipodal``: ``sigma -> -sigma``
* ``omega``: ``sigma -> omega(p)``, the 2-vector dual to half the Kahler form of ``J``
* ``lambda:+:a,b`` / ``lambda:-:a,b``: multiplication by ``a + ib`` in the
  stereographic chart of the fibre from ``omega`` (holomorphic on fibres),
  resp. its mirror image in the plane orthogonal to ``omega`` (anti-holomorphic).

All maps are evaluated through closed rational formulas in the self-dual
components, written with :mod:`twistorgh.ad` so they can be differentiated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ad
from .fiber import cross, sd_dot, sd_matrix
from .riemann import MetricChart, frame_connection, gram_schmidt, sd_connection
from .fiber import S_PLUS


@dataclass(frozen=True)
class FiberMap:
    kind: str
    a: float = 0.0
    b: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if self.kind not in ("id", "antipodal", "omega", "lambda"):
            raise ValueError(f"unknown fibre map kind {self.kind!r}")
        if self.kind == "lambda" and self.sign not in (1, -1):
            raise ValueError("lambda fibre maps need sign +1 or -1")

    @classmethod
    def parse(cls, text: str) -> "FiberMap":
        """Parse ``id``, ``antipodal``, ``omega`` or ``lambda:<+|->:<a>,<b>``."""
        text = text.strip()
        if text in ("id", "antipodal", "omega"):
            return cls(text)
        parts = text.split(":")
        if len(parts) != 3 or parts[0] != "lambda" or parts[1] not in ("+", "-"):
            raise ValueError(f"cannot parse fibre map {text!r}")
        try:
            a, b = (float(v) for v in parts[2].split(","))
        except ValueError as exc:
            raise ValueError(f"cannot parse fibre map {text!r}") from exc
        return cls("lambda", a, b, 1 if parts[1] == "+" else -1)

    def __str__(self) -> str:
        if self.kind != "lambda":
            return self.kind
        return f"lambda:{'+' if self.sign > 0 else '-'}:{self.a:g},{self.b:g}"

    @property
    def needs_omega(self) -> bool:
        return self.kind in ("omega", "lambda")

    @property
    def holomorphic(self) -> bool:
        """Whether the restriction to each fibre is holomorphic (constants count)."""
        return self.kind in ("id", "omega") or (self.kind == "lambda" and self.sign > 0)

    def __call__(self, sigma, omega=None):
        return apply(self, sigma, omega)


IDENTITY = FiberMap("id")
ANTIPODAL = FiberMap("antipodal")
CONST_OMEGA = FiberMap("omega")


def lam(a: float, b: float, sign: int) -> FiberMap:
    return FiberMap("lambda", float(a), float(b), int(sign))


def apply(fm: FiberMap, sigma, omega=None):
    """Image of ``sigma`` (self-dual components) under the fibre map."""
    if fm.kind == "id":
        return sigma
    if fm.kind == "antipodal":
        return -sigma
    if omega is None:
        raise ValueError(f"fibre map {fm} needs the Kahler 2-vector omega")
    if fm.kind == "omega":
        return omega + 0.0 * sigma
    a, b = fm.a, fm.b
    ll = a * a + b * b
    if ll == 0.0:
        # constant map; the rational formula is 0/0 at sigma = omega
        return -fm.sign * omega + 0.0 * sigma
    c = sd_dot(sigma, omega)[..., None]
    num = 2 * a * sigma - 2 * b * cross(sigma, omega) - 2 * a * c * omega
    num = num + fm.sign * ((ll - 1.0) + (ll + 1.0) * c) * omega
    return num / ((ll + 1.0) + (ll - 1.0) * c)


def fiber_differential(fm: FiberMap, sigma, V, omega=None):
    """``f_*(V)`` for ``V`` tangent to the fibre at ``sigma``.

    The rational formula is defined on all of R^3, so its directional
    derivative along a tangent vector is the differential of the restriction.
    """
    sigma, V = np.broadcast_arrays(np.asarray(sigma, dtype=float), np.asarray(V, dtype=float))
    if omega is not None:
        omega = np.broadcast_to(np.asarray(omega, dtype=float), sigma.shape)
    s = ad.Dual(sigma, V[None], ad.new_tag())
    _, tan = ad.split(apply(fm, s, omega), s.tag, 1)
    return np.asarray(tan[0], dtype=float) + np.zeros(sigma.shape)


# -- stereographic charts -----------------------------------------------

class _Ideal:
    """The point at infinity of a stereographic chart."""

    def __repr__(self) -> str:
        return "IDEAL"


IDEAL = _Ideal()


def stereo(omega, tau, pole: int = 1, eps: float = 1e-14):
    """Stereographic projection of the fibre from ``pole * omega`` onto ``omega``'s orthogonal plane.

    Returns :data:`IDEAL` when ``tau`` is the projection pole.
    """
    omega, tau = np.asarray(omega, dtype=float), np.asarray(tau, dtype=float)
    c = float(tau @ omega)
    den = 1.0 - pole * c
    if abs(den) < eps:
        return IDEAL
    return (tau - c * omega) / den


def stereo_inverse(omega, zeta, pole: int = 1) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if zeta is IDEAL:
        return pole * omega
    zeta = np.asarray(zeta, dtype=float)
    n2 = float(zeta @ zeta)
    return (2.0 * zeta + pole * (n2 - 1.0) * omega) / (n2 + 1.0)


def lambda_by_charts(a: float, b: float, sign: int, sigma, omega) -> np.ndarray:
    """``f_lambda^sign`` by composing charts: multiply by ``a + ib`` in the chart from ``omega``.

    The complex structure of the plane is ``zeta -> omega x zeta``.  The
    ``-`` map reads the product back through the chart from ``-omega``,
    which mirrors the ``+`` map in the plane orthogonal to ``omega``.
    """
    omega = np.asarray(omega, dtype=float)
    zeta = stereo(omega, sigma, 1)
    if zeta is IDEAL:
        return sign * omega
    w = a * zeta + b * np.cross(omega, zeta)
    return stereo_inverse(omega, w, 1 if sign > 0 else -1)


# -- the Kahler 2-vector and horizontal pushforward ------------------------

def omega_from(J, g, E):
    """Self-dual components of ``omega`` with ``g(omega, X^Y) = g(JX, Y)/2``."""
    jf = ad.einsum("...ia,...ij,...jk,...kb->...ab", E, g, J, E)
    # omega has matrix jf^T; its s_k component is tr(jf S_k)/4
    return 0.25 * ad.einsum("...dc,kcd->...k", jf, S_PLUS)


def omega_field(chart: MetricChart, x):
    """Kahler 2-vector of the chart's ``J`` in the Gram-Schmidt frame at ``x``."""
    if chart.J is None:
        raise ValueError(f"chart {chart.name!r} has no almost-complex structure")
    g = chart.g(x)
    return omega_from(chart.J(x), g, gram_schmidt(g))


def nabla_omega(chart: MetricChart, x) -> np.ndarray:
    """``nabla_{E_a} omega`` as ``[..., a, k]`` (self-dual components)."""
    return pushforward_horizontal(CONST_OMEGA, chart, x, None)


def pushforward_horizontal(fm: FiberMap, chart: MetricChart, x, sigma, X=None) -> np.ndarray:
    """Vertical part of ``f_*(X^h_sigma)``.

    Uses the section ``s`` whose components in the Gram-Schmidt s-basis are
    constant and equal to those of ``sigma``:
    ``V f_*(X^h) = nabla_X(f o s) - f_*(nabla_X s)``.

    With ``X=None`` the result is returned for all frame vectors ``E_a`` as
    ``[..., a, k]``; otherwise ``X`` holds frame components.
    """
    x = np.asarray(x, dtype=float)
    batch = x.shape[:-1]
    if sigma is None:
        sigma = np.zeros(batch + (3,))
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), batch + (3,))
    if fm.needs_omega and chart.J is None:
        raise ValueError(f"fibre map {fm} needs a chart with an almost-complex structure")
    xi = ad.seed_batch(x)
    om = omega_field(chart, xi) if fm.needs_omega else None
    phi, dphi = ad.partials(apply(fm, sigma, om), xi)
    phi = ad.value(phi) + np.zeros(batch + (3,))
    dphi = ad.value(dphi) + np.zeros(batch + (4, 3))
    _, E, W = frame_connection(chart, x)
    E = ad.value(E)
    A = ad.value(sd_connection(W))
    # along frame vectors: X_a = sum_c E[c, a] d_c
    A_a = np.einsum("...ca,...ckl->...akl", E, A)
    dphi_a = np.einsum("...ca,...ck->...ak", E, dphi)
    nabla_fs = dphi_a + np.einsum("...k,...akl->...al", phi, A_a)
    nabla_s = np.einsum("...k,...akl->...al", sigma, A_a)
    omega = None if om is None else ad.value(om)
    sig_b = np.broadcast_to(sigma[..., None, :], nabla_s.shape)
    om_b = None if omega is None else np.broadcast_to(omega[..., None, :], nabla_s.shape)
    out = nabla_fs - fiber_differential(fm, sig_b, nabla_s, om_b)
    if X is None:
        return out
    return np.einsum("...a,...ak->...k", np.asarray(X, dtype=float), out)


def star_pushforward(fm: FiberMap, sigma, omega, nabla_om) -> np.ndarray:
    """Closed form of ``V f_*(X^h)`` for ``|lambda| = 1`` given ``nabla_X omega``."""
    sigma, omega, nabla_om = (np.asarray(v, dtype=float) for v in (sigma, omega, nabla_om))
    s_dn = np.sum(sigma * nabla_om, axis=-1)[..., None]
    s_o = np.sum(sigma * omega, axis=-1)[..., None]
    return -fm.b * np.cross(sigma, nabla_om) + (fm.sign - fm.a) * (s_dn * omega + s_o * nabla_om)


def twoform_of(v) -> np.ndarray:
    """Matrix ``M`` with ``2 g(v, X^Y) = X^T M Y`` for self-dual ``v``."""
    return sd_matrix(np.asarray(v, dtype=float))
