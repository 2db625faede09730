"""Covariant derivative of the Kahler form, its traces, the Nijenhuis tensor,
Gray-Hervella residuals and the classifier.

Tensors on the twistor space are given in the h_t-orthonormal basis

    E_1^h, E_2^h, E_3^h, E_4^h, nu_1/sqrt(t), nu_2/sqrt(t)

at a batch of twistor points (leading axis).  ``T[..., i, j, k]`` stands for
``(D_{A_i} Omega)(A_j, A_k)`` and ``N[..., i, j, k]`` for
``h_t(N(A_i, A_j), A_k)``.

Closed forms evaluate curvature and fibre-map data of the base only.  The
oracles build the 6-dimensional metric, Kahler form and almost complex
structure in twistor coordinates and differentiate them directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from . import ad
from .fiber import cross_matrix, k_sd, sd_matrix
from .fibermaps import FiberMap, apply, fiber_differential, omega_field, pushforward_horizontal
from .riemann import MetricChart, _lowered, curv_apply, frame_curvature, gram_schmidt
from .twistor import TwistorChart, jf_coords, ht_parts, omega_parts, onb_coords, vertical_frame

DEFAULT_TOL = 1e-7
MARGIN = 10.0


# -- base data --------------------------------------------------------------

@dataclass
class BaseData:
    """Everything the closed forms need at a batch of twistor points."""

    x: np.ndarray
    sigma: np.ndarray
    E: np.ndarray
    Rf: np.ndarray
    nu: np.ndarray
    omega: Optional[np.ndarray]


@dataclass
class FiberData:
    fm: FiberMap
    f: np.ndarray  # f(sigma)
    Kf: np.ndarray  # K_{f(sigma)}
    P: np.ndarray  # V f_*(E_a^h), [..., a, k]
    fU: np.ndarray  # f_*(nu_m), [..., m, k]
    fJU: np.ndarray  # f_*(sigma x nu_m)


def base_data(chart: MetricChart, x, sigma) -> BaseData:
    x = np.asarray(x, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    g = ad.value(chart.g(x))
    E = ad.value(gram_schmidt(g))
    om = ad.value(omega_field(chart, x)) if chart.J is not None else None
    return BaseData(x, sigma, E, frame_curvature(chart, x, E), vertical_frame(sigma), om)


def fiber_data(chart: MetricChart, bd: BaseData, fm: FiberMap) -> FiberData:
    if fm.needs_omega and bd.omega is None:
        raise ValueError(f"fibre map {fm} needs a chart with an almost-complex structure")
    om = bd.omega
    f = np.asarray(apply(fm, bd.sigma, om), dtype=float) + 0.0 * bd.sigma
    P = pushforward_horizontal(fm, chart, bd.x, bd.sigma)
    sig = np.broadcast_to(bd.sigma[..., None, :], bd.nu.shape)
    omb = None if om is None else np.broadcast_to(om[..., None, :], bd.nu.shape)
    fU = fiber_differential(fm, sig, bd.nu, omb)
    fJU = fiber_differential(fm, sig, np.cross(sig, bd.nu), omb)
    return FiberData(fm, f, ad.value(k_sd(f)), P, fU, fJU)


def j_basis(fd: FiberData) -> np.ndarray:
    """Matrix of ``J_f`` in the orthonormal basis."""
    batch = fd.Kf.shape[:-2]
    J = np.zeros(batch + (6, 6))
    J[..., :4, :4] = fd.Kf
    J[..., 5, 4] = 1.0
    J[..., 4, 5] = -1.0
    return J


def _sdm(v) -> np.ndarray:
    return ad.value(sd_matrix(np.asarray(v, dtype=float)))


# -- closed forms -------------------------------------------------------------

def _curv_pieces(t: float, bd: BaseData):
    U = bd.nu / np.sqrt(t)
    rf = bd.Rf[..., None, :, :, :, :]
    MU = curv_apply(rf, _sdm(U))
    MsU = curv_apply(rf, _sdm(np.cross(bd.sigma[..., None, :], U)))
    return MU, MsU


def cov_deriv_closed(t: float, bd: BaseData, fd: FiberData) -> np.ndarray:
    """``(D_A Omega)(B, C)`` from the base curvature and fibre-map data."""
    batch = bd.x.shape[:-1]
    T = np.zeros(batch + (6, 6, 6))
    T[..., :4, :4, :4] = _sdm(fd.P)
    MU, MsU = _curv_pieces(t, bd)
    K = fd.Kf[..., None, :, :]
    Kt = np.swapaxes(K, -1, -2)
    hhv = -t / 4.0 * MU + t / 4.0 * MsU @ K  # [m, a, b]
    T[..., :4, :4, 4:] = np.moveaxis(hhv, -3, -1)
    T[..., :4, 4:, :4] = -np.einsum("...mab->...amb", hhv)
    vhh = -t / 4.0 * (MsU @ K + Kt @ MsU) + _sdm(fd.fU / np.sqrt(t))
    T[..., 4:, :4, :4] = vhh
    return T


def nijenhuis_closed(t: float, bd: BaseData, fd: FiberData) -> np.ndarray:
    """``h_t(N(A, B), C)`` from the base curvature and fibre-map data."""
    batch = bd.x.shape[:-1]
    N = np.zeros(batch + (6, 6, 6))
    K = fd.Kf
    Kt = np.swapaxes(K, -1, -2)
    Pm = _sdm(fd.P)  # Pm[a] = matrix of V f_*(E_a^h)
    PK = np.einsum("...da,...dbc->...abc", K, Pm)  # V f_*((K E_a)^h)
    KtP = np.einsum("...db,...adc->...abc", K, Pm)  # [a, b, c] = (K^T Pm[a])[b, c]
    hhh = KtP - np.einsum("...bac->...abc", KtP) + PK - np.einsum("...bac->...abc", PK)
    N[..., :4, :4, :4] = hhh
    MU, MsU = _curv_pieces(t, bd)
    Kb = K[..., None, :, :]
    Ktb = Kt[..., None, :, :]
    hhv = -t / 2.0 * (MU @ Kb + Ktb @ MU) - t / 2.0 * (MsU - Ktb @ MsU @ Kb)  # [m, a, b]
    N[..., :4, :4, 4:] = np.moveaxis(hhv, -3, -1)
    fU = fd.fU / np.sqrt(t)
    fJU = fd.fJU / np.sqrt(t)
    # the opposite overall sign to the usual display; confirmed by the bracket oracle
    hvh = _sdm(np.cross(fd.f[..., None, :], fU)) - _sdm(fJU)  # [m, a, c]
    N[..., :4, 4:, :4] = np.einsum("...mac->...amc", hvh)
    N[..., 4:, :4, :4] = -hvh
    return N


def nijenhuis_from_dOmega(T: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``h(N(A,B),C) = DΩ(A, JB, C) - DΩ(JB, A, C) - DΩ(B, JA, C) + DΩ(JA, B, C)``."""
    t1 = np.einsum("...ib,...aic->...abc", J, T)
    t2 = np.einsum("...ib,...iac->...abc", J, T)
    return t1 - t2 - np.einsum("...bac->...abc", t1) + np.einsum("...bac->...abc", t2)


def cyclic(T: np.ndarray) -> np.ndarray:
    return T + np.einsum("...bca->...abc", T) + np.einsum("...cab->...abc", T)


def exterior_d(T: np.ndarray) -> np.ndarray:
    """``dΩ(A, B, C)`` as the cyclic sum of ``DΩ``."""
    return cyclic(T)


def codifferential(T: np.ndarray) -> np.ndarray:
    """``δΩ(C) = -sum_i (D_{A_i} Ω)(A_i, C)``."""
    return -np.einsum("...iic->...c", T)


def codifferential_closed(t: float, bd: BaseData, fd: FiberData) -> np.ndarray:
    """``δΩ`` from its trace formulas: horizontal trace of ``V f_*`` and ``-t g(R(σ x U), f)``."""
    batch = bd.x.shape[:-1]
    out = np.zeros(batch + (6,))
    Pm = _sdm(fd.P)
    out[..., :4] = -np.einsum("...aac->...c", Pm)
    _, MsU = _curv_pieces(t, bd)
    fm = _sdm(fd.f)[..., None, :, :]
    out[..., 4:] = -t * 0.25 * np.einsum("...mab,...mab->...m", MsU, np.broadcast_to(fm, MsU.shape))
    return out


# -- oracles ------------------------------------------------------------------

@dataclass
class OracleJets:
    """Values and first z-derivatives of the twistor-chart fields at z = 0."""

    fields: object
    h0: np.ndarray
    dh0: np.ndarray
    h1: np.ndarray
    dh1: np.ndarray
    w1: np.ndarray
    dw1: np.ndarray
    per_map: dict = field(default_factory=dict)  # str(fm) -> (w0, dw0, J, dJ)


def oracle_jets(chart: MetricChart, x, sigma, fmaps) -> OracleJets:
    tc = TwistorChart.at(chart, x, sigma)
    z = ad.seed_batch(tc.z0())
    fl = tc.fields(z, with_omega=any(fm.needs_omega for fm in fmaps))
    H0, H1 = ht_parts(fl.T)
    C = cross_matrix(fl.y)
    h0, dh0 = (ad.value(v) for v in ad.partials(H0, z))
    h1, dh1 = (ad.value(v) for v in ad.partials(H1, z))
    batch = tc.x0.shape[:-1]
    zeros4 = np.zeros(batch + (4, 4))
    _, W1 = omega_parts(fl.T, zeros4, C)
    w1, dw1 = (ad.value(v) for v in ad.partials(W1, z))
    jets = OracleJets(fl, h0, dh0, h1, dh1, w1, dw1)
    for fm in fmaps:
        if fm.needs_omega and fl.omega is None:
            raise ValueError(f"fibre map {fm} needs a chart with an almost-complex structure")
        Kf = k_sd(apply(fm, fl.y, fl.omega))
        W0, _ = omega_parts(fl.T, Kf, C * 0.0)
        J = jf_coords(fl, Kf, C)
        w0, dw0 = (ad.value(v) for v in ad.partials(W0, z))
        jv, dj = (ad.value(v) for v in ad.partials(J, z))
        jets.per_map[str(fm)] = (w0, dw0, jv, dj)
    return jets


def _christoffel(h, dh):
    return np.einsum("...md,...dca->...mca", np.linalg.inv(h), ad.value(_lowered(dh)))


def cov_deriv_oracle(t: float, jets: OracleJets, fm: FiberMap) -> np.ndarray:
    """``DΩ`` from the Levi-Civita connection of ``h_t`` in twistor coordinates."""
    w0, dw0, _, _ = jets.per_map[str(fm)]
    h = jets.h0 + t * jets.h1
    gam = _christoffel(h, jets.dh0 + t * jets.dh1)
    om = w0 + t * jets.w1
    dom = dw0 + t * jets.dw1
    nab = dom - np.einsum("...dca,...db->...cab", gam, om) - np.einsum("...dcb,...ad->...cab", gam, om)
    B = onb_coords(jets.fields, t)
    return np.einsum("...cab,...ci,...aj,...bk->...ijk", nab, B, B, B, optimize=True)


def nijenhuis_oracle(t: float, jets: OracleJets, fm: FiberMap) -> np.ndarray:
    """``h_t(N(A, B), C)`` from ``N = [JA,JB] - J[JA,B] - J[A,JB] - [A,B]`` on constant coordinate fields."""
    _, _, J, dJ = jets.per_map[str(fm)]
    h = jets.h0 + t * jets.h1
    B = onb_coords(jets.fields, t)
    D = np.einsum("...ci,...cmn->...imn", B, dJ)
    DJ = np.einsum("...ci,...cmn->...imn", J @ B, dJ)
    t1 = np.einsum("...imn,...nj->...ijm", DJ, B)
    t3 = np.einsum("...mk,...jkn,...ni->...ijm", J, D, B)
    N = t1 - np.einsum("...jim->...ijm", t1) + t3 - np.einsum("...jim->...ijm", t3)
    return np.einsum("...ijm,...mn,...nk->...ijk", N, h, B, optimize=True)


def relative_defect(closed, oracle) -> float:
    """``max`` over points of ``|closed - oracle| / max(|oracle|, 1)`` (Frobenius norms)."""
    closed, oracle = np.asarray(closed), np.asarray(oracle)
    axes = tuple(range(closed.ndim - 3, closed.ndim))
    diff = np.sqrt(np.sum((closed - oracle) ** 2, axis=axes))
    scale = np.maximum(np.sqrt(np.sum(oracle ** 2, axis=axes)), 1.0)
    return float(np.max(diff / scale))


# -- Levi-Civita and bracket oracles for the base-to-twistor formulas --------

def _lift_field(fl, X):
    L = fl.lift_inverse()
    return ad.einsum("...ma,...a->...m", L[..., :, :4], X)


def levi_civita_oracle(t: float, chart: MetricChart, x, sigma, kind: str, X, Y):
    """``(ξ, V)`` parts of ``D_{X^h}Y^h`` (``"hh"``) or ``D_V X^h`` (``"vh"``; ``X`` is ``V``).

    Horizontal lifts are of the fields with constant Gram-Schmidt frame components.
    """
    tc = TwistorChart.at(chart, x, sigma)
    z = ad.seed_batch(tc.z0())
    fl = tc.fields(z)
    H0, H1 = ht_parts(fl.T)
    h0, dh0 = (ad.value(v) for v in ad.partials(H0, z))
    h1, dh1 = (ad.value(v) for v in ad.partials(H1, z))
    gam = _christoffel(h0 + t * h1, dh0 + t * dh1)
    L0 = ad.value(fl.lift_inverse())
    T0 = ad.value(fl.T)
    X, Y = np.asarray(X, dtype=float), np.asarray(Y, dtype=float)
    if kind == "hh":
        a = L0[..., :, :4] @ X
        field_ = Y
    elif kind == "vh":
        a = L0[..., :, 4:] @ np.asarray(X, dtype=float)
        field_ = Y
    else:
        raise ValueError(f"unsupported kind {kind!r}")
    b, db = (ad.value(v) for v in ad.partials(_lift_field(fl, field_), z))
    d = np.einsum("...c,...cm->...m", a, db) + np.einsum("...mca,...c,...a->...m", gam, a, b)
    out = T0 @ d
    return out[..., :4], out[..., 4:]


def bracket_oracle(chart: MetricChart, x, sigma, X, Y):
    """``(ξ, V)`` parts of ``[X^h, Y^h]`` for constant-frame-component fields ``X``, ``Y``."""
    tc = TwistorChart.at(chart, x, sigma)
    z = ad.seed_batch(tc.z0())
    fl = tc.fields(z)
    xh, dxh = (ad.value(v) for v in ad.partials(_lift_field(fl, np.asarray(X, dtype=float)), z))
    yh, dyh = (ad.value(v) for v in ad.partials(_lift_field(fl, np.asarray(Y, dtype=float)), z))
    br = np.einsum("...c,...cm->...m", xh, dyh) - np.einsum("...c,...cm->...m", yh, dxh)
    out = ad.value(fl.T) @ br
    return out[..., :4], out[..., 4:]


def fibre_geodesic_oracle(t: float, chart: MetricChart, x, sigma) -> np.ndarray:
    """Horizontal parts of ``D_{d/du_i} d/du_j``; zero when fibres are totally geodesic."""
    tc = TwistorChart.at(chart, x, sigma)
    z = ad.seed_batch(tc.z0())
    fl = tc.fields(z)
    H0, H1 = ht_parts(fl.T)
    h0, dh0 = (ad.value(v) for v in ad.partials(H0, z))
    h1, dh1 = (ad.value(v) for v in ad.partials(H1, z))
    gam = _christoffel(h0 + t * h1, dh0 + t * dh1)
    T0 = ad.value(fl.T)
    return np.einsum("...hm,...mij->...ijh", T0[..., :4, :], gam[..., :, 4:, 4:])


# -- Gray-Hervella residuals ----------------------------------------------------

def _norm(a, naxes: int) -> np.ndarray:
    a = np.asarray(a)
    return np.sqrt(np.sum(a * a, axis=tuple(range(a.ndim - naxes, a.ndim))))


def residual_tensors(T: np.ndarray, N: np.ndarray, J: np.ndarray) -> dict:
    """Defects of the class-defining identities (all per point)."""
    aJJ = np.einsum("...ia,...jb,...ijc->...abc", J, J, T)
    delta = codifferential(T)
    deltaJ = np.einsum("...ic,...i->...c", J, delta)
    eye = np.broadcast_to(np.eye(6), J.shape)
    qk = T + aJJ
    rhs = 0.5 * (
        np.einsum("...ab,...c->...abc", eye, delta)
        - np.einsum("...ac,...b->...abc", eye, delta)
        - np.einsum("...ab,...c->...abc", J, deltaJ)
        + np.einsum("...ac,...b->...abc", J, deltaJ)
    )
    swap = lambda a: np.einsum("...bac->...abc", a)  # noqa: E731
    NJ = np.einsum("...abi,...ic->...abc", N, J)
    return {
        "total": T,
        "SK": delta,
        "QK": qk,
        "124": qk + rhs,
        "G1": T + swap(T) - aJJ - swap(aJJ),
        "G2": cyclic(T - aJJ),
        "W1": T + swap(T),
        "dOmega": cyclic(T),
        "N": N,
        "G1_N": N + np.einsum("...cba->...abc", N),
        "G2_N": cyclic(NJ),
        "N_hv": N[..., :4, 4:, :4],
    }


RESIDUAL_NAMES = ("total", "SK", "124", "G1", "G2", "N", "dOmega", "W1", "QK", "G1_N", "G2_N", "N_hv")


@dataclass
class GHResiduals:
    t: float
    n_points: int
    values: dict  # name -> max over points of the Frobenius norm

    def __getitem__(self, name: str) -> float:
        return self.values[name]


def residuals_from(t: float, T: np.ndarray, N: np.ndarray, J: np.ndarray) -> GHResiduals:
    tens = residual_tensors(T, N, J)
    vals = {}
    for name in RESIDUAL_NAMES:
        a = tens[name]
        naxes = 1 if name == "SK" else 3
        vals[name] = float(np.max(_norm(a, naxes)))
    return GHResiduals(t, int(np.prod(T.shape[:-3])), vals)


def gh_residuals(t: float, chart: MetricChart, fm: FiberMap, x, sigma) -> GHResiduals:
    """Residuals from the closed forms at the twistor points ``(x[i], sigma[i])``."""
    bd = base_data(chart, x, sigma)
    fd = fiber_data(chart, bd, fm)
    T = cov_deriv_closed(t, bd, fd)
    N = nijenhuis_closed(t, bd, fd)
    return residuals_from(t, T, N, j_basis(fd))


# -- classification ---------------------------------------------------------------

ALIASES = {
    "K": "Kähler",
    "W1": "nearly Kähler",
    "W2": "almost Kähler",
    "W1+W2": "quasi-Kähler",
    "W1+W2+W3": "semi-Kähler",
    "W3+W4": "Hermitian",
    "W1+W3+W4": "G1",
    "W2+W3+W4": "G2",
}

# component W_i is absent iff the residual of the complementary codim-1 class vanishes
COMPLEMENT = {"w1": "G2", "w2": "G1", "w3": "124", "w4": "SK"}


class InconsistentPattern(Exception):
    def __init__(self, message: str, report: "GHReport"):
        super().__init__(message)
        self.report = report


@dataclass
class GHReport:
    class_name: str
    label: str
    pattern: dict
    residuals: GHResiduals
    tol: float
    marginal: list
    inconsistency: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "class": self.class_name,
            "label": self.label,
            "pattern": dict(self.pattern),
            "residuals": dict(self.residuals.values),
            "tol": self.tol,
            "t": self.residuals.t,
            "points": self.residuals.n_points,
            "marginal": list(self.marginal),
            "inconsistency": self.inconsistency,
        }


def class_name(pattern: dict) -> str:
    present = [f"W{i}" for i in range(1, 5) if pattern[f"w{i}"]]
    if not present:
        return "K"
    if len(present) == 4:
        return "W"
    return "+".join(present)


def classify(res: GHResiduals, tol: float = DEFAULT_TOL, strict: bool = True) -> GHReport:
    """Gray-Hervella class from the four codim-1 residuals.

    A residual counts as vanishing at ``<= tol`` and as present above; values
    in ``(tol, MARGIN * tol]`` are listed as marginal.  Contradictory
    residual patterns raise :class:`InconsistentPattern` (or are recorded on
    the report when ``strict`` is false).
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    v = res.values
    pattern = {w: v[COMPLEMENT[w]] > tol for w in ("w1", "w2", "w3", "w4")}
    marginal = sorted(k for k, r in v.items() if tol < r <= MARGIN * tol)
    name = class_name(pattern)
    label = f"{name} ({ALIASES[name]})" if name in ALIASES else name
    problems = []
    big = MARGIN * tol
    if v["total"] <= tol:
        bad = sorted(k for k, r in v.items() if r > big)
        if bad:
            problems.append(f"DΩ vanishes but {', '.join(bad)} do not")
    elif not any(pattern.values()) and v["total"] > big:
        problems.append("all codim-1 residuals vanish but DΩ does not")
    for a, b in (("G1", "G1_N"), ("G2", "G2_N")):
        if min(v[a], v[b]) <= tol and max(v[a], v[b]) > big:
            problems.append(f"{a} and {b} disagree on vanishing")
    report = GHReport(name, label, pattern, res, tol, marginal, "; ".join(problems) or None)
    if problems and strict:
        raise InconsistentPattern(report.inconsistency, report)
    return report


# -- sampling -----------------------------------------------------------------------

def base_points(n: int, radius: float) -> np.ndarray:
    """Deterministic Halton points in the box ``[-radius, radius]^4`` (origin excluded)."""
    pts = qmc.Halton(d=4, scramble=False).random(n + 1)[1:]
    return radius * (2.0 * pts - 1.0)


def fiber_points(n: int, seed: int) -> np.ndarray:
    """``±s1, ±s2, ±s3`` followed by seeded random unit vectors."""
    fixed = np.concatenate([np.eye(3), -np.eye(3)])[[0, 3, 1, 4, 2, 5]]
    if n <= 6:
        return fixed[:n]
    rng = np.random.default_rng(seed)
    extra = rng.normal(size=(n - 6, 3))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    return np.concatenate([fixed, extra])


def sample_twistor_points(chart: MetricChart, n_points: int, n_fiber: int, seed: int):
    """Cartesian product of base and fibre samples as flat arrays ``(x, sigma)``."""
    xs = base_points(n_points, chart.radius)
    ss = fiber_points(n_fiber, seed)
    x = np.repeat(xs, len(ss), axis=0)
    s = np.tile(ss, (len(xs), 1))
    return x, s


def analyze(chart: MetricChart, fm: FiberMap, t: float = 1.0, n_points: int = 2, n_fiber: int = 8,
            seed: int = 0, tol: float = DEFAULT_TOL, strict: bool = True) -> GHReport:
    """Sample the twistor space of ``chart`` and classify ``(Z, h_t, J_f)``."""
    if t <= 0:
        raise ValueError("t must be positive")
    x, s = sample_twistor_points(chart, n_points, n_fiber, seed)
    return classify(gh_residuals(t, chart, fm, x, s), tol, strict)
