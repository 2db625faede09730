"""Pointwise algebra of 2-vectors on an oriented Euclidean 4-space.

Everything here is expressed in an oriented orthonormal frame ``E_1..E_4``.
A 2-vector is stored either as its 6 components in the basis ``E_i^E_j``
(``i<j``, ordered 12, 13, 14, 23, 24, 34) or as an antisymmetric 4x4 matrix
``B`` with ``b = 1/2 sum B_ab E_a^E_b``.  The metric is
``g(v1^v2, v3^v4) = 1/2 det[g(v_i, v_j)]`` so that ``g(b, c) = tr(B^T C)/4``.

Self-dual 2-vectors are stored by their 3 components in the orthonormal basis

    s1 = E12 + E34,  s2 = E13 - E24,  s3 = E14 + E23

and anti-self-dual ones in ``sb1 = E12 - E34``, ``sb2 = E13 + E24``,
``sb3 = E14 - E23``.  The skew endomorphism ``K_a`` defined by
``g(K_a X, Y) = 2 g(a, X^Y)`` has matrix ``-A``.

Functions taking self-dual components are written with :mod:`twistorgh.ad`
operations so they accept dual numbers and leading batch axes.
"""

from __future__ import annotations

import numpy as np

from . import ad

PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _unit(i: int, j: int) -> np.ndarray:
    m = np.zeros((4, 4))
    m[i, j], m[j, i] = 1.0, -1.0
    return m


# matrices of s1, s2, s3 and sb1, sb2, sb3
S_PLUS = np.array([
    _unit(0, 1) + _unit(2, 3),
    _unit(0, 2) - _unit(1, 3),
    _unit(0, 3) + _unit(1, 2),
])
S_MINUS = np.array([
    _unit(0, 1) - _unit(2, 3),
    _unit(0, 2) + _unit(1, 3),
    _unit(0, 3) - _unit(1, 2),
])
S_ALL = np.concatenate([S_PLUS, S_MINUS])
K_PLUS = -S_PLUS  # K_{s_k}

# Levi-Civita symbol for the cross product on Lambda^2_+
EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS3[_i, _j, _k], EPS3[_j, _i, _k] = 1.0, -1.0


# -- 6-component bivectors ----------------------------------------------

def biv_matrix(b) -> np.ndarray:
    """Antisymmetric matrix of a 2-vector given by its 6 components."""
    b = np.asarray(b, dtype=float)
    m = np.zeros(b.shape[:-1] + (4, 4))
    for n, (i, j) in enumerate(PAIRS):
        m[..., i, j] = b[..., n]
        m[..., j, i] = -b[..., n]
    return m


def biv_components(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return np.stack([m[..., i, j] for i, j in PAIRS], axis=-1)


def wedge(x, y) -> np.ndarray:
    """Components of ``x ^ y`` for frame vectors ``x``, ``y``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    return biv_components(np.einsum("...a,...b->...ab", x, y) - np.einsum("...a,...b->...ab", y, x))


def wedge_metric(b1, b2):
    """``g(b1, b2)`` for 6-component 2-vectors."""
    return 0.5 * np.sum(np.asarray(b1, dtype=float) * np.asarray(b2, dtype=float), axis=-1)


def matrix_metric(m1, m2):
    """``g(b1, b2)`` for 2-vectors given as antisymmetric matrices."""
    return ad.einsum("...ab,...ab->...", m1, m2) * 0.25


def hodge_split(b):
    """Self-dual and anti-self-dual components ``(plus, minus)`` of a 2-vector."""
    m = biv_matrix(b)
    return np.einsum("...ab,kab->...k", m, S_PLUS) / 4.0, np.einsum("...ab,kab->...k", m, S_MINUS) / 4.0


def hodge_star(b) -> np.ndarray:
    plus, minus = hodge_split(b)
    return biv_components(sd_matrix(plus) - asd_matrix(minus))


def sd_matrix(a):
    """Matrix of the self-dual 2-vector with components ``a``."""
    return ad.einsum("...k,kab->...ab", a, S_PLUS)


def asd_matrix(a):
    return ad.einsum("...k,kab->...ab", a, S_MINUS)


def sd_to_biv(a) -> np.ndarray:
    return biv_components(sd_matrix(np.asarray(a, dtype=float)))


def asd_to_biv(a) -> np.ndarray:
    return biv_components(asd_matrix(np.asarray(a, dtype=float)))


def sd_pair(a, x, y):
    """``g(a, x^y)`` for self-dual ``a`` and frame vectors ``x``, ``y``."""
    return 0.5 * ad.einsum("...k,kab,...a,...b->...", a, S_PLUS, x, y)


# -- endomorphisms and the cross product ---------------------------------

def k_endo(b) -> np.ndarray:
    """Matrix of ``K_b`` for a 6-component 2-vector."""
    return -biv_matrix(b)


def k_sd(a):
    """Matrix of ``K_a`` for self-dual components ``a`` (dual-number friendly)."""
    return ad.einsum("...k,kab->...ab", a, K_PLUS)


def cross(a, b):
    """Cross product on self-dual components; ``s1 x s2 = s3``."""
    return ad.einsum("ijk,...i,...j->...k", EPS3, a, b)


def cross_matrix(a):
    """Matrix ``C`` with ``C v = a x v``."""
    return ad.einsum("ijk,...i->...kj", EPS3, a)


def sd_dot(a, b):
    return ad.einsum("...k,...k->...", a, b)


def sd_norm(a):
    return ad.sqrt(sd_dot(a, a))


# -- frames ---------------------------------------------------------------

def adapted_frame(sigma, variant: int = 1, frame=None, tol: float = 1e-9) -> np.ndarray:
    """An oriented orthonormal frame in which ``sigma`` becomes ``s_variant``.

    ``sigma`` holds self-dual components relative to ``frame`` (columns are
    the frame vectors; identity by default).  The construction starts from
    ``E' = frame[:, 0]``, adds ``K_sigma E'`` and completes with the first
    remaining frame vector orthogonal to both.
    """
    sigma = np.asarray(sigma, dtype=float)
    if abs(np.linalg.norm(sigma) - 1.0) > tol:
        raise ValueError("sigma must be a unit self-dual 2-vector")
    base = np.eye(4) if frame is None else np.asarray(frame, dtype=float)
    k = k_sd(sigma)
    e1 = np.eye(4)[0]
    ke1 = k @ e1
    e2 = None
    for c in np.eye(4)[1:]:
        v = c - (c @ e1) * e1 - (c @ ke1) * ke1
        if np.linalg.norm(v) > 0.5:
            e2 = v / np.linalg.norm(v)
            break
    ke2 = k @ e2
    if variant == 1:
        cols = (e1, ke1, e2, ke2)
    elif variant == 2:
        cols = (e1, e2, ke1, -ke2)
    elif variant == 3:
        cols = (e1, e2, ke2, ke1)
    else:
        raise ValueError("variant must be 1, 2 or 3")
    return base @ np.stack(cols, axis=1)


def sd_in_frame(sigma, m) -> np.ndarray:
    """Self-dual components of ``sigma`` relative to the oriented orthonormal frame ``m``.

    ``m`` holds the new frame vectors as columns in the old frame.
    """
    mat = m.T @ sd_matrix(np.asarray(sigma, dtype=float)) @ m
    return np.einsum("ab,kab->k", mat, S_PLUS) / 4.0
