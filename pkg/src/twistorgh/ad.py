"""Forward-mode automatic differentiation with nestable, array-valued dual numbers.

A :class:`Dual` behaves like an array of shape ``S``.  It carries a value of
shape ``S`` and a stack of ``k`` tangents of shape ``(k,) + S``, one per seeded
direction.  Values and tangents may themselves be :class:`Dual` objects of a
lower *tag*, which is how higher derivatives are obtained: seeding an input
that is already a dual number nests one more level of differentiation.

Tags are handed out in creation order.  A dual with a larger tag is always the
outer one, so mixing two levels treats the lower-tag operand as a constant of
the higher level (no perturbation confusion as long as inner seeds are created
inside the function being differentiated).

Only the operations needed by the geometry code are provided: elementwise
arithmetic with numpy broadcasting, a few transcendental functions, indexing,
reshaping, reductions, ``matmul`` and matrix inverse.
"""

from __future__ import annotations

import itertools

import numpy as np

_TAGS = itertools.count(1)


def new_tag() -> int:
    return next(_TAGS)


def tag_of(x) -> int:
    return x.tag if isinstance(x, Dual) else 0


def shape_of(x) -> tuple:
    return x.shape if isinstance(x, Dual) else np.shape(x)


def ndim_of(x) -> int:
    return len(shape_of(x))


def reshape(x, shape):
    if isinstance(x, Dual):
        return x.reshape(shape)
    return np.reshape(x, shape)


def broadcast_to(x, shape):
    if isinstance(x, Dual):
        return x.broadcast_to(shape)
    return np.broadcast_to(x, shape)


def _lead(c, r):
    # constant of rank <= r -> shape (1,)*(r + 1 - ndim) + shape, aligned against a tangent stack
    s = shape_of(c)
    return reshape(c, (1,) * (r + 1 - len(s)) + s)


def _pad(t, r):
    # tangent stack (k,)+S -> (k,)+(1,)*(r - len S)+S
    s = shape_of(t)
    return reshape(t, s[:1] + (1,) * (r + 1 - len(s)) + s[1:])


class Dual:
    """Array-valued dual number; see the module docstring."""

    __slots__ = ("val", "tan", "tag")
    __array_ufunc__ = None  # make numpy defer to our reflected operators

    def __init__(self, val, tan, tag: int):
        self.val = val
        self.tan = tan
        self.tag = tag

    # -- array protocol -------------------------------------------------
    @property
    def shape(self) -> tuple:
        return shape_of(self.val)

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def k(self) -> int:
        return shape_of(self.tan)[0]

    def reshape(self, shape) -> "Dual":
        shape = tuple(shape)
        return Dual(reshape(self.val, shape), reshape(self.tan, (self.k,) + shape), self.tag)

    def broadcast_to(self, shape) -> "Dual":
        shape = tuple(shape)
        return Dual(broadcast_to(self.val, shape), broadcast_to(self.tan, (self.k,) + shape), self.tag)

    def __getitem__(self, idx) -> "Dual":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Dual(self.val[idx], self.tan[(slice(None),) + idx], self.tag)

    def swapaxes(self, a: int, b: int) -> "Dual":
        n = self.ndim
        a, b = a % n, b % n
        return Dual(_swap(self.val, a, b), _swap(self.tan, a + 1, b + 1), self.tag)

    def transpose(self, axes=None) -> "Dual":
        if axes is None:
            axes = tuple(reversed(range(self.ndim)))
        return Dual(_transpose(self.val, axes), _transpose(self.tan, (0,) + tuple(a + 1 for a in axes)), self.tag)

    @property
    def T(self) -> "Dual":
        return self.transpose()

    @property
    def mT(self) -> "Dual":
        return self.swapaxes(-1, -2)

    def sum(self, axis=None) -> "Dual":
        n = self.ndim
        if axis is None:
            axis = tuple(range(n))
        if isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a % n for a in axis)
        return Dual(asum(self.val, axis), asum(self.tan, tuple(a + 1 for a in axis)), self.tag)

    def __len__(self) -> int:
        return self.shape[0]

    def __repr__(self) -> str:
        return f"Dual(tag={self.tag}, shape={self.shape}, k={self.k}, val={value(self)!r})"

    # -- arithmetic -----------------------------------------------------
    def __neg__(self):
        return Dual(-self.val, -self.tan, self.tag)

    def __pos__(self):
        return self

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, -other)

    def __rsub__(self, other):
        return add(other, -self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, n):
        if isinstance(n, Dual):
            raise TypeError("dual exponents are not supported")
        v = self.val ** n
        return _chain(self, v, n * self.val ** (n - 1))

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)


def _swap(x, a, b):
    return x.swapaxes(a, b) if isinstance(x, Dual) else np.swapaxes(x, a, b)


def _transpose(x, axes):
    return x.transpose(axes) if isinstance(x, Dual) else np.transpose(x, axes)


def asum(x, axis=None):
    if isinstance(x, Dual):
        return x.sum(axis)
    return np.sum(x, axis=axis)


def _chain(x: Dual, fval, dval) -> Dual:
    return Dual(fval, x.tan * _lead(dval, x.ndim), x.tag)


def add(a, b):
    ta, tb = tag_of(a), tag_of(b)
    if ta == tb == 0:
        return np.add(a, b)
    if ta == tb:
        r = max(a.ndim, b.ndim)
        return Dual(a.val + b.val, _pad(a.tan, r) + _pad(b.tan, r), ta)
    if ta < tb:
        a, b = b, a
    val = a.val + b
    s = shape_of(val)
    return Dual(val, broadcast_to(_pad(a.tan, len(s)), (a.k,) + s), a.tag)


def mul(a, b):
    ta, tb = tag_of(a), tag_of(b)
    if ta == tb == 0:
        return np.multiply(a, b)
    if ta == tb:
        r = max(a.ndim, b.ndim)
        tan = _pad(a.tan, r) * _lead(b.val, r) + _lead(a.val, r) * _pad(b.tan, r)
        return Dual(a.val * b.val, tan, ta)
    if ta < tb:
        a, b = b, a
    r = max(a.ndim, ndim_of(b))
    return Dual(a.val * b, _pad(a.tan, r) * _lead(b, r), a.tag)


def reciprocal(x):
    if not isinstance(x, Dual):
        return np.reciprocal(np.asarray(x, dtype=float))
    v = 1.0 / x.val
    return _chain(x, v, -(v * v))


def div(a, b):
    if isinstance(b, Dual) and tag_of(b) >= tag_of(a):
        return mul(a, reciprocal(b))
    if not isinstance(a, Dual):
        return np.divide(a, b)
    r = max(a.ndim, ndim_of(b))
    return Dual(a.val / b, _pad(a.tan, r) / _lead(b, r), a.tag)


def matmul(a, b):
    ta, tb = tag_of(a), tag_of(b)
    if ta == tb == 0:
        return np.matmul(a, b)
    # 1-D operands follow numpy: promote to a row/column, then drop the axis
    if ndim_of(b) == 1:
        out = matmul(a, reshape(b, shape_of(b) + (1,)))
        return reshape(out, shape_of(out)[:-1])
    if ndim_of(a) == 1:
        out = matmul(reshape(a, (1,) + shape_of(a)), b)
        return reshape(out, shape_of(out)[:-2] + shape_of(out)[-1:])
    if ta == tb:
        r = max(a.ndim, b.ndim)
        tan = _pad(a.tan, r) @ _lead(b.val, r) + _lead(a.val, r) @ _pad(b.tan, r)
        return Dual(a.val @ b.val, tan, ta)
    if ta > tb:
        r = max(a.ndim, ndim_of(b))
        return Dual(a.val @ b, _pad(a.tan, r) @ _lead(b, r), ta)
    r = max(ndim_of(a), b.ndim)
    return Dual(a @ b.val, _lead(a, r) @ _pad(b.tan, r), tb)


def inv(a):
    """Matrix inverse over the last two axes."""
    if not isinstance(a, Dual):
        return np.linalg.inv(a)
    ai = inv(a.val)
    r = a.ndim
    return Dual(ai, -(_lead(ai, r) @ a.tan @ _lead(ai, r)), a.tag)


def _promote(x, tag: int, k: int) -> Dual:
    if isinstance(x, Dual) and x.tag == tag:
        return x
    return Dual(x, np.zeros((k,) + shape_of(x)), tag)


def stack(seq, axis: int = 0):
    seq = list(seq)
    duals = [x for x in seq if isinstance(x, Dual)]
    if not duals:
        return np.stack([np.asarray(x, dtype=float) for x in seq], axis=axis)
    top = max(duals, key=lambda d: d.tag)
    items = [_promote(x, top.tag, top.k) for x in seq]
    taxis = axis + 1 if axis >= 0 else axis
    return Dual(stack([x.val for x in items], axis), stack([x.tan for x in items], taxis), top.tag)


def concatenate(seq, axis: int = 0):
    seq = list(seq)
    duals = [x for x in seq if isinstance(x, Dual)]
    if not duals:
        return np.concatenate([np.asarray(x, dtype=float) for x in seq], axis=axis)
    top = max(duals, key=lambda d: d.tag)
    items = [_promote(x, top.tag, top.k) for x in seq]
    n = items[0].ndim
    axis = axis % n
    return Dual(concatenate([x.val for x in items], axis), concatenate([x.tan for x in items], axis + 1), top.tag)


def array(nested):
    """Build an array from a nested list of scalars that may be dual numbers."""
    if isinstance(nested, (list, tuple)):
        return stack([array(x) for x in nested], axis=0)
    if isinstance(nested, Dual):
        return nested
    return np.asarray(nested, dtype=float)


def einsum(subscripts: str, *operands):
    """``numpy.einsum`` over dual numbers (explicit ``->`` output required).

    The tangent of the top-level dual is the sum of the einsums with one dual
    operand replaced by its tangent stack; a fresh subscript letter carries the
    tangent axis.
    """
    top = max((tag_of(x) for x in operands), default=0)
    if top == 0:
        return np.einsum(subscripts, *operands, optimize=True)
    lhs, out = subscripts.split("->")
    terms = lhs.split(",")
    used = set(subscripts)
    z = next(c for c in "ZYXWVUTSRQPONMLKJIHGFEDCBAzyxwvutsrqponmlkjihgfedcba" if c not in used)
    vals = [x.val if tag_of(x) == top else x for x in operands]
    val = einsum(subscripts, *vals)
    tan = None
    k = None
    for i, x in enumerate(operands):
        if tag_of(x) != top:
            continue
        k = x.k
        ops = list(vals)
        ops[i] = x.tan
        sub = list(terms)
        sub[i] = z + sub[i]
        term = einsum(",".join(sub) + "->" + z + out, *ops)
        tan = term if tan is None else tan + term
    return Dual(val, tan, top)


def moveaxis(x, src: int, dst: int):
    n = ndim_of(x)
    order = [i for i in range(n) if i != src % n]
    order.insert(dst % n, src % n)
    return _transpose(x, tuple(order))


def seed_batch(x) -> Dual:
    """Seed all partials along the last axis of a (possibly batched, possibly dual) point."""
    shape = shape_of(x)
    n = shape[-1]
    dirs = np.eye(n).reshape((n,) + (1,) * (len(shape) - 1) + (n,))
    return Dual(x, np.broadcast_to(dirs, (n,) + shape), new_tag())


def partials(y, x: Dual):
    """Split ``y`` at the level of the seed ``x``.

    Returns ``(value, d)``; the derivative index of ``d`` sits right after the
    batch axes of ``x``, so for ``x`` of shape ``(B, n)`` and ``y`` of shape
    ``(B, *S)`` the result ``d`` has shape ``(B, n, *S)``.
    """
    v, t = split(y, x.tag, x.k)
    nb = len(x.shape) - 1
    return v, moveaxis(t, 0, nb)


# -- elementwise functions ----------------------------------------------

def sqrt(x):
    if not isinstance(x, Dual):
        return np.sqrt(x)
    v = sqrt(x.val)
    return _chain(x, v, 0.5 / v)


def exp(x):
    if not isinstance(x, Dual):
        return np.exp(x)
    v = exp(x.val)
    return _chain(x, v, v)


def log(x):
    if not isinstance(x, Dual):
        return np.log(x)
    return _chain(x, log(x.val), 1.0 / x.val)


def sin(x):
    if not isinstance(x, Dual):
        return np.sin(x)
    return _chain(x, sin(x.val), cos(x.val))


def cos(x):
    if not isinstance(x, Dual):
        return np.cos(x)
    return _chain(x, cos(x.val), -sin(x.val))


def sinh(x):
    if not isinstance(x, Dual):
        return np.sinh(x)
    return _chain(x, sinh(x.val), cosh(x.val))


def cosh(x):
    if not isinstance(x, Dual):
        return np.cosh(x)
    return _chain(x, cosh(x.val), sinh(x.val))


def tanh(x):
    if not isinstance(x, Dual):
        return np.tanh(x)
    v = tanh(x.val)
    return _chain(x, v, 1.0 - v * v)


def arctan(x):
    if not isinstance(x, Dual):
        return np.arctan(x)
    return _chain(x, arctan(x.val), 1.0 / (1.0 + x.val * x.val))


# -- seeding and extraction ---------------------------------------------

def value(x) -> np.ndarray:
    """Strip every level of dual numbers."""
    while isinstance(x, Dual):
        x = x.val
    return np.asarray(x, dtype=float)


def seed(x0, directions=None) -> Dual:
    """Seed a new differentiation level at ``x0`` (shape ``(n,)``).

    ``directions`` is a ``(k, n)`` array of tangent directions; the default is
    the identity, giving all ``n`` partial derivatives.
    """
    n = shape_of(x0)[0]
    if directions is None:
        directions = np.eye(n)
    return Dual(x0, np.asarray(directions, dtype=float), new_tag())


def split(y, tag: int, k: int):
    """Return ``(value, tangents)`` of ``y`` at differentiation level ``tag``.

    Outputs that never touched the seed have zero tangents.
    """
    if isinstance(y, Dual) and y.tag == tag:
        return y.val, y.tan
    if isinstance(y, Dual) and y.tag > tag:
        raise ValueError("an inner differentiation level leaked out of its function")
    return y, np.zeros((k,) + shape_of(y))


def jacobian(f, x0):
    """Value and all first partials of ``f`` at ``x0``: ``tan[i] = df/dx_i``."""
    x = seed(x0)
    return split(f(x), x.tag, x.k)


def hessian(f, x0):
    """Value, gradient and Hessian data of ``f`` at a plain point ``x0``.

    Returns ``(f, Df, D2f)`` with shapes ``S``, ``(n,)+S`` and ``(n, n)+S``.
    """
    x0 = np.asarray(x0, dtype=float)
    n = x0.shape[0]
    inner = seed(x0)
    outer = seed(inner)
    y = f(outer)
    v, t = split(y, outer.tag, n)
    f0, df = split(v, inner.tag, n)
    _, d2f = split(t, inner.tag, n)
    return value(f0), value(df), value(d2f)
