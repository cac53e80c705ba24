"""Second-order jets of scalar and tensor fields, with their arithmetic.

A :class:`Jet2` carries a scalar field together with its first and second
coordinate derivatives at a batch of points. Arithmetic on jets applies the
product and chain rules, so a field written as an expression in coordinate
jets yields exact derivatives without symbolic algebra. :class:`TensorJet`
is the analogue for symmetric 2-tensors such as the metric.

Array layout (``B`` is the batch shape, usually ``(N,)``)::

    Jet2.value  B         Jet2.grad  B+(n,)     Jet2.hess  B+(n, n)
    TensorJet.value B+(n,n)  d1[..., i, j, k] = d_k T_ij
    d2[..., i, j, k, l] = d_k d_l T_ij
"""

from dataclasses import dataclass

import numpy as np


def _sym_last2(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


@dataclass(frozen=True)
class Jet2:
    """Scalar 2-jet. The Hessian is symmetrised on construction."""

    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "value", np.asarray(self.value, dtype=float))
        object.__setattr__(self, "grad", np.asarray(self.grad, dtype=float))
        object.__setattr__(self, "hess", _sym_last2(np.asarray(self.hess, dtype=float)))

    @property
    def n(self):
        return self.grad.shape[-1]

    @classmethod
    def constant(cls, c, shape, n):
        return cls(np.full(shape, float(c)), np.zeros(tuple(shape) + (n,)),
                   np.zeros(tuple(shape) + (n, n)))

    def _lift(self, other):
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(other, self.value.shape, self.n)

    def __add__(self, other):
        if not isinstance(other, Jet2):
            return Jet2(self.value + other, self.grad, self.hess)
        return Jet2(self.value + other.value, self.grad + other.grad,
                    self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet2):
            c = np.asarray(other, dtype=float)
            return Jet2(self.value * c, self.grad * c[..., None],
                        self.hess * c[..., None, None])
        a, b = self, other
        outer = a.grad[..., :, None] * b.grad[..., None, :]
        return Jet2(
            a.value * b.value,
            a.grad * b.value[..., None] + a.value[..., None] * b.grad,
            a.hess * b.value[..., None, None] + a.value[..., None, None] * b.hess
            + outer + np.swapaxes(outer, -1, -2),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet2):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        p = float(p)
        v = self.value
        return self.apply(v ** p, p * v ** (p - 1), p * (p - 1) * v ** (p - 2))

    def apply(self, f0, f1, f2):
        """Chain rule for ``F(self)`` given ``F``, ``F'``, ``F''`` at the value."""
        f1 = np.asarray(f1, dtype=float)
        f2 = np.asarray(f2, dtype=float)
        g = self.grad
        return Jet2(
            f0,
            f1[..., None] * g,
            f2[..., None, None] * g[..., :, None] * g[..., None, :]
            + f1[..., None, None] * self.hess,
        )

    def reciprocal(self):
        v = self.value
        return self.apply(1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3)

    def exp(self):
        e = np.exp(self.value)
        return self.apply(e, e, e)

    def log(self):
        v = self.value
        return self.apply(np.log(v), 1.0 / v, -1.0 / v ** 2)

    def sqrt(self):
        return self ** 0.5

    def where(self, mask, other):
        """Pointwise select: ``self`` where ``mask`` else ``other``."""
        other = self._lift(other)
        m = np.asarray(mask, dtype=bool)
        return Jet2(np.where(m, self.value, other.value),
                    np.where(m[..., None], self.grad, other.grad),
                    np.where(m[..., None, None], self.hess, other.hess))


@dataclass(frozen=True)
class TensorJet:
    """Symmetric 2-tensor field with first and second coordinate derivatives."""

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.value, dtype=float)
        d1 = np.asarray(self.d1, dtype=float)
        d2 = np.asarray(self.d2, dtype=float)
        v = _sym_last2(v)
        d1 = 0.5 * (d1 + np.swapaxes(d1, -2, -3))
        d2 = 0.5 * (d2 + np.swapaxes(d2, -3, -4))
        d2 = 0.5 * (d2 + np.swapaxes(d2, -1, -2))
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "d1", d1)
        object.__setattr__(self, "d2", d2)

    @property
    def n(self):
        return self.value.shape[-1]

    @classmethod
    def identity(cls, shape, n):
        shape = tuple(shape)
        return cls(np.broadcast_to(np.eye(n), shape + (n, n)).copy(),
                   np.zeros(shape + (n,) * 3), np.zeros(shape + (n,) * 4))

    @classmethod
    def zeros(cls, shape, n):
        shape = tuple(shape)
        return cls(np.zeros(shape + (n, n)), np.zeros(shape + (n,) * 3),
                   np.zeros(shape + (n,) * 4))

    @classmethod
    def from_components(cls, comps):
        """Assemble from an n x n nested list of :class:`Jet2` (upper part read)."""
        n = len(comps)
        rows = [[comps[min(i, j)][max(i, j)] for j in range(n)] for i in range(n)]
        value = np.stack([np.stack([c.value for c in r], -1) for r in rows], -2)
        d1 = np.stack([np.stack([c.grad for c in r], -2) for r in rows], -3)
        d2 = np.stack([np.stack([c.hess for c in r], -3) for r in rows], -4)
        return cls(value, d1, d2)

    def component(self, i, j):
        return Jet2(self.value[..., i, j], self.d1[..., i, j, :],
                    self.d2[..., i, j, :, :])

    def __add__(self, other):
        return TensorJet(self.value + other.value, self.d1 + other.d1,
                         self.d2 + other.d2)

    def __sub__(self, other):
        return TensorJet(self.value - other.value, self.d1 - other.d1,
                         self.d2 - other.d2)

    def __neg__(self):
        return TensorJet(-self.value, -self.d1, -self.d2)

    def scale(self, s):
        """Multiply by a scalar jet (product rule) or a plain number."""
        if not isinstance(s, Jet2):
            c = float(s)
            return TensorJet(c * self.value, c * self.d1, c * self.d2)
        v, g, H = s.value, s.grad, s.hess
        T, T1, T2 = self.value, self.d1, self.d2
        d1 = v[..., None, None, None] * T1 + T[..., None] * g[..., None, None, :]
        cross = T1[..., :, None] * g[..., None, None, None, :]
        d2 = (v[..., None, None, None, None] * T2
              + T[..., None, None] * H[..., None, None, :, :]
              + cross + np.swapaxes(cross, -1, -2))
        return TensorJet(v[..., None, None] * T, d1, d2)

    def __mul__(self, s):
        return self.scale(s)

    __rmul__ = __mul__

    def trace_flat(self):
        """Euclidean trace as a scalar jet."""
        return Jet2(np.einsum("...ii->...", self.value),
                    np.einsum("...iik->...k", self.d1),
                    np.einsum("...iikl->...kl", self.d2))


def conformal_tensor(omega):
    """The tensor jet of ``omega * delta`` for a scalar jet ``omega``."""
    n = omega.n
    eye = np.eye(n)
    return TensorJet(omega.value[..., None, None] * eye,
                     eye[:, :, None] * omega.grad[..., None, None, :],
                     eye[:, :, None, None] * omega.hess[..., None, None, :, :])


def coordinates(x):
    """Coordinate jets ``x^1 .. x^n`` at points ``x`` of shape ``(..., n)``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    shape = x.shape[:-1]
    out = []
    for i in range(n):
        g = np.zeros(shape + (n,))
        g[..., i] = 1.0
        out.append(Jet2(x[..., i], g, np.zeros(shape + (n, n))))
    return out


def squared_distance(x, center=None):
    """Jet of ``|x - c|^2`` (a polynomial, smooth everywhere)."""
    x = np.asarray(x, dtype=float)
    c = np.zeros(x.shape[-1]) if center is None else np.asarray(center, dtype=float)
    d = x - c
    n = x.shape[-1]
    return Jet2(np.sum(d * d, -1), 2.0 * d,
                np.broadcast_to(2.0 * np.eye(n), x.shape[:-1] + (n, n)))


def distance(x, center=None):
    """Jet of ``|x - c|``; singular at the centre."""
    return squared_distance(x, center).sqrt()


# -- finite differences ------------------------------------------------------

def default_step(x):
    """Per-point FD step ``max(1e-4, 1e-5 r)``."""
    r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    return np.maximum(1e-4, 1e-5 * r)


def fd_jet(func, x, step=None):
    """Finite-difference 2-jet of ``func``.

    ``func`` maps points of shape ``(N, n)`` to values of shape ``(N,) + S``
    (``S`` empty for scalars, ``(n, n)`` for tensors). First derivatives use
    the 4th-order central stencil, second derivatives the 2nd-order one.
    Returns ``(value, d1, d2)`` with derivative axes appended after ``S``.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    N, n = x.shape
    h = default_step(x) if step is None else np.broadcast_to(
        np.asarray(step, dtype=float), (N,))
    f0 = np.asarray(func(x), dtype=float)
    extra = f0.ndim - 1
    hb = h.reshape((N,) + (1,) * extra)
    eye = np.eye(n)

    def at(offsets):
        return np.asarray(func(x + offsets * h[:, None]), dtype=float)

    d1 = np.zeros(f0.shape + (n,))
    d2 = np.zeros(f0.shape + (n, n))
    plus = [at(eye[k]) for k in range(n)]
    minus = [at(-eye[k]) for k in range(n)]
    for k in range(n):
        p2, m2 = at(2 * eye[k]), at(-2 * eye[k])
        d1[..., k] = (-p2 + 8 * plus[k] - 8 * minus[k] + m2) / (12 * hb)
        d2[..., k, k] = (plus[k] - 2 * f0 + minus[k]) / hb ** 2
        for l in range(k + 1, n):
            pp = at(eye[k] + eye[l])
            pm = at(eye[k] - eye[l])
            mp = at(-eye[k] + eye[l])
            mm = at(-eye[k] - eye[l])
            d2[..., k, l] = d2[..., l, k] = (pp - pm - mp + mm) / (4 * hb ** 2)
    return f0, d1, d2
