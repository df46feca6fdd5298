"""Vectorized forward-mode differentiation with truncated Taylor jets.

A :class:`Jet` carries a value array together with its gradient (and
optionally its Hessian) with respect to ``n`` seed variables.  Values have an
arbitrary batch shape ``S``; gradients are stored as ``S + (n,)`` and Hessians
as ``S + (n, n)``.  The transcriber evaluates one small local function per
collocation interval, batched over all intervals at once, so ``S = (K,)`` and
``n`` is the number of local decision variables of an interval.

Only the operations needed by the crane model are supported: the four
arithmetic operators, integer powers, ``np.sin`` and ``np.cos``.
"""

from __future__ import annotations

import numpy as np


class Jet:
    __slots__ = ("val", "grad", "hess")

    def __init__(self, val, grad, hess=None):
        self.val = np.asarray(val, dtype=float)
        self.grad = grad
        self.hess = hess

    @classmethod
    def seed(cls, values, second_order=False):
        """Independent variables from the trailing axis of ``values``.

        ``values`` has shape ``S + (n,)``; the result is a list of ``n`` jets,
        the ``i``-th having unit gradient along seed direction ``i``.
        """
        values = np.asarray(values, dtype=float)
        n = values.shape[-1]
        batch = values.shape[:-1]
        eye = np.eye(n)
        out = []
        for i in range(n):
            grad = np.broadcast_to(eye[i], batch + (n,))
            hess = np.zeros(batch + (n, n)) if second_order else None
            out.append(cls(values[..., i], grad, hess))
        return out

    @property
    def n(self):
        return self.grad.shape[-1]

    # -- helpers -----------------------------------------------------------
    def _chain(self, f0, f1, f2):
        """Compose with a scalar function having derivatives f1, f2 at val."""
        grad = f1[..., None] * self.grad
        hess = None
        if self.hess is not None:
            hess = f1[..., None, None] * self.hess + f2[..., None, None] * _outer(
                self.grad, self.grad
            )
        return Jet(f0, grad, hess)

    def _scaled(self, c):
        c = np.asarray(c, dtype=float)
        hess = None if self.hess is None else c[..., None, None] * self.hess
        return Jet(self.val * c, c[..., None] * self.grad, hess)

    # -- arithmetic ----------------------------------------------------------
    def __neg__(self):
        return Jet(-self.val, -self.grad, None if self.hess is None else -self.hess)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, Jet):
            hess = _add_hess(self.hess, other.hess)
            return Jet(self.val + other.val, self.grad + other.grad, hess)
        return Jet(self.val + other, self.grad, self.hess)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self, other
            grad = b.val[..., None] * a.grad + a.val[..., None] * b.grad
            hess = None
            if a.hess is not None or b.hess is not None:
                cross = _outer(a.grad, b.grad)
                hess = cross + np.swapaxes(cross, -1, -2)
                if a.hess is not None:
                    hess = hess + b.val[..., None, None] * a.hess
                if b.hess is not None:
                    hess = hess + a.val[..., None, None] * b.hess
            return Jet(a.val * b.val, grad, hess)
        return self._scaled(other)

    __rmul__ = __mul__

    def reciprocal(self):
        v = self.val
        inv = 1.0 / v
        return self._chain(inv, -(inv**2), 2.0 * inv**3)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self._scaled(1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        if not isinstance(k, (int, np.integer)):
            raise TypeError("Jet only supports integer powers")
        if k == 0:
            return Jet(np.ones_like(self.val), np.zeros_like(self.grad))
        v = self.val
        return self._chain(v**k, k * v ** (k - 1), k * (k - 1) * v ** (k - 2))

    def sin(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = np.sin(self.val), np.cos(self.val)
        return self._chain(c, -s, -c)

    # numpy interop: np.sin(jet), ndarray * jet, ...
    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        if ufunc is np.sin:
            return inputs[0].sin()
        if ufunc is np.cos:
            return inputs[0].cos()
        if ufunc is np.negative:
            return -inputs[0]
        if ufunc is np.square:
            return inputs[0] ** 2
        binary = {
            np.add: lambda a, b: a + b,
            np.subtract: lambda a, b: a - b,
            np.multiply: lambda a, b: a * b,
            np.true_divide: lambda a, b: a / b,
        }
        if ufunc in binary:
            a, b = inputs
            if not isinstance(a, Jet):
                # reflected operation on the jet
                return {
                    np.add: lambda: b + a,
                    np.subtract: lambda: (-b) + a,
                    np.multiply: lambda: b * a,
                    np.true_divide: lambda: b.__rtruediv__(a),
                }[ufunc]()
            return binary[ufunc](a, b)
        return NotImplemented

    def __repr__(self):
        return f"Jet(val={self.val!r}, n={self.n})"


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _add_hess(h1, h2):
    if h1 is None:
        return h2
    if h2 is None:
        return h1
    return h1 + h2


def value(x):
    """Plain value of a jet or array."""
    return x.val if isinstance(x, Jet) else np.asarray(x, dtype=float)
