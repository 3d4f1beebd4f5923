"""Truncated power series in one variable with array-valued coefficients.

A :class:`Jet` stores ``c[k]`` as the coefficient of ``t**k`` for
``k = 0..N``.  Coefficients may carry trailing field axes, so one jet can hold
a series per sample point of a boundary grid.  NumPy ufuncs (``np.sin``,
``np.sqrt`` ...) dispatch to the recurrences below, which lets plain numeric
code be re-run on jets unchanged.
"""
from __future__ import annotations

import math

import numpy as np


class JetError(ArithmeticError):
    pass


def _as_coeffs(x, order):
    if isinstance(x, Jet):
        return x.c[: order + 1]
    x = np.asarray(x, dtype=float)
    c = np.zeros((order + 1,) + x.shape)
    c[0] = x
    return c


class Jet:
    __array_priority__ = 100

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=float)
        if c.ndim == 0:
            c = c[None]
        self.c = c

    @classmethod
    def constant(cls, value, order):
        return cls(_as_coeffs(value, order))

    @classmethod
    def variable(cls, order, center=0.0):
        """The identity series ``center + t``."""
        c = np.zeros(order + 1)
        c[0] = center
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @property
    def order(self):
        return self.c.shape[0] - 1

    @property
    def field_shape(self):
        return self.c.shape[1:]

    def __repr__(self):
        return f"Jet(order={self.order}, c={self.c!r})"

    def __len__(self):
        return self.field_shape[0]

    def __getitem__(self, idx):
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.c[(slice(None),) + idx])

    def _pair(self, other):
        n = self.order
        if isinstance(other, Jet):
            n = min(n, other.order)
        return self.c[: n + 1], _as_coeffs(other, n)

    def __add__(self, other):
        a, b = self._pair(other)
        return Jet(a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._pair(other)
        return Jet(a - b)

    def __rsub__(self, other):
        a, b = self._pair(other)
        return Jet(b - a)

    def __neg__(self):
        return Jet(-self.c)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c * np.asarray(other, dtype=float))
        a, b = self._pair(other)
        return Jet(_cauchy(a, b))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.c / np.asarray(other, dtype=float))
        a, b = self._pair(other)
        return Jet(_divide(a, b))

    def __rtruediv__(self, other):
        a, b = self._pair(other)
        return Jet(_divide(b, a))

    def __pow__(self, p):
        if isinstance(p, Jet):
            return np.exp(p * np.log(self))
        if float(p).is_integer() and p >= 0:
            out = Jet.constant(np.ones(self.field_shape), self.order)
            base, e = self, int(p)
            while e:
                if e & 1:
                    out = out * base
                base = base * base
                e >>= 1
            return out
        return Jet(_power(self.c, float(p)))

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs:
            return NotImplemented
        if ufunc in _BINARY:
            return _BINARY[ufunc](*inputs)
        if len(inputs) != 1 or ufunc not in _UNARY:
            return NotImplemented
        return Jet(_UNARY[ufunc](inputs[0].c))

    def ddr(self):
        """Term-wise derivative; the result has order N-1."""
        n = self.order
        if n == 0:
            return Jet(np.zeros_like(self.c))
        k = np.arange(1, n + 1).reshape((-1,) + (1,) * len(self.field_shape))
        return Jet(self.c[1:] * k)

    def integrate(self, c0=0.0):
        """Antiderivative with constant term ``c0``; order grows by one."""
        n = self.order
        k = np.arange(1, n + 2).reshape((-1,) + (1,) * len(self.field_shape))
        head = np.asarray(c0, dtype=float) * np.ones(self.field_shape)
        return Jet(np.concatenate([head[None], self.c / k]))

    def truncate(self, order):
        return Jet(self.c[: order + 1])

    def compose(self, inner):
        """``self(inner(t))`` for an inner series with zero constant term."""
        if not isinstance(inner, Jet):
            raise TypeError("inner must be a Jet")
        if np.any(inner.c[0] != 0.0):
            raise JetError("composition needs an inner series with zero constant term")
        n = min(self.order, inner.order)
        out = Jet.constant(self.c[n], n)
        base = inner.truncate(n)
        for k in range(n - 1, -1, -1):
            out = out * base + self.c[k]
        return out

    def __call__(self, t):
        """Evaluate the truncated polynomial at ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(np.broadcast_shapes(t.shape, self.field_shape))
        for ck in self.c[::-1]:
            out = out * t + ck
        return out

    def coefficient(self, k):
        return self.c[k] if k <= self.order else np.zeros(self.field_shape)


def _cauchy(a, b):
    n = a.shape[0]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(n):
        out[k] = np.sum(a[: k + 1] * b[k::-1], axis=0)
    return out


def _divide(a, b):
    if np.any(b[0] == 0.0):
        raise JetError("division by a series with vanishing constant term")
    n = a.shape[0]
    a, b = np.broadcast_arrays(a, b)
    c = np.zeros(a.shape)
    for k in range(n):
        c[k] = (a[k] - np.sum(c[:k] * b[k:0:-1], axis=0)) / b[0]
    return c


def _power(a, p):
    if np.any(a[0] <= 0.0):
        raise JetError("non-integer power needs a positive constant term")
    n = a.shape[0]
    w = np.zeros_like(a)
    w[0] = a[0] ** p
    for k in range(1, n):
        j = np.arange(1, k + 1).reshape((-1,) + (1,) * (a.ndim - 1))
        w[k] = np.sum((p * j - k + j) * a[1 : k + 1] * w[k - 1 :: -1][: k], axis=0) / (k * a[0])
    return w


def _exp(a):
    n = a.shape[0]
    e = np.zeros_like(a)
    e[0] = np.exp(a[0])
    for k in range(1, n):
        j = np.arange(1, k + 1).reshape((-1,) + (1,) * (a.ndim - 1))
        e[k] = np.sum(j * a[1 : k + 1] * e[k - 1 :: -1][:k], axis=0) / k
    return e


def _log(a):
    if np.any(a[0] <= 0.0):
        raise JetError("log needs a positive constant term")
    n = a.shape[0]
    out = np.zeros_like(a)
    out[0] = np.log(a[0])
    for k in range(1, n):
        j = np.arange(1, k).reshape((-1,) + (1,) * (a.ndim - 1))
        acc = np.sum(j * out[1:k] * a[k - 1 : 0 : -1], axis=0) if k > 1 else 0.0
        out[k] = (a[k] - acc / k) / a[0]
    return out


def _sincos(a):
    n = a.shape[0]
    s = np.zeros_like(a)
    c = np.zeros_like(a)
    s[0], c[0] = np.sin(a[0]), np.cos(a[0])
    for k in range(1, n):
        j = np.arange(1, k + 1).reshape((-1,) + (1,) * (a.ndim - 1))
        ja = j * a[1 : k + 1]
        s[k] = np.sum(ja * c[k - 1 :: -1][:k], axis=0) / k
        c[k] = -np.sum(ja * s[k - 1 :: -1][:k], axis=0) / k
    return s, c


def _arctan(a):
    x = Jet(a)
    q = x.ddr() / (1.0 + x * x)
    return q.integrate(np.arctan(a[0])).c


_UNARY = {
    np.sqrt: lambda a: _power(a, 0.5),
    np.exp: _exp,
    np.log: _log,
    np.sin: lambda a: _sincos(a)[0],
    np.cos: lambda a: _sincos(a)[1],
    np.tan: lambda a: _divide(*_sincos(a)),
    np.arctan: _arctan,
    np.negative: lambda a: -a,
    np.square: lambda a: _cauchy(a, a),
}

_BINARY = {
    np.add: lambda x, y: Jet.__add__(x, y) if isinstance(x, Jet) else Jet.__radd__(y, x),
    np.subtract: lambda x, y: Jet.__sub__(x, y) if isinstance(x, Jet) else Jet.__rsub__(y, x),
    np.multiply: lambda x, y: Jet.__mul__(x, y) if isinstance(x, Jet) else Jet.__rmul__(y, x),
    np.true_divide: lambda x, y: Jet.__truediv__(x, y) if isinstance(x, Jet) else Jet.__rtruediv__(y, x),
}


def jet_arithmetic(a, b, op):
    """Dispatch by name; ``b`` is ignored for the unary operations."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    if op == "compose":
        return a.compose(b)
    if op == "sqrt":
        return np.sqrt(a)
    if op == "ddr":
        return a.ddr()
    raise ValueError(f"unknown jet operation {op!r}")


def taylor_ode(f, t0, y0, order):
    """Taylor coefficients of the solution of ``y' = f(t, y)`` through ``(t0, y0)``.

    ``f`` must accept jets; each sweep fixes one more coefficient.
    """
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    c = np.zeros((order + 1,) + y0.shape)
    c[0] = y0
    t = Jet.variable(order, t0)
    for k in range(order):
        rhs = f(t, Jet(c))
        rc = rhs.c if isinstance(rhs, Jet) else _stack_jets(rhs, order)
        c[k + 1] = rc[k] / (k + 1)
    return c


def _stack_jets(items, order):
    return np.stack([_as_coeffs(it, order) for it in items], axis=1)


def taylor_derivatives(coeffs):
    """Convert Taylor coefficients to derivatives at the expansion point."""
    k = np.array([math.factorial(i) for i in range(coeffs.shape[0])], dtype=float)
    return coeffs * k.reshape((-1,) + (1,) * (coeffs.ndim - 1))
