"""Truncated power-series (jet) arithmetic.

A :class:`Jet` holds the coefficients ``c[0..order]`` of a function expanded
about some base point; arithmetic propagates them exactly through products,
quotients, log, exp, integer powers, and composition. Coefficients are stored
with the order index on the first axis, so a jet can carry a whole batch of
expansions at once (trailing axes broadcast element-wise), which is how the
contour quadrature evaluates one jet per integration node in a single sweep.

Orders are capped at :data:`MAX_ORDER`; beyond that the O(order^2) recurrences
and float cancellation stop being trustworthy.
"""

import math

import numpy as np

MAX_ORDER = 64


class Jet:
    """Coefficients of a truncated power series, first axis = order."""

    __slots__ = ("coef",)

    def __init__(self, coef):
        coef = np.asarray(coef, dtype=complex)
        if coef.ndim == 0:
            coef = coef[None]
        if coef.shape[0] - 1 > MAX_ORDER:
            raise ValueError(f"jet order {coef.shape[0] - 1} exceeds cap {MAX_ORDER}")
        self.coef = coef

    # -- constructors ------------------------------------------------------

    @classmethod
    def constant(cls, value, order):
        value = np.asarray(value, dtype=complex)
        coef = np.zeros((order + 1,) + value.shape, dtype=complex)
        coef[0] = value
        return cls(coef)

    @classmethod
    def variable(cls, value, order):
        """The identity function about ``value``: value + delta."""
        j = cls.constant(value, order)
        if order >= 1:
            j.coef[1] = 1.0
        return j

    # -- views -------------------------------------------------------------

    @property
    def order(self):
        return self.coef.shape[0] - 1

    @property
    def value(self):
        return self.coef[0]

    def derivatives(self):
        """Derivative values f^(k) = k! * c[k] for k = 0..order."""
        fact = np.array([math.factorial(k) for k in range(self.order + 1)])
        return self.coef * fact.reshape((-1,) + (1,) * (self.coef.ndim - 1))

    def __repr__(self):
        return f"Jet({self.coef!r})"

    # -- arithmetic ----------------------------------------------------------

    def _wrap(self, other):
        if isinstance(other, Jet):
            if other.order != self.order:
                raise ValueError("jet orders must match")
            return other
        return Jet.constant(other, self.order)

    def __add__(self, other):
        other = self._wrap(other)
        return Jet(self.coef + other.coef)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coef)

    def __sub__(self, other):
        other = self._wrap(other)
        return Jet(self.coef - other.coef)

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        other = self._wrap(other)
        n = self.order
        a, b = self.coef, other.coef
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        out = np.zeros((n + 1,) + shape, dtype=complex)
        for k in range(n + 1):
            acc = a[0] * b[k]
            for j in range(1, k + 1):
                acc = acc + a[j] * b[k - j]
            out[k] = acc
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._wrap(other)
        n = self.order
        a, b = self.coef, other.coef
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        out = np.zeros((n + 1,) + shape, dtype=complex)
        out[0] = a[0] / b[0]
        for k in range(1, n + 1):
            acc = a[k] + np.zeros(shape, dtype=complex)
            for j in range(1, k + 1):
                acc = acc - b[j] * out[k - j]
            out[k] = acc / b[0]
        return Jet(out)

    def __rtruediv__(self, other):
        return self._wrap(other) / self

    def pow_int(self, m):
        """Integer power by repeated squaring."""
        if m < 0:
            return Jet.constant(1.0, self.order) / self.pow_int(-m)
        result = Jet.constant(np.ones(self.coef.shape[1:]), self.order)
        base = self
        while m:
            if m & 1:
                result = result * base
            m >>= 1
            if m:
                base = base * base
        return result

    def log(self):
        """Principal-branch log jet; the caller is responsible for checking
        that the order-0 values stay off the branch cut."""
        n = self.order
        u = self.coef
        out = np.zeros_like(u)
        out[0] = np.log(u[0])
        for k in range(1, n + 1):
            acc = k * u[k].astype(complex)
            for j in range(1, k):
                acc = acc - j * out[j] * u[k - j]
            out[k] = acc / (k * u[0])
        return Jet(out)

    def exp(self):
        n = self.order
        u = self.coef
        out = np.zeros_like(u)
        out[0] = np.exp(u[0])
        for k in range(1, n + 1):
            acc = np.zeros_like(u[0])
            for j in range(1, k + 1):
                acc = acc + j * u[j] * out[k - j]
            out[k] = acc / k
        return Jet(out)

    def compose(self, inner):
        """self(inner(delta)) where inner has zero constant term."""
        inner = self._wrap(inner)
        if np.any(np.abs(inner.coef[0]) > 0):
            raise ValueError("composition needs an inner jet with zero constant term")
        n = self.order
        result = Jet.constant(self.coef[n], n)
        for k in range(n - 1, -1, -1):
            result = result * inner + Jet.constant(self.coef[k], n)
        return result

    def shift_down(self, m):
        """Drop the leading m coefficients (divide by delta^m); they must vanish.

        Used for removable-singularity quotients: if f and g both vanish to
        order m at the base, f/g = shift_down(f,m)/shift_down(g,m) at reduced
        order."""
        if m == 0:
            return self
        lead = np.max(np.abs(self.coef[:m]))
        scale = np.max(np.abs(self.coef)) or 1.0
        if lead > 1e-9 * scale:
            raise ValueError(f"leading coefficients not negligible: {lead:g}")
        return Jet(self.coef[m:].copy())

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot extend a jet")
        return Jet(self.coef[: order + 1].copy())
