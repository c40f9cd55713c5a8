"""Forward-mode AD: a single-direction dual number and a fixed-width vector dual.

Plain numbers mixed into an expression are promoted to duals with a zero
derivative before the arithmetic, so a promoted operand costs as much as an
active one.  The value and derivative slots may hold floats, lane arrays or
``CountingScalar``.
"""
from __future__ import annotations

from .counting import CountingScalar, chain, check_nonzero, pow_slope, sign
from .elementary import real_abs, real_pow_nonsingular, real_power, real_sqrt


def _inner_power(x, a):
    return x._power(a) if isinstance(x, CountingScalar) else real_power(x, a)


def _inner_pow_nonsingular(x, a):
    if isinstance(x, CountingScalar):
        return x._pow_nonsingular(a)
    return real_pow_nonsingular(x, a)


def _inner_sqrt(x):
    return x._sqrt() if isinstance(x, CountingScalar) else real_sqrt(x)


def _inner_abs(x):
    return x._abs() if isinstance(x, CountingScalar) else real_abs(x)


class DualScalar:
    __slots__ = ("value", "deriv")
    __array_ufunc__ = None

    def __init__(self, value, deriv=0.0):
        self.value = value
        self.deriv = deriv

    def __repr__(self):
        return f"DualScalar({self.value!r}, {self.deriv!r})"

    @staticmethod
    def _lift(x):
        return x if isinstance(x, DualScalar) else DualScalar(x, 0.0)

    def __add__(self, other):
        o = self._lift(other)
        return DualScalar(self.value + o.value, self.deriv + o.deriv)

    def __radd__(self, other):
        o = self._lift(other)
        return DualScalar(o.value + self.value, o.deriv + self.deriv)

    def __sub__(self, other):
        o = self._lift(other)
        return DualScalar(self.value - o.value, self.deriv - o.deriv)

    def __rsub__(self, other):
        o = self._lift(other)
        return DualScalar(o.value - self.value, o.deriv - self.deriv)

    def __mul__(self, other):
        o = self._lift(other)
        return DualScalar(self.value * o.value,
                          self.deriv * o.value + self.value * o.deriv)

    def __rmul__(self, other):
        o = self._lift(other)
        return DualScalar(o.value * self.value,
                          o.deriv * self.value + o.value * self.deriv)

    def _div(self, num, den):
        check_nonzero(den.value)
        q = num.value / den.value
        return DualScalar(q, (num.deriv - q * den.deriv) / den.value)

    def __truediv__(self, other):
        return self._div(self, self._lift(other))

    def __rtruediv__(self, other):
        return self._div(self._lift(other), self)

    def __neg__(self):
        return DualScalar(-self.value, -self.deriv)

    def __pow__(self, a):
        return self._power(a)

    def __abs__(self):
        return self._abs()

    def _power(self, a):
        v = _inner_power(self.value, a)
        return DualScalar(v, chain(pow_slope(self.value, a), self.deriv))

    def _pow_nonsingular(self, a):
        v = _inner_pow_nonsingular(self.value, a)
        return DualScalar(v, chain(pow_slope(self.value, a), self.deriv))

    def _sqrt(self):
        v = _inner_sqrt(self.value)
        return DualScalar(v, chain(pow_slope(self.value, 0.5), self.deriv))

    def _abs(self):
        return DualScalar(_inner_abs(self.value), sign(self.value) * self.deriv)


class DualVecScalar:
    """Dual number carrying ``width`` derivative directions at once."""

    __slots__ = ("value", "grad")
    __array_ufunc__ = None

    def __init__(self, value, grad):
        self.value = value
        self.grad = tuple(grad)

    @property
    def width(self):
        return len(self.grad)

    def __repr__(self):
        return f"DualVecScalar({self.value!r}, {list(self.grad)!r})"

    def _lift(self, x):
        if isinstance(x, DualVecScalar):
            if x.width != self.width:
                raise ValueError(f"gradient width mismatch: {self.width} vs {x.width}")
            return x
        return DualVecScalar(x, (0.0,) * self.width)

    def __add__(self, other):
        o = self._lift(other)
        return DualVecScalar(self.value + o.value,
                             [a + b for a, b in zip(self.grad, o.grad)])

    def __radd__(self, other):
        o = self._lift(other)
        return DualVecScalar(o.value + self.value,
                             [a + b for a, b in zip(o.grad, self.grad)])

    def __sub__(self, other):
        o = self._lift(other)
        return DualVecScalar(self.value - o.value,
                             [a - b for a, b in zip(self.grad, o.grad)])

    def __rsub__(self, other):
        o = self._lift(other)
        return DualVecScalar(o.value - self.value,
                             [a - b for a, b in zip(o.grad, self.grad)])

    @staticmethod
    def _mul(x, y):
        xv, yv = x.value, y.value
        return DualVecScalar(xv * yv,
                             [a * yv + xv * b for a, b in zip(x.grad, y.grad)])

    def __mul__(self, other):
        return self._mul(self, self._lift(other))

    def __rmul__(self, other):
        return self._mul(self._lift(other), self)

    @staticmethod
    def _div(num, den):
        check_nonzero(den.value)
        dv = den.value
        q = num.value / dv
        return DualVecScalar(q, [(a - q * b) / dv for a, b in zip(num.grad, den.grad)])

    def __truediv__(self, other):
        return self._div(self, self._lift(other))

    def __rtruediv__(self, other):
        return self._div(self._lift(other), self)

    def __neg__(self):
        return DualVecScalar(-self.value, [-a for a in self.grad])

    def __pow__(self, a):
        return self._power(a)

    def __abs__(self):
        return self._abs()

    def _power(self, a):
        v = _inner_power(self.value, a)
        s = pow_slope(self.value, a)
        return DualVecScalar(v, [chain(s, g) for g in self.grad])

    def _pow_nonsingular(self, a):
        v = _inner_pow_nonsingular(self.value, a)
        s = pow_slope(self.value, a)
        return DualVecScalar(v, [chain(s, g) for g in self.grad])

    def _sqrt(self):
        v = _inner_sqrt(self.value)
        s = pow_slope(self.value, 0.5)
        return DualVecScalar(v, [chain(s, g) for g in self.grad])

    def _abs(self):
        sg = sign(self.value)
        return DualVecScalar(_inner_abs(self.value), [sg * g for g in self.grad])
