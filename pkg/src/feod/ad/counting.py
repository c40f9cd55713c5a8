"""Operation-counting real scalar.

``CountingScalar`` behaves like a plain real (or a numpy array of lanes) and
bumps the active per-thread counters once per arithmetic operation or
elementary function call.  When it wraps a lane array, one tick stands for
one operation *per lane*, so batching over elements does not change the
per-element count.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager

from .elementary import (
    check_divisor,
    real_abs,
    real_chain,
    real_pow_nonsingular,
    real_pow_slope,
    real_power,
    real_sign,
    real_sqrt,
)

_local = threading.local()


class OpCounter:
    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def __repr__(self):
        return f"OpCounter(count={self.count})"


def _active():
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    return stack


@contextmanager
def counting():
    """Open a counting scope; nested scopes all see the inner operations."""
    counter = OpCounter()
    stack = _active()
    stack.append(counter)
    try:
        yield counter
    finally:
        stack.pop()


def _tick():
    for c in _active():
        c.count += 1


def _v(x):
    return x.value if isinstance(x, CountingScalar) else x


class CountingScalar:
    __slots__ = ("value",)
    # keep numpy from broadcasting over us elementwise
    __array_ufunc__ = None

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        return f"CountingScalar({self.value!r})"

    def __add__(self, other):
        _tick()
        return CountingScalar(self.value + _v(other))

    def __radd__(self, other):
        _tick()
        return CountingScalar(_v(other) + self.value)

    def __sub__(self, other):
        _tick()
        return CountingScalar(self.value - _v(other))

    def __rsub__(self, other):
        _tick()
        return CountingScalar(_v(other) - self.value)

    def __mul__(self, other):
        _tick()
        return CountingScalar(self.value * _v(other))

    def __rmul__(self, other):
        _tick()
        return CountingScalar(_v(other) * self.value)

    def __truediv__(self, other):
        check_divisor(_v(other))
        _tick()
        return CountingScalar(self.value / _v(other))

    def __rtruediv__(self, other):
        check_divisor(self.value)
        _tick()
        return CountingScalar(_v(other) / self.value)

    def __neg__(self):
        _tick()
        return CountingScalar(-self.value)

    def __pow__(self, a):
        return self._power(a)

    def __abs__(self):
        return self._abs()

    def _power(self, a):
        _tick()
        return CountingScalar(real_power(self.value, a))

    def _pow_nonsingular(self, a):
        _tick()
        return CountingScalar(real_pow_nonsingular(self.value, a))

    def _pow_slope(self, a):
        # one pow, one multiply
        _tick()
        _tick()
        return CountingScalar(real_pow_slope(self.value, a))

    def _sqrt(self):
        _tick()
        return CountingScalar(real_sqrt(self.value))

    def _abs(self):
        _tick()
        return CountingScalar(real_abs(self.value))

    def _sign(self):
        return real_sign(self.value)


def chain(slope, d):
    if isinstance(slope, CountingScalar) or isinstance(d, CountingScalar):
        _tick()
        return CountingScalar(real_chain(_v(slope), _v(d)))
    return real_chain(slope, d)


def pow_slope(x, a):
    if isinstance(x, CountingScalar):
        return x._pow_slope(a)
    return real_pow_slope(x, a)


def sign(x):
    if isinstance(x, CountingScalar):
        return x._sign()
    return real_sign(x)


def check_nonzero(x):
    check_divisor(_v(x))


def constant_like(x, c):
    """``c`` in the same real type as ``x`` (counted or plain)."""
    return CountingScalar(c) if isinstance(x, CountingScalar) else c


def unwrap(x):
    return _v(x)
