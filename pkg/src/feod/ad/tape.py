"""Minimal reverse-mode AD with an explicit, topologically ordered tape.

Each record holds at most two parent indices and the matching local
partials.  Passive operands (plain numbers) are not recorded.  There is no
expression simplification and no tape optimisation: every recorded edge is
visited on every reverse sweep.
"""
from __future__ import annotations

from .counting import chain, check_nonzero, constant_like, pow_slope, sign
from .dual import _inner_abs, _inner_pow_nonsingular, _inner_power, _inner_sqrt
from .elementary import TapeOverflowError


class Tape:
    """Evaluation tape.  One tape per thread; ``reset`` between evaluations."""

    def __init__(self, max_nodes=None):
        self.max_nodes = max_nodes
        self.parents = []
        self.partials = []
        # records whose partial may be infinite and need the 0*inf=0 rule
        self.guarded = []
        self.adjoints = []
        self.peak = 0

    def __len__(self):
        return len(self.parents)

    def reset(self):
        self.parents.clear()
        self.partials.clear()
        self.guarded.clear()
        self.adjoints = []

    def push(self, parents=(), partials=(), guarded=False):
        idx = len(self.parents)
        if self.max_nodes is not None and idx >= self.max_nodes:
            raise TapeOverflowError(f"tape exceeded {self.max_nodes} nodes")
        assert all(p < idx for p in parents)
        self.parents.append(parents)
        self.partials.append(partials)
        self.guarded.append(guarded)
        if idx + 1 > self.peak:
            self.peak = idx + 1
        return idx

    def variable(self, value):
        return TapeScalar(value, self.push(), self)

    def sweep(self, output, seed=None):
        """Back-propagate from ``output``; returns the adjoint of every node."""
        if seed is None:
            seed = constant_like(output.value, 1.0)
        n = output.index + 1
        adj = [0.0] * n
        adj[output.index] = seed
        parents, partials, guarded = self.parents, self.partials, self.guarded
        for i in range(n - 1, -1, -1):
            a = adj[i]
            if guarded[i]:
                for p, d in zip(parents[i], partials[i]):
                    adj[p] = adj[p] + chain(d, a)
            else:
                for p, d in zip(parents[i], partials[i]):
                    adj[p] = adj[p] + d * a
        self.adjoints = adj
        return adj


class TapeScalar:
    __slots__ = ("value", "index", "tape")
    __array_ufunc__ = None

    def __init__(self, value, index, tape):
        self.value = value
        self.index = index
        self.tape = tape

    def __repr__(self):
        return f"TapeScalar({self.value!r}, node={self.index})"

    def _new(self, value, parents, partials, guarded=False):
        return TapeScalar(value, self.tape.push(parents, partials, guarded), self.tape)

    def _check(self, other):
        if other.tape is not self.tape:
            raise ValueError("operands recorded on different tapes")

    def __add__(self, other):
        if isinstance(other, TapeScalar):
            self._check(other)
            return self._new(self.value + other.value, (self.index, other.index), (1.0, 1.0))
        return self._new(self.value + other, (self.index,), (1.0,))

    def __radd__(self, other):
        return self._new(other + self.value, (self.index,), (1.0,))

    def __sub__(self, other):
        if isinstance(other, TapeScalar):
            self._check(other)
            return self._new(self.value - other.value, (self.index, other.index), (1.0, -1.0))
        return self._new(self.value - other, (self.index,), (1.0,))

    def __rsub__(self, other):
        return self._new(other - self.value, (self.index,), (-1.0,))

    def __mul__(self, other):
        if isinstance(other, TapeScalar):
            self._check(other)
            return self._new(self.value * other.value, (self.index, other.index),
                             (other.value, self.value))
        return self._new(self.value * other, (self.index,), (other,))

    def __rmul__(self, other):
        return self._new(other * self.value, (self.index,), (other,))

    def __truediv__(self, other):
        if isinstance(other, TapeScalar):
            self._check(other)
            check_nonzero(other.value)
            q = self.value / other.value
            inv = 1.0 / other.value
            return self._new(q, (self.index, other.index), (inv, -q * inv))
        check_nonzero(other)
        return self._new(self.value / other, (self.index,), (1.0 / other,))

    def __rtruediv__(self, other):
        check_nonzero(self.value)
        q = other / self.value
        return self._new(q, (self.index,), (-q / self.value,))

    def __neg__(self):
        return self._new(-self.value, (self.index,), (-1.0,))

    def __pow__(self, a):
        return self._power(a)

    def __abs__(self):
        return self._abs()

    def _power(self, a):
        v = _inner_power(self.value, a)
        return self._new(v, (self.index,), (pow_slope(self.value, a),), guarded=True)

    def _pow_nonsingular(self, a):
        v = _inner_pow_nonsingular(self.value, a)
        return self._new(v, (self.index,), (pow_slope(self.value, a),), guarded=True)

    def _sqrt(self):
        v = _inner_sqrt(self.value)
        return self._new(v, (self.index,), (pow_slope(self.value, 0.5),), guarded=True)

    def _abs(self):
        return self._new(_inner_abs(self.value), (self.index,), (sign(self.value),))

