"""Scalar automatic differentiation engines.

Four interchangeable number types share one set of elementary operations
(+, -, *, /, negation, pow with a real exponent, sqrt, abs):

* ``DualScalar``     forward mode, one seeded direction
* ``DualVecScalar``  forward mode, a fixed number of directions at once
* ``TapeScalar``     reverse mode over an explicit ``Tape``
* ``CountingScalar`` plain reals that count executed operations

Kernels written against :func:`power`, :func:`sqrt` and :func:`fabs` (and the
arithmetic operators) run unchanged with any of them, with floats, or with
numpy arrays holding one lane per element or quadrature point.
"""
from __future__ import annotations

import numpy as np

from .counting import CountingScalar, OpCounter, constant_like, counting, unwrap
from .dual import DualScalar, DualVecScalar
from .elementary import (
    DomainError,
    TapeOverflowError,
    real_abs,
    real_pow_nonsingular,
    real_power,
    real_sqrt,
)
from .tape import Tape, TapeScalar

_AD_TYPES = (CountingScalar, DualScalar, DualVecScalar, TapeScalar)


def power(x, a):
    """x**a for a real exponent ``a``."""
    if isinstance(x, _AD_TYPES):
        return x._power(a)
    return real_power(x, a)


def pow_nonsingular(x, a):
    """x**a, returning 0 where x == 0 and a < 0.

    Used where the result is always multiplied by something vanishing at
    least as fast, so the zero is the continuous limit.
    """
    if isinstance(x, _AD_TYPES):
        return x._pow_nonsingular(a)
    return real_pow_nonsingular(x, a)


def sqrt(x):
    if isinstance(x, _AD_TYPES):
        return x._sqrt()
    return real_sqrt(x)


def fabs(x):
    if isinstance(x, _AD_TYPES):
        return x._abs()
    return real_abs(x)


def _as_list(y):
    return list(y) if isinstance(y, (list, tuple)) else [y]


def dual_eval(f, x, direction):
    """Value and directional derivative of scalar ``f`` at ``x`` along ``direction``."""
    x = list(x)
    direction = list(direction)
    if len(x) != len(direction) or not x:
        raise ValueError("x and direction must have equal, non-zero length")
    y = f([DualScalar(xi, di) for xi, di in zip(x, direction)])
    if isinstance(y, DualScalar):
        return y.value, y.deriv
    return y, 0.0


def dualvec_eval(f, x):
    """Values and dense Jacobian of ``f`` by vector forward mode (width = len(x))."""
    x = list(x)
    n = len(x)
    seeds = [[constant_like(xi, 1.0 if i == j else 0.0) for j in range(n)]
             for i, xi in enumerate(x)]
    ys = _as_list(f([DualVecScalar(xi, s) for xi, s in zip(x, seeds)]))
    values, jac = [], []
    for y in ys:
        if isinstance(y, DualVecScalar):
            values.append(y.value)
            jac.append(list(y.grad))
        else:
            values.append(y)
            jac.append([0.0] * n)
    return pack_nested(values), pack_nested(jac)


def reverse_eval(f, x, tape=None):
    """Values and dense Jacobian of ``f`` by reverse sweeps, one per output."""
    tape = Tape() if tape is None else tape
    if len(tape):
        raise ValueError("reverse_eval needs an empty tape; call tape.reset()")
    xs = [tape.variable(xi) for xi in x]
    ys = _as_list(f(xs))
    values, jac = [], []
    for y in ys:
        if isinstance(y, TapeScalar):
            adj = tape.sweep(y)
            values.append(y.value)
            jac.append([adj[xi.index] if xi.index < len(adj) else 0.0 for xi in xs])
        else:
            values.append(y)
            jac.append([0.0] * len(xs))
    return pack_nested(values), pack_nested(jac)


def counted_eval(f, x):
    """Evaluate ``f`` on counting scalars; returns (plain value, op count)."""
    with counting() as counter:
        y = f([CountingScalar(xi) for xi in x])
    if isinstance(y, (list, tuple)):
        return [unwrap(v) for v in y], counter.count
    return unwrap(y), counter.count


def pack_nested(nested):
    """Nested lists -> float ndarray when every entry is a plain real or lane array.

    Counting scalars are left as nested lists.
    """
    flat = []

    def walk(x):
        if isinstance(x, (list, tuple)):
            for v in x:
                walk(v)
        else:
            flat.append(x)

    walk(nested)
    if any(isinstance(v, _AD_TYPES) for v in flat):
        return nested
    shape = np.broadcast_shapes(*(np.shape(v) for v in flat)) if flat else ()
    return np.array(_broadcast(nested, shape), dtype=float)


def _broadcast(x, shape):
    if isinstance(x, (list, tuple)):
        return [_broadcast(v, shape) for v in x]
    return np.broadcast_to(x, shape)


__all__ = [
    "CountingScalar", "DomainError", "constant_like", "DualScalar", "DualVecScalar", "OpCounter",
    "Tape", "TapeOverflowError", "TapeScalar", "counted_eval", "counting",
    "dual_eval", "dualvec_eval", "fabs", "pack_nested", "pow_nonsingular", "power",
    "reverse_eval", "sqrt",
]
