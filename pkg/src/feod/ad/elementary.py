"""Plain-real kernels behind the elementary operations.

Everything here works on Python floats and on numpy arrays of lanes.  The
AD and counting scalars call into these so that every number type shares
one definition of pow/sqrt/abs and their domain checks.
"""
from __future__ import annotations

import numpy as np


class DomainError(ValueError):
    """A partial function was applied outside its domain."""

    def __init__(self, op, detail):
        super().__init__(f"{op}: {detail}")
        self.op = op


class TapeOverflowError(RuntimeError):
    """The reverse-mode tape grew past its configured node cap."""


def _any(mask):
    return bool(np.any(mask))


def real_power(x, a):
    a = float(a)
    if not a.is_integer() and _any(np.less(x, 0.0)):
        raise DomainError("pow", f"negative base with non-integer exponent {a}")
    if a < 0.0 and _any(np.equal(x, 0.0)):
        raise DomainError("pow", f"zero base with negative exponent {a}")
    if isinstance(x, np.ndarray):
        return np.power(x, a)
    return float(x) ** a


def real_pow_slope(x, a):
    """a * x**(a-1), allowed to be infinite at x == 0 (see real_chain)."""
    a = float(a)
    if a == 0.0:
        return 0.0 * x
    with np.errstate(divide="ignore", invalid="ignore"):
        if isinstance(x, np.ndarray):
            return a * np.power(x, a - 1.0)
        if x == 0.0 and a < 1.0:
            return float("inf")
        return a * float(x) ** (a - 1.0)


def real_pow_nonsingular(x, a):
    """x**a, but 0 where x == 0 and a < 0."""
    a = float(a)
    if a >= 0.0:
        return real_power(x, a)
    if isinstance(x, np.ndarray):
        with np.errstate(divide="ignore"):
            return np.where(x > 0.0, np.power(np.where(x > 0.0, x, 1.0), a), 0.0)
    return float(x) ** a if x > 0.0 else 0.0


def real_sqrt(x):
    if _any(np.less(x, 0.0)):
        raise DomainError("sqrt", "negative argument")
    if isinstance(x, np.ndarray):
        return np.sqrt(x)
    return float(x) ** 0.5


def real_abs(x):
    return np.abs(x) if isinstance(x, np.ndarray) else abs(x)


def real_sign(x):
    # abs'(0) is taken as 0
    return np.sign(x) if isinstance(x, np.ndarray) else float(np.sign(x))


def real_chain(slope, d):
    """slope * d with the convention 0 * inf = 0 for a zero tangent."""
    if isinstance(slope, np.ndarray) or isinstance(d, np.ndarray):
        with np.errstate(invalid="ignore"):
            return np.where(np.equal(d, 0.0), 0.0, np.multiply(slope, d))
    return 0.0 if d == 0.0 else slope * d


def check_divisor(x):
    if _any(np.equal(x, 0.0)):
        raise DomainError("div", "division by zero")
