"""Signed log-domain arithmetic.

Importance weights on a few hundred spins live around ``e^{±200}`` and the
roulette sums built from them are signed, so every quantity is carried as a
``(sign, log|value|)`` pair.  The scalar kernels at the bottom of the module
are numba-compiled twins of :func:`slv_add` used inside the estimator loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

__all__ = [
    "SignedLogValue",
    "ZERO",
    "slv_add",
    "slv_sub",
    "slv_scale",
    "log_mean",
    "log1mexp",
]

_LN2 = math.log(2.0)


def log1mexp(d: float) -> float:
    """Return ``log(1 - exp(d))`` for ``d <= 0`` without cancellation."""
    if d > -_LN2:
        return math.log(-math.expm1(d))
    return math.log1p(-math.exp(d))


@dataclass(frozen=True, slots=True)
class SignedLogValue:
    """A real number stored as a sign in {-1, 0, +1} and a natural-log magnitude.

    ``sign == 0`` is exact zero; ``log_mag`` is then meaningless and ignored
    by equality.
    """

    sign: int
    log_mag: float = -math.inf

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if self.sign != 0 and not math.isfinite(self.log_mag):
            raise ValueError(f"nonzero value needs a finite log magnitude, got {self.log_mag!r}")

    @classmethod
    def from_float(cls, v: float) -> "SignedLogValue":
        if v == 0.0:
            return ZERO
        if not math.isfinite(v):
            raise ValueError(f"cannot encode non-finite value {v!r}")
        return cls(1 if v > 0 else -1, math.log(abs(v)))

    @classmethod
    def from_log(cls, log_mag: float, sign: int = 1) -> "SignedLogValue":
        if sign == 0:
            return ZERO
        return cls(sign, float(log_mag))

    def to_float(self) -> float:
        """Decode to a float (may overflow to inf or underflow to 0)."""
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_mag)

    def __eq__(self, other):
        if not isinstance(other, SignedLogValue):
            return NotImplemented
        if self.sign == 0 or other.sign == 0:
            return self.sign == other.sign
        return self.sign == other.sign and self.log_mag == other.log_mag

    def __hash__(self):
        return hash((0, 0.0)) if self.sign == 0 else hash((self.sign, self.log_mag))

    def __neg__(self) -> "SignedLogValue":
        return ZERO if self.sign == 0 else SignedLogValue(-self.sign, self.log_mag)

    def __add__(self, other: "SignedLogValue") -> "SignedLogValue":
        return slv_add(self, other)

    def __sub__(self, other: "SignedLogValue") -> "SignedLogValue":
        return slv_add(self, -other)

    def __repr__(self):
        if self.sign == 0:
            return "SignedLogValue(0)"
        return f"SignedLogValue({'+' if self.sign > 0 else '-'}, {self.log_mag!r})"


ZERO = SignedLogValue(0)


def slv_add(a: SignedLogValue, b: SignedLogValue) -> SignedLogValue:
    """Sum of two signed log-domain values.

    Opposite-sign operands go through ``log1mexp`` so that differences of
    nearly equal magnitudes keep their sign down to the last few ulps.
    """
    s, l = _add(a.sign, a.log_mag, b.sign, b.log_mag)
    return SignedLogValue(int(s), l) if s != 0 else ZERO


def slv_sub(a: SignedLogValue, b: SignedLogValue) -> SignedLogValue:
    return slv_add(a, -b)


def slv_scale(a: SignedLogValue, c: float) -> SignedLogValue:
    """Multiply the magnitude of ``a`` by ``e**c``."""
    if not math.isfinite(c):
        raise ValueError(f"log scale factor must be finite, got {c!r}")
    if a.sign == 0:
        return ZERO
    return SignedLogValue(a.sign, a.log_mag + c)


def log_mean(values: Sequence[float] | np.ndarray, axis: int | None = None):
    """``log(mean(exp(values)))`` with max-shift stabilisation.

    The mean is formed as ``sum(exp(v - max)) / m`` so that ``m`` identical
    inputs return that input bit-exactly.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0 or (axis is not None and v.shape[axis] == 0):
        raise ValueError("log_mean of an empty sequence")
    if axis is None:
        v = v.ravel()
        axis = 0
    m = v.shape[axis]
    mx = np.max(v, axis=axis, keepdims=True)
    if not np.all(np.isfinite(mx)):
        raise ValueError("log_mean needs finite inputs")
    out = np.squeeze(mx, axis=axis) + np.log(np.sum(np.exp(v - mx), axis=axis) / m)
    return float(out) if out.ndim == 0 else out


# numba scalar kernels -------------------------------------------------------
# Values are (sign: float64 in {-1,0,1}, log_mag: float64); sign 0 means zero.


@numba.njit(cache=True, inline="always")
def _log1mexp(d):
    if d > -0.6931471805599453:
        return math.log(-math.expm1(d))
    return math.log1p(-math.exp(d))


@numba.njit(cache=True)
def _add(sa, la, sb, lb):
    if sa == 0:
        return float(sb), (lb if sb != 0 else -math.inf)
    if sb == 0:
        return float(sa), la
    if la >= lb:
        hs, hl, lo_s, lo_l = sa, la, sb, lb
    else:
        hs, hl, lo_s, lo_l = sb, lb, sa, la
    d = lo_l - hl
    if hs == lo_s:
        return float(hs), hl + math.log1p(math.exp(d))
    if d == 0.0:
        return 0.0, -math.inf
    return float(hs), hl + _log1mexp(d)


@numba.njit(cache=True, inline="always")
def _logaddexp(a, b):
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    if a >= b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@numba.njit(cache=True, inline="always")
def _log_diff(la, lb):
    """Signed ``e^la - e^lb`` for finite ``la``, ``lb``."""
    if la == lb:
        return 0.0, -math.inf
    if la > lb:
        return 1.0, la + _log1mexp(lb - la)
    return -1.0, lb + _log1mexp(la - lb)
