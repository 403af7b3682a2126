"""Exact fixed-point scalars and coefficient bit-slicing.

A value is a signed integer mantissa with an explicit word length ``wl`` and
fraction length ``fl``: real value = mantissa * 2**-fl.  All arithmetic that
feeds the bit-exact oracles goes through :func:`fit`, which rounds a scaled
integer, never a float.  Floats enter only at stimulus-generation time via
:func:`quantize`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class FormatError(ValueError):
    """Raised for an invalid or mismatched fixed-point format."""


ROUNDING_MODES = ("nearest", "truncate")


def _check_format(wl: int, fl: int) -> None:
    if wl < 2:
        raise FormatError(f"word length must be >= 2, got {wl}")
    if fl > wl - 1:
        raise FormatError(f"fraction length {fl} exceeds wl-1 = {wl - 1}")


@dataclass(frozen=True)
class Fx:
    """Fixed-point scalar: value = mantissa * 2**-fl.

    ``saturated`` is a sticky flag set when the producing operation clipped.
    """

    mantissa: int
    wl: int
    fl: int
    saturated: bool = False

    def __post_init__(self) -> None:
        _check_format(self.wl, self.fl)
        lo, hi = fx_range(self.wl)
        if not lo <= self.mantissa <= hi:
            raise FormatError(
                f"mantissa {self.mantissa} outside [{lo}, {hi}] for wl={self.wl}"
            )

    @property
    def value(self) -> float:
        return self.mantissa * 2.0 ** -self.fl

    @property
    def exact(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.fl)


def fx_range(wl: int) -> tuple[int, int]:
    """Mantissa range of a signed wl-bit word."""
    return -(1 << (wl - 1)), (1 << (wl - 1)) - 1


def _round_shift(num: int, shift: int, mode: str) -> int:
    """Round num * 2**-shift to an integer.  shift may be negative (exact)."""
    if shift <= 0:
        return num << -shift
    if mode == "nearest":
        # round half away from zero
        half = 1 << (shift - 1)
        if num >= 0:
            return (num + half) >> shift
        return -((-num + half) >> shift)
    if mode == "truncate":
        # arithmetic right shift: floor, i.e. plain bit-drop in TC hardware
        return num >> shift
    raise ValueError(f"unknown rounding mode {mode!r}")


def fit_mantissa(
    num: int, src_fl: int, wl: int, fl: int, mode: str = "nearest"
) -> tuple[int, bool]:
    """Mantissa-level :func:`fit`: returns (mantissa, saturated).

    The single rounding/saturation kernel shared by fit and the hot loops in
    the filter cores, so every path quantizes identically.
    """
    m = _round_shift(num, src_fl - fl, mode)
    lo, hi = fx_range(wl)
    if m > hi:
        return hi, True
    if m < lo:
        return lo, True
    return m, False


def fit(num: int, src_fl: int, wl: int, fl: int, mode: str = "nearest") -> Fx:
    """Quantize the exact value num * 2**-src_fl into format (wl, fl).

    Rounds per ``mode`` and saturates to the format range; saturation is
    reported via the sticky flag, never an exception.
    """
    _check_format(wl, fl)
    m, sat = fit_mantissa(num, src_fl, wl, fl, mode)
    return Fx(m, wl, fl, saturated=sat)


def quantize(v: float, wl: int, fl: int, mode: str = "nearest") -> Fx:
    """Quantize a real value to format (wl, fl); saturates on overflow."""
    _check_format(wl, fl)
    scale = float(1 << fl)
    if mode == "nearest":
        m = math.floor(v * scale + 0.5) if v >= 0 else -math.floor(-v * scale + 0.5)
    elif mode == "truncate":
        m = math.floor(v * scale)
    else:
        raise ValueError(f"unknown rounding mode {mode!r}")
    lo, hi = fx_range(wl)
    if m > hi:
        return Fx(hi, wl, fl, saturated=True)
    if m < lo:
        return Fx(lo, wl, fl, saturated=True)
    return Fx(int(m), wl, fl)


def to_real(a: Fx) -> float:
    return a.value


def _require_coeff_format(w: Fx) -> int:
    b = w.wl
    if w.fl != b - 1:
        raise FormatError(
            f"coefficient must have fl == wl-1, got (wl={w.wl}, fl={w.fl})"
        )
    return b


def slice_tc(w: Fx) -> tuple[int, ...]:
    """TC bit row of a (B, B-1)-format coefficient, sign bit first.

    Row index j carries weight -1 for j=0 and 2**-j otherwise, so the row
    reconstructs the coefficient value exactly.
    """
    b = _require_coeff_format(w)
    pattern = w.mantissa & ((1 << b) - 1)
    return tuple((pattern >> (b - 1 - j)) & 1 for j in range(b))


def slice_obc(w: Fx) -> tuple[int, ...]:
    """OBC difference row: each TC bit minus its complement, entries in {-1,+1}."""
    return tuple(2 * bit - 1 for bit in slice_tc(w))


def reconstruct_tc(bits: Sequence[int]) -> Fraction:
    """Exact value of a TC bit row: -bits[0] + sum(bits[j] * 2**-j)."""
    b = len(bits)
    total = -bits[0] * (1 << (b - 1))
    for j in range(1, b):
        total += bits[j] << (b - 1 - j)
    return Fraction(total, 1 << (b - 1))


def reconstruct_obc(row: Sequence[int]) -> Fraction:
    """Exact value of an OBC row: half of (-row[0] + sum(row[j] 2**-j) - 2**-(B-1))."""
    b = len(row)
    total = -row[0] * (1 << (b - 1))
    for j in range(1, b):
        total += row[j] << (b - 1 - j)
    total -= 1
    return Fraction(total, 1 << b)


@dataclass(frozen=True)
class CoeffBits:
    """N x B coefficient bit-slice matrix in TC form; rows ordered by tap."""

    bits: tuple[tuple[int, ...], ...]

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[Fx]) -> "CoeffBits":
        return cls(tuple(slice_tc(w) for w in coeffs))

    @property
    def n_taps(self) -> int:
        return len(self.bits)

    @property
    def n_bits(self) -> int:
        return len(self.bits[0]) if self.bits else 0

    @property
    def obc(self) -> tuple[tuple[int, ...], ...]:
        """The difference view: entries 2*bit - 1 in {-1,+1}."""
        return tuple(tuple(2 * b - 1 for b in row) for row in self.bits)
