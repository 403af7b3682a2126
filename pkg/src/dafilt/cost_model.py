"""Closed-form hardware cost accounting for DA filter designs.

Counts are architecture-level: LUT words, lookup adders per clock, clocks
per output, update events per output.  The one relation imported from the
literature is the OBC half-size table; everything else is a transparent
formula over (scheme, N, B, k) and the variant parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

VARIANTS = ("lms", "dlms", "blms")


@dataclass(frozen=True)
class CostReport:
    scheme: str
    variant: str
    n_taps: int
    b_bits: int
    k: int
    lut_units: int
    words_per_unit: int
    total_lut_words: int
    lookup_adders: int  # per clock cycle
    cycles_per_output: int
    updates_per_output: Fraction
    delay_registers: int = 0
    approximate: bool = False
    note: str = ""

    def __post_init__(self) -> None:
        assert self.total_lut_words == self.lut_units * self.words_per_unit
        assert min(
            self.lut_units,
            self.words_per_unit,
            self.lookup_adders,
            self.cycles_per_output,
            self.delay_registers,
        ) >= 0
        assert self.updates_per_output >= 0


def estimate(
    scheme: str,
    n_taps: int,
    b_bits: int,
    k: int,
    variant: str = "lms",
    delay: int = 0,
    block: int = 1,
) -> CostReport:
    """Cost of a DA-LMS design with ceil(N/k) LUT units of base size k."""
    if scheme not in ("tc", "obc"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if k < 1 or k > n_taps:
        raise ValueError(f"unit size k={k} outside [1, {n_taps}]")
    units = -(-n_taps // k)
    words = 1 << k if scheme == "tc" else 1 << (k - 1)
    return CostReport(
        scheme=scheme,
        variant=variant,
        n_taps=n_taps,
        b_bits=b_bits,
        k=k,
        lut_units=units,
        words_per_unit=words,
        total_lut_words=units * words,
        lookup_adders=units - 1,
        cycles_per_output=b_bits,
        updates_per_output=Fraction(1, block) if variant == "blms" else Fraction(1),
        delay_registers=delay if variant == "dlms" else 0,
    )


def estimate_obc_even_odd(
    n_taps: int,
    b_bits: int,
    k: int,
    variant: str = "lms",
    delay: int = 0,
    block: int = 1,
) -> CostReport:
    """OBC with an even/odd address split: two units of 2**(k-2) words each.

    Per-LUT word count is one-fourth of the TC baseline.  The split is
    modeled only as counts, so the report is flagged approximate.
    """
    if k < 2:
        raise ValueError("even/odd split requires k >= 2")
    base = estimate("obc", n_taps, b_bits, k, variant, delay, block)
    units = 2 * base.lut_units
    words = 1 << (k - 2)
    return CostReport(
        scheme="obc",
        variant=variant,
        n_taps=n_taps,
        b_bits=b_bits,
        k=k,
        lut_units=units,
        words_per_unit=words,
        total_lut_words=units * words,
        lookup_adders=units - 1,
        cycles_per_output=b_bits,
        updates_per_output=base.updates_per_output,
        delay_registers=base.delay_registers,
        approximate=True,
        note="even/odd OBC split; per-unit words are one-fourth of TC",
    )
