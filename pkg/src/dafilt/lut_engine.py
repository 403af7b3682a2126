"""DA partial-sum lookup tables: TC and OBC units, decomposition banks.

Entries are exact Python integers in the mantissa domain of the input
samples: a TC entry is a plain subset sum at scale 2**-frac, an OBC entry is
a signed half-sum stored at scale 2**-(frac+1) so the half factor stays
integral.  Address convention throughout: bit i of an address corresponds to
tap i of the unit window, newest sample = bit 0.  The OBC sign-select slice
is the top tap of the unit (index k-1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

from .fixed_point import Fx, FormatError

MAX_UNIT_TAPS = 16

# entries must fit the generous wide-integer envelope the hardware allocates
_ENTRY_LIMIT = 1 << 63


def _common_format(window: Sequence[Fx]) -> tuple[int, int]:
    wl, fl = window[0].wl, window[0].fl
    for s in window[1:]:
        if (s.wl, s.fl) != (wl, fl):
            raise FormatError("window samples must share one format")
    return wl, fl


def _check_k(k: int, max_k: int) -> None:
    if k < 1 or k > max_k:
        raise ValueError(f"unit size k={k} outside [1, {max_k}]")


def _check_entry_width(window_m: Sequence[int]) -> None:
    bound = sum(abs(m) for m in window_m) + 1
    if bound >= _ENTRY_LIMIT:
        raise FormatError("window mantissas exceed the 64-bit entry envelope")


def _row_to_addr(addr: Sequence[int], k: int, obc: bool) -> int:
    if len(addr) != k:
        raise ValueError(f"address length {len(addr)} != unit size {k}")
    a = 0
    if obc:
        for i, c in enumerate(addr):
            if c == 1:
                a |= 1 << i
            elif c != -1:
                raise ValueError("OBC address entries must be -1 or +1")
    else:
        for i, bit in enumerate(addr):
            if bit == 1:
                a |= 1 << i
            elif bit != 0:
                raise ValueError("TC address bits must be 0 or 1")
    return a


@dataclass
class TcLut:
    """2**k subset sums of the window mantissas; entries[0] == 0."""

    entries: list[int]
    window: list[int]  # sample mantissas, newest first
    frac: int
    k: int

    def lookup(self, addr: Sequence[int]) -> int:
        return self.entries[_row_to_addr(addr, self.k, obc=False)]

    def lookup_int(self, a: int) -> int:
        return self.entries[a]

    def slide(self, new_sample: Union[Fx, int]) -> "TcLut":
        """Shift the window by one sample, updating entries in place.

        new_entries[a] = old_entries[a >> 1] + (a & 1) * new_sample, walked
        descending so index a >> 1 still holds the previous-iteration value.
        """
        m = _sample_mantissa(new_sample, self.frac)
        e = self.entries
        for a in range(len(e) - 1, -1, -1):
            e[a] = e[a >> 1] + (m if a & 1 else 0)
        self.window = [m] + self.window[:-1]
        return self


@dataclass
class ObcLut:
    """Half-size table of signed half-sums, top-tap slice fixed to +1.

    entries[b] stores sum(c_i * window[i]) + window[k-1] over the low k-1
    taps with c_i = 2*bit_i(b) - 1, at scale 2**-(frac+1).  The missing half
    of the conceptual table is the negation of the stored half at the
    complemented low bits.  d_initial = -sum(window) at the same scale.
    """

    entries: list[int]
    d_initial: int
    window: list[int]
    frac: int
    k: int

    def lookup(self, addr: Sequence[int]) -> int:
        return self.lookup_int(_row_to_addr(addr, self.k, obc=True))

    def lookup_int(self, a: int) -> int:
        low_mask = (1 << (self.k - 1)) - 1
        low = a & low_mask
        if (a >> (self.k - 1)) & 1:
            return self.entries[low]
        return -self.entries[(~low) & low_mask]

    def slide(self, new_sample: Union[Fx, int]) -> "ObcLut":
        """Shift the window by one sample, updating the stored half in place."""
        m = _sample_mantissa(new_sample, self.frac)
        w = self.window
        e = self.entries
        if self.k == 1:
            e[0] = m
        else:
            # correction reuses the two taps that change role at the top slot
            corr = 2 * w[self.k - 2] - w[self.k - 1]
            for b in range(len(e) - 1, -1, -1):
                e[b] = e[b >> 1] + corr + (m if b & 1 else -m)
        self.d_initial += w[self.k - 1] - m
        self.window = [m] + w[:-1]
        return self


def _sample_mantissa(sample: Union[Fx, int], frac: int) -> int:
    if isinstance(sample, Fx):
        if sample.fl != frac:
            raise FormatError(
                f"sample fraction length {sample.fl} != LUT scale {frac}"
            )
        return sample.mantissa
    return sample


def build_tc(window: Sequence[Fx], k: int, *, max_k: int = MAX_UNIT_TAPS) -> TcLut:
    """Build a TC unit from k samples in one pass over prior partial sums."""
    _check_k(k, max_k)
    if len(window) != k:
        raise ValueError(f"window length {len(window)} != k = {k}")
    _, fl = _common_format(window)
    window_m = [s.mantissa for s in window]
    return _build_tc_m(window_m, k, fl)


def _build_tc_m(window_m: Sequence[int], k: int, fl: int) -> TcLut:
    _check_entry_width(window_m)
    entries = [0] * (1 << k)
    for a in range(1, 1 << k):
        low = a & -a
        entries[a] = entries[a ^ low] + window_m[low.bit_length() - 1]
    return TcLut(entries, list(window_m), fl, k)


def build_obc(window: Sequence[Fx], k: int, *, max_k: int = MAX_UNIT_TAPS) -> ObcLut:
    """Build an OBC unit storing only the half with the top slice at +1."""
    _check_k(k, max_k)
    if len(window) != k:
        raise ValueError(f"window length {len(window)} != k = {k}")
    _, fl = _common_format(window)
    window_m = [s.mantissa for s in window]
    return _build_obc_m(window_m, k, fl)


def _build_obc_m(window_m: Sequence[int], k: int, fl: int) -> ObcLut:
    _check_entry_width(window_m)
    total = sum(window_m)
    entries = [0] * (1 << (k - 1))
    for b in range(1 << (k - 1)):
        acc = window_m[k - 1]
        for i in range(k - 1):
            acc += window_m[i] if (b >> i) & 1 else -window_m[i]
        entries[b] = acc
    return ObcLut(entries, -total, list(window_m), fl, k)


@dataclass
class LutBank:
    """ceil(N/k) LUT units covering N taps, tail zero-padded on build.

    Padded tail slots receive real samples as the window slides; correctness
    rests on the padded coefficient slices being zero, not on the samples.
    """

    units: list  # TcLut or ObcLut, unit u covers taps [u*k, (u+1)*k)
    scheme: str  # "tc" | "obc"
    k: int
    n_taps: int

    @property
    def padded_taps(self) -> int:
        return len(self.units) * self.k

    @property
    def window(self) -> list[int]:
        out: list[int] = []
        for u in self.units:
            out.extend(u.window)
        return out

    @property
    def d_initial(self) -> int:
        if self.scheme != "obc":
            raise ValueError("d_initial is defined only for OBC banks")
        return sum(u.d_initial for u in self.units)

    def lookup(self, addr: Sequence[int]) -> int:
        if len(addr) != self.padded_taps:
            raise ValueError(
                f"address length {len(addr)} != padded taps {self.padded_taps}"
            )
        total = 0
        for u, unit in enumerate(self.units):
            total += unit.lookup(addr[u * self.k : (u + 1) * self.k])
        return total

    def lookup_ints(self, addrs: Sequence[int]) -> int:
        total = 0
        for unit, a in zip(self.units, addrs):
            total += unit.lookup_int(a)
        return total

    def shift_in(self, new_sample: Union[Fx, int], policy: str = "slide") -> None:
        """Advance the padded window by one sample via slide or full rebuild."""
        frac = self.units[0].frac
        m = _sample_mantissa(new_sample, frac)
        if policy == "slide":
            # each unit inherits the sample falling off the previous unit
            carries = [m] + [u.window[self.k - 1] for u in self.units[:-1]]
            for unit, carry in zip(self.units, carries):
                unit.slide(carry)
        elif policy == "rebuild":
            padded = [m] + self.window[:-1]
            build = _build_tc_m if self.scheme == "tc" else _build_obc_m
            self.units = [
                build(padded[u * self.k : (u + 1) * self.k], self.k, frac)
                for u in range(len(self.units))
            ]
        else:
            raise ValueError(f"unknown bank policy {policy!r}")


def bank_build(
    window: Sequence[Fx], n_taps: int, k: int, scheme: str,
    *, max_k: int = MAX_UNIT_TAPS,
) -> LutBank:
    """Decompose n_taps into ceil(N/k) units of size k, zero-padding the tail."""
    _check_k(k, max_k)
    if k > n_taps:
        raise ValueError(f"unit size k={k} exceeds tap count {n_taps}")
    if len(window) != n_taps:
        raise ValueError(f"window length {len(window)} != n_taps = {n_taps}")
    if scheme not in ("tc", "obc"):
        raise ValueError(f"unknown scheme {scheme!r}")
    _, fl = _common_format(window)
    n_units = -(-n_taps // k)
    padded = [s.mantissa for s in window] + [0] * (n_units * k - n_taps)
    build = _build_tc_m if scheme == "tc" else _build_obc_m
    units = [build(padded[u * k : (u + 1) * k], k, fl) for u in range(n_units)]
    return LutBank(units, scheme, k, n_taps)


def lut_rows(bank: LutBank) -> Iterator[tuple[int, int, int, float]]:
    """Yield (unit, address, entry mantissa, entry real value) for CSV dumps."""
    for u, unit in enumerate(bank.units):
        shift = unit.frac + (1 if bank.scheme == "obc" else 0)
        for addr, m in enumerate(unit.entries):
            yield u, addr, m, m * 2.0 ** -shift
