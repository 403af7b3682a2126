"""One DA-LMS iteration: bit-serial shift-accumulate output and update.

The output accumulator is an exact wide integer; the result is quantized to
the output format once, at the end.  That single-rounding contract is what
makes the LUT path bit-identical to a direct multiply-accumulate, and the
test suite leans on it everywhere.

Cycle order is LSB to MSB (bit index j = B-1 first), with the sign-inverted
MSB term (j = 0) added last.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .fixed_point import (
    CoeffBits,
    FormatError,
    Fx,
    fit,
    fit_mantissa,
    fx_range,
    slice_obc,
    slice_tc,
)
from .lut_engine import LutBank, bank_build


class AccumulatorOverflow(ValueError):
    """Configured accumulator width cannot hold an intermediate sum."""


def cycle_sign(j: int, b: int) -> int:
    """Sign factor of clock j: (-1)**floor((B-1-j)/(B-1)), -1 only at j = 0."""
    return 1 - 2 * (((b - 1 - j) // (b - 1)) & 1)


@dataclass
class CycleRecord:
    j: int  # coefficient bit index processed on this clock
    addr: tuple[int, ...]  # padded address row, tap 0 first (TC bit encoding)
    lut_value: int  # bank lookup result, unit entry scale
    sign: int
    acc: int  # accumulator after this clock, scale 2**-acc_scale


@dataclass
class CycleTrace:
    scheme: str
    records: list[CycleRecord]
    acc_scale: int  # output = final acc * 2**-acc_scale, exact
    d_initial: Optional[int] = None  # OBC accumulator preload


@dataclass
class DaFilterState:
    """Coefficients, input window, LUT bank and formats of one DA-LMS filter.

    Mantissas are stored as plain ints; ``coeffs``/``window``/``coeff_bits``
    are derived views.  The state is owned by a single execution context and
    mutated in place by :func:`step`.
    """

    n_taps: int
    b_bits: int
    x_wl: int
    x_fl: int
    y_wl: int
    y_fl: int
    e_wl: int
    e_fl: int
    coeff_m: list[int]
    window_m: list[int]  # newest first
    bank: LutBank
    mu: Fx
    scheme: str  # "tc" | "obc"
    bank_policy: str = "slide"
    rounding: str = "nearest"
    acc_width: int = 64
    saturated: bool = False
    trace_sink: Optional[list] = None  # collects a CycleTrace per output
    _addr: list[list[int]] = field(default_factory=list, repr=False)

    @classmethod
    def create(
        cls,
        n_taps: int,
        b_bits: int,
        *,
        x_format: tuple[int, int] = (12, 11),
        y_format: Optional[tuple[int, int]] = None,
        e_format: Optional[tuple[int, int]] = None,
        mu: Optional[Fx] = None,
        mu_exp: Optional[int] = None,
        scheme: str = "tc",
        lut_k: Optional[int] = None,
        bank_policy: str = "slide",
        rounding: str = "nearest",
        acc_width: int = 64,
        coeffs: Optional[Sequence[Fx]] = None,
        window: Optional[Sequence[Fx]] = None,
    ) -> "DaFilterState":
        if scheme not in ("tc", "obc"):
            raise ValueError(f"unknown scheme {scheme!r}")
        if b_bits < 2:
            raise ValueError("coefficient width must be >= 2")
        x_wl, x_fl = x_format
        if y_format is None:
            y_format = (x_wl + max(1, math.ceil(math.log2(n_taps))) + 2, x_fl)
        if e_format is None:
            e_format = y_format
        mu = _resolve_mu(mu, mu_exp)
        k = lut_k if lut_k is not None else min(n_taps, 4)

        if coeffs is None:
            coeff_m = [0] * n_taps
        else:
            coeff_m = [_coeff_mantissa(w, b_bits) for w in coeffs]
        if window is None:
            window_m = [0] * n_taps
        else:
            if len(window) != n_taps:
                raise ValueError("window length must equal n_taps")
            window_m = []
            for s in window:
                if (s.wl, s.fl) != (x_wl, x_fl):
                    raise FormatError("window sample format mismatch")
                window_m.append(s.mantissa)

        win_fx = [Fx(m, x_wl, x_fl) for m in window_m]
        bank = bank_build(win_fx, n_taps, k, scheme)
        state = cls(
            n_taps=n_taps,
            b_bits=b_bits,
            x_wl=x_wl,
            x_fl=x_fl,
            y_wl=y_format[0],
            y_fl=y_format[1],
            e_wl=e_format[0],
            e_fl=e_format[1],
            coeff_m=coeff_m,
            window_m=window_m,
            bank=bank,
            mu=mu,
            scheme=scheme,
            bank_policy=bank_policy,
            rounding=rounding,
            acc_width=acc_width,
        )
        state.refresh_addresses()
        return state

    @property
    def coeffs(self) -> list[Fx]:
        return [Fx(m, self.b_bits, self.b_bits - 1) for m in self.coeff_m]

    @property
    def window(self) -> list[Fx]:
        return [Fx(m, self.x_wl, self.x_fl) for m in self.window_m]

    @property
    def coeff_bits(self) -> CoeffBits:
        return CoeffBits.from_coeffs(self.coeffs)

    def refresh_addresses(self) -> None:
        """Rebuild the per-clock, per-unit LUT addresses from the coefficients."""
        b = self.b_bits
        k = self.bank.k
        n_units = len(self.bank.units)
        mask = (1 << b) - 1
        addr = [[0] * n_units for _ in range(b)]
        for i, m in enumerate(self.coeff_m):
            pattern = m & mask
            if not pattern:
                continue
            u, t = divmod(i, k)
            for j in range(b):
                if (pattern >> (b - 1 - j)) & 1:
                    addr[j][u] |= 1 << t
        self._addr = addr

    def check_invariants(self) -> None:
        """Assert derived state matches the coefficients and window exactly."""
        cb = self.coeff_bits
        for i, w in enumerate(self.coeffs):
            assert cb.bits[i] == slice_tc(w)
            assert cb.obc[i] == slice_obc(w)
        padded = self.window_m + [0] * (self.bank.padded_taps - self.n_taps)
        # padded tail may hold older real samples after slides; taps 0..N-1
        # must match the filter window exactly
        assert self.bank.window[: self.n_taps] == padded[: self.n_taps]
        saved = [row[:] for row in self._addr]
        self.refresh_addresses()
        assert saved == self._addr


def _resolve_mu(mu: Optional[Fx], mu_exp: Optional[int]) -> Fx:
    if (mu is None) == (mu_exp is None):
        raise ValueError("specify exactly one of mu and mu_exp")
    if mu_exp is not None:
        if mu_exp < 0:
            raise ValueError("mu_exp must be >= 0 (step size 2**-mu_exp)")
        return Fx(1, max(2, mu_exp + 1), mu_exp)
    if mu.mantissa == 0:
        raise ValueError("step size quantizes to zero in its format")
    return mu


def _coeff_mantissa(w: Fx, b_bits: int) -> int:
    if (w.wl, w.fl) != (b_bits, b_bits - 1):
        raise FormatError(
            f"coefficient format ({w.wl}, {w.fl}) != ({b_bits}, {b_bits - 1})"
        )
    return w.mantissa


def _addr_row(addrs: Sequence[int], k: int, padded: int) -> tuple[int, ...]:
    return tuple((addrs[t // k] >> (t % k)) & 1 for t in range(padded))


def output_tc(
    state: DaFilterState, trace: bool = False
) -> tuple[Fx, Optional[CycleTrace]]:
    """Bit-serial TC-DA output; equals the direct quantized inner product."""
    if state.scheme != "tc":
        raise ValueError("state is not configured for the TC scheme")
    return _output(state, trace, acc0=0, scale=state.x_fl + state.b_bits - 1)


def output_obc(
    state: DaFilterState, trace: bool = False
) -> tuple[Fx, Optional[CycleTrace]]:
    """Bit-serial OBC-DA output; bit-exact to output_tc on the same state."""
    if state.scheme != "obc":
        raise ValueError("state is not configured for the OBC scheme")
    return _output(
        state, trace, acc0=state.bank.d_initial, scale=state.x_fl + state.b_bits
    )


def _output(
    state: DaFilterState, trace: bool, acc0: int, scale: int
) -> tuple[Fx, Optional[CycleTrace]]:
    b = state.b_bits
    bank = state.bank
    addr = state._addr
    limit = 1 << (state.acc_width - 1)
    acc = acc0
    trace = trace or state.trace_sink is not None
    records: list[CycleRecord] = [] if trace else None
    for j in range(b - 1, -1, -1):
        val = bank.lookup_ints(addr[j])
        sign = cycle_sign(j, b)
        acc += (sign * val) << (b - 1 - j)
        if not -limit <= acc < limit:
            raise AccumulatorOverflow(
                f"accumulator exceeds {state.acc_width} bits at clock j={j}"
            )
        if trace:
            records.append(
                CycleRecord(
                    j=j,
                    addr=_addr_row(addr[j], bank.k, bank.padded_taps),
                    lut_value=val,
                    sign=sign,
                    acc=acc,
                )
            )
    y = fit(acc, scale, state.y_wl, state.y_fl, state.rounding)
    if y.saturated:
        state.saturated = True
    tr = None
    if trace:
        tr = CycleTrace(
            scheme=state.scheme,
            records=records,
            acc_scale=scale,
            d_initial=acc0 if state.scheme == "obc" else None,
        )
        if state.trace_sink is not None:
            state.trace_sink.append(tr)
    return y, tr


def output(state: DaFilterState, trace: bool = False):
    return output_tc(state, trace) if state.scheme == "tc" else output_obc(state, trace)


def form_error(
    d: Fx,
    y: Fx,
    wl: Optional[int] = None,
    fl: Optional[int] = None,
    mode: str = "nearest",
) -> Fx:
    """e = d - y, computed exactly and quantized to the error format."""
    if wl is None:
        wl, fl = d.wl, d.fl
    s = max(d.fl, y.fl)
    num = (d.mantissa << (s - d.fl)) - (y.mantissa << (s - y.fl))
    return fit(num, s, wl, fl, mode)


def _apply_update(
    state: DaFilterState, term_nums: Sequence[int], term_fl: int
) -> None:
    """coeff_i += term_nums[i] * 2**-term_fl, exact sum, one rounding per tap."""
    b = state.b_bits
    s = max(term_fl, b - 1)
    sh_w = s - (b - 1)
    sh_t = s - term_fl
    mode = state.rounding
    coeff = state.coeff_m
    sat = False
    for i in range(state.n_taps):
        num = (coeff[i] << sh_w) + (term_nums[i] << sh_t)
        m, clipped = fit_mantissa(num, s, b, b - 1, mode)
        coeff[i] = m
        sat = sat or clipped
    if sat:
        state.saturated = True
    state.refresh_addresses()


def update_tc(state: DaFilterState, e: Fx, x_used: Sequence[int]) -> DaFilterState:
    """w <- quantize(w + mu*e*x) per tap; bit matrix re-sliced afterwards."""
    if state.scheme != "tc":
        raise ValueError("state is not configured for the TC scheme")
    g = state.mu.mantissa * e.mantissa
    term_fl = state.mu.fl + e.fl + state.x_fl
    _apply_update(state, [g * x for x in x_used], term_fl)
    return state


def update_obc(state: DaFilterState, e: Fx, x_used: Sequence[int]) -> DaFilterState:
    """Coefficient update through the OBC difference form.

    The difference representation carries twice the coefficient plus a
    constant, so the step size enters doubled; mapping back to coefficient
    values before rounding makes the trajectory identical to update_tc.
    """
    if state.scheme != "obc":
        raise ValueError("state is not configured for the OBC scheme")
    b = state.b_bits
    term_fl = state.mu.fl + e.fl + state.x_fl
    s = max(term_fl, b - 1)
    sh_w = s - (b - 1)
    sh_t = s - term_fl
    g2 = 2 * state.mu.mantissa * e.mantissa
    mode = state.rounding
    coeff = state.coeff_m
    sat = False
    for i in range(state.n_taps):
        # difference-form partial value: 2w + 2**-(B-1), updated with 2*mu*e*x
        wt = ((2 * coeff[i] + 1) << sh_w) + g2 * x_used[i] * (1 << sh_t)
        num = wt - (1 << sh_w)  # strip the constant: exactly 2*(w + mu*e*x)
        m, clipped = fit_mantissa(num, s + 1, b, b - 1, mode)
        coeff[i] = m
        sat = sat or clipped
    if sat:
        state.saturated = True
    state.refresh_addresses()
    return state


def advance_window(state: DaFilterState, x_m: int) -> None:
    """Shift the input window and LUT bank by one sample (mantissa domain)."""
    state.window_m = [x_m] + state.window_m[:-1]
    state.bank.shift_in(x_m, state.bank_policy)


def step_m(
    state: DaFilterState, x_m: int, d_m: int, trace: bool = False
) -> tuple[Fx, Fx, Optional[CycleTrace]]:
    """One LMS iteration on mantissa inputs (x in x-format, d in y-format)."""
    advance_window(state, x_m)
    y, tr = output(state, trace)
    d = Fx(d_m, state.y_wl, state.y_fl)
    e = form_error(d, y, state.e_wl, state.e_fl, state.rounding)
    if e.saturated:
        state.saturated = True
    if state.scheme == "tc":
        update_tc(state, e, state.window_m)
    else:
        update_obc(state, e, state.window_m)
    return y, e, tr


def step(
    state: DaFilterState, x_new: Fx, d: Fx, trace: bool = False
) -> tuple[Fx, Fx, Optional[CycleTrace]]:
    """One full iteration: shift window, output, error, coefficient update."""
    if (x_new.wl, x_new.fl) != (state.x_wl, state.x_fl):
        raise FormatError("input sample format does not match the filter")
    if (d.wl, d.fl) != (state.y_wl, state.y_fl):
        raise FormatError("desired sample must use the output format")
    return step_m(state, x_new.mantissa, d.mantissa, trace)
