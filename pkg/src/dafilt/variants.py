"""Delayed-LMS and Block-LMS adaptation wrappers over the DA core.

DLMS applies each update with the error and the matching window snapshot
from D iterations earlier; D = 0 degenerates to plain LMS.  BLMS freezes the
coefficients across a block of L samples and applies one summed update per
block; L = 1 degenerates to plain LMS.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .da_core import (
    DaFilterState,
    advance_window,
    form_error,
    output,
    update_obc,
    update_tc,
    _apply_update,
)
from .fixed_point import FormatError, Fx, fit_mantissa


@dataclass
class DlmsState:
    inner: DaFilterState
    delay: int
    pipe: list[tuple[Fx, tuple[int, ...]]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.delay < 0:
            raise ValueError("delay depth must be >= 0")


@dataclass
class BlmsState:
    inner: DaFilterState
    block: int

    def __post_init__(self) -> None:
        if self.block < 1:
            raise ValueError("block length must be >= 1")


def dlms_step_m(
    state: DlmsState, x_m: int, d_m: int
) -> tuple[Fx, Fx]:
    """One DLMS iteration on mantissa inputs."""
    inner = state.inner
    advance_window(inner, x_m)
    y, _ = output(inner)
    d = Fx(d_m, inner.y_wl, inner.y_fl)
    e = form_error(d, y, inner.e_wl, inner.e_fl, inner.rounding)
    if e.saturated:
        inner.saturated = True
    state.pipe.append((e, tuple(inner.window_m)))
    if len(state.pipe) > state.delay:
        e_old, win_old = state.pipe.pop(0)
        if inner.scheme == "tc":
            update_tc(inner, e_old, win_old)
        else:
            update_obc(inner, e_old, win_old)
    return y, e


def dlms_step(state: DlmsState, x_new: Fx, d: Fx) -> tuple[Fx, Fx]:
    """One DLMS iteration; no update happens until the delay pipe fills."""
    inner = state.inner
    if (x_new.wl, x_new.fl) != (inner.x_wl, inner.x_fl):
        raise FormatError("input sample format does not match the filter")
    if (d.wl, d.fl) != (inner.y_wl, inner.y_fl):
        raise FormatError("desired sample must use the output format")
    return dlms_step_m(state, x_new.mantissa, d.mantissa)


def blms_step_m(
    state: BlmsState, x_block_m: list[int], d_block_m: list[int]
) -> tuple[list[Fx], list[Fx]]:
    """One BLMS block on mantissa inputs: L outputs, one summed update."""
    inner = state.inner
    l = state.block
    if len(x_block_m) != l or len(d_block_m) != l:
        raise ValueError(f"block must contain exactly {l} samples")
    ys: list[Fx] = []
    es: list[Fx] = []
    windows: list[tuple[int, ...]] = []
    for x_m, d_m in zip(x_block_m, d_block_m):
        advance_window(inner, x_m)
        y, _ = output(inner)
        d = Fx(d_m, inner.y_wl, inner.y_fl)
        e = form_error(d, y, inner.e_wl, inner.e_fl, inner.rounding)
        if e.saturated:
            inner.saturated = True
        ys.append(y)
        es.append(e)
        windows.append(tuple(inner.window_m))

    # unnormalized block gradient, summed exactly before the single rounding
    grad = [0] * inner.n_taps
    for e, win in zip(es, windows):
        e_m = e.mantissa
        for i in range(inner.n_taps):
            grad[i] += e_m * win[i]
    mu_m = inner.mu.mantissa
    term_fl = inner.mu.fl + inner.e_fl + inner.x_fl
    if inner.scheme == "tc":
        _apply_update(inner, [mu_m * g for g in grad], term_fl)
    else:
        # route through the doubled difference-form step, mapped back exactly
        _apply_update_obc_block(inner, grad, term_fl)
    return ys, es


def _apply_update_obc_block(
    inner: DaFilterState, grad: list[int], term_fl: int
) -> None:
    b = inner.b_bits
    s = max(term_fl, b - 1)
    sh_w = s - (b - 1)
    sh_t = s - term_fl
    g2 = 2 * inner.mu.mantissa
    coeff = inner.coeff_m
    sat = False
    for i in range(inner.n_taps):
        wt = ((2 * coeff[i] + 1) << sh_w) + g2 * grad[i] * (1 << sh_t)
        num = wt - (1 << sh_w)
        m, clipped = fit_mantissa(num, s + 1, b, b - 1, inner.rounding)
        coeff[i] = m
        sat = sat or clipped
    if sat:
        inner.saturated = True
    inner.refresh_addresses()


def blms_step(
    state: BlmsState, x_block: list[Fx], d_block: list[Fx]
) -> tuple[list[Fx], list[Fx]]:
    """One BLMS block: outputs with frozen coefficients, then one update."""
    inner = state.inner
    if len(x_block) != state.block or len(d_block) != state.block:
        raise ValueError(f"block must contain exactly {state.block} samples")
    for x in x_block:
        if (x.wl, x.fl) != (inner.x_wl, inner.x_fl):
            raise FormatError("input sample format does not match the filter")
    for d in d_block:
        if (d.wl, d.fl) != (inner.y_wl, inner.y_fl):
            raise FormatError("desired sample must use the output format")
    return blms_step_m(
        state, [x.mantissa for x in x_block], [d.mantissa for d in d_block]
    )
