"""Oracle-equivalence sweeps: the executable health check of the model.

Every suite pits an optimized path against an independent reference (direct
multiply-accumulate, brute-force rebuild, monolithic table, exhaustive
reconstruction) and demands bit-exact agreement.  ``verify`` bundles them
behind two sweep sizes; the acceptance tests call the suites individually.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .cost_model import estimate
from .da_core import DaFilterState, advance_window, output, update_obc, update_tc
from .fixed_point import (
    Fx,
    fit_mantissa,
    reconstruct_obc,
    reconstruct_tc,
    slice_obc,
    slice_tc,
)
from .lut_engine import LutBank, bank_build, build_obc, build_tc
from .sim_harness import ExperimentConfig, da_trajectory, generate_trial

SWEEPS = {
    "small": dict(
        scheme_cases=2_000,
        lut_max_k=6,
        bridge_max_k=5,
        slide_shifts=1_000,
        bank_n=(8, 12),
        bank_addrs=100,
        degeneracy_samples=1_000,
        recon_max_b=8,
        cost_max_n=12,
    ),
    "full": dict(
        scheme_cases=100_000,
        lut_max_k=8,
        bridge_max_k=6,
        slide_shifts=10_000,
        bank_n=(8, 16),
        bank_addrs=500,
        degeneracy_samples=10_000,
        recon_max_b=10,
        cost_max_n=24,
    ),
}


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: int
    counterexample: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failures == 0


@dataclass
class VerifyReport:
    suites: list[SuiteResult]

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.suites)

    def format(self) -> str:
        lines = []
        for s in self.suites:
            status = "PASS" if s.ok else "FAIL"
            line = f"{status}  {s.name}  cases={s.cases} failures={s.failures}"
            lines.append(line)
            if s.counterexample:
                lines.append(f"      counterexample: {s.counterexample}")
        lines.append("verify: OK" if self.ok else "verify: MISMATCH")
        return "\n".join(lines)


def _rand_ints(rng: np.random.Generator, wl: int, size) -> np.ndarray:
    return rng.integers(-(1 << (wl - 1)), 1 << (wl - 1), size=size)


def _random_case_params(rng: np.random.Generator) -> dict:
    n = int(rng.integers(1, 9))
    return dict(
        n=n,
        b=int(rng.integers(4, 13)),
        k=int(rng.integers(1, min(n, 6) + 1)),
        x_wl=int(rng.choice((6, 10, 12))),
        policy="slide" if rng.integers(2) else "rebuild",
        rounding="truncate" if rng.integers(4) == 0 else "nearest",
    )


def _make_state(p: dict, scheme: str, coeff_m, window_m) -> DaFilterState:
    x_wl = p["x_wl"]
    return DaFilterState.create(
        p["n"],
        p["b"],
        x_format=(x_wl, x_wl - 1),
        scheme=scheme,
        lut_k=p["k"],
        mu_exp=4,
        bank_policy=p["policy"],
        rounding=p["rounding"],
        coeffs=[Fx(int(m), p["b"], p["b"] - 1) for m in coeff_m],
        window=[Fx(int(m), x_wl, x_wl - 1) for m in window_m],
    )


def _direct_output_m(state: DaFilterState) -> int:
    acc = 0
    for wm, xm in zip(state.coeff_m, state.window_m):
        acc += wm * xm
    m, _ = fit_mantissa(
        acc, state.b_bits - 1 + state.x_fl, state.y_wl, state.y_fl, state.rounding
    )
    return m


def sweep_tc_direct(
    cases: int,
    rng: np.random.Generator,
    corrupt: Optional[Callable[[LutBank], None]] = None,
) -> SuiteResult:
    """output_tc against the direct quantized inner product, bit for bit."""
    done = 0
    failures = 0
    ce = None
    while done < cases:
        p = _random_case_params(rng)
        chunk = int(min(50, cases - done))
        coeffs = _rand_ints(rng, p["b"], (chunk, p["n"]))
        window0 = _rand_ints(rng, p["x_wl"], p["n"])
        new_xs = _rand_ints(rng, p["x_wl"], chunk)
        state = _make_state(p, "tc", coeffs[0], window0)
        if corrupt is not None:
            corrupt(state.bank)
        for c in range(chunk):
            if c > 0:
                state.coeff_m = coeffs[c].tolist()
                state.refresh_addresses()
                advance_window(state, int(new_xs[c]))
            y, _ = output(state)
            expect = _direct_output_m(state)
            done += 1
            if y.mantissa != expect:
                failures += 1
                if ce is None:
                    ce = (
                        f"params={p} window={state.window_m} "
                        f"coeffs={state.coeff_m} da={y.mantissa} direct={expect}"
                    )
    return SuiteResult("tc_output_vs_direct_mac", done, failures, ce)


def sweep_obc_equivalence(
    cases: int, rng: np.random.Generator
) -> list[SuiteResult]:
    """OBC against TC on shared data: outputs and coefficient updates."""
    done = 0
    out_fail = upd_fail = 0
    out_ce = upd_ce = None
    while done < cases:
        p = _random_case_params(rng)
        chunk = int(min(50, cases - done))
        coeffs = _rand_ints(rng, p["b"], (chunk, p["n"]))
        window0 = _rand_ints(rng, p["x_wl"], p["n"])
        new_xs = _rand_ints(rng, p["x_wl"], chunk)
        tc = _make_state(p, "tc", coeffs[0], window0)
        ob = _make_state(p, "obc", coeffs[0], window0)
        e_lo, e_hi = -(1 << (tc.e_wl - 1)), (1 << (tc.e_wl - 1)) - 1
        e_ms = rng.integers(e_lo, e_hi + 1, size=chunk)
        for c in range(chunk):
            if c > 0:
                cm = coeffs[c].tolist()
                tc.coeff_m = cm
                ob.coeff_m = list(cm)
                tc.refresh_addresses()
                ob.refresh_addresses()
                x = int(new_xs[c])
                advance_window(tc, x)
                advance_window(ob, x)
            y_tc, _ = output(tc)
            y_ob, _ = output(ob)
            done += 1
            if y_tc.mantissa != y_ob.mantissa:
                out_fail += 1
                if out_ce is None:
                    out_ce = (
                        f"params={p} window={tc.window_m} coeffs={tc.coeff_m} "
                        f"tc={y_tc.mantissa} obc={y_ob.mantissa}"
                    )
            e = Fx(int(e_ms[c]), tc.e_wl, tc.e_fl)
            update_tc(tc, e, tc.window_m)
            update_obc(ob, e, ob.window_m)
            if tc.coeff_m != ob.coeff_m:
                upd_fail += 1
                if upd_ce is None:
                    upd_ce = (
                        f"params={p} e={e.mantissa} window={tc.window_m} "
                        f"tc={tc.coeff_m} obc={ob.coeff_m}"
                    )
                ob.coeff_m = list(tc.coeff_m)
                ob.refresh_addresses()
    return [
        SuiteResult("obc_output_vs_tc", done, out_fail, out_ce),
        SuiteResult("obc_update_vs_tc", done, upd_fail, upd_ce),
    ]


def sweep_lut_identities(
    max_k: int, bridge_max_k: int, rng: np.random.Generator, reps: int = 3
) -> SuiteResult:
    """Complement (TC), mirror (OBC) and the TC/OBC bridge, all addresses."""
    cases = failures = 0
    ce = None
    x_wl = 12
    for k in range(1, max_k + 1):
        for _ in range(reps):
            window = [Fx(int(m), x_wl, x_wl - 1) for m in _rand_ints(rng, x_wl, k)]
            tc = build_tc(window, k)
            ob = build_obc(window, k)
            mask = (1 << k) - 1
            allones = tc.entries[mask]
            for a in range(1 << k):
                comp = a ^ mask
                cases += 1
                if tc.entries[a] + tc.entries[comp] != allones:
                    failures += 1
                    ce = ce or f"complement k={k} a={a} window={tc.window}"
                cases += 1
                if ob.lookup_int(a) != -ob.lookup_int(comp):
                    failures += 1
                    ce = ce or f"mirror k={k} a={a} window={ob.window}"
                if k <= bridge_max_k:
                    cases += 1
                    if ob.lookup_int(a) != 2 * tc.entries[a] - allones:
                        failures += 1
                        ce = ce or f"bridge k={k} a={a} window={tc.window}"
    return SuiteResult("lut_identities", cases, failures, ce)


def sweep_slide_rebuild(shifts: int, rng: np.random.Generator) -> SuiteResult:
    """Incremental slide against a rebuild from the shifted window."""
    done = 0
    failures = 0
    ce = None
    x_wl = 12
    while done < shifts:
        k = int(rng.integers(1, 9))
        window_m = _rand_ints(rng, x_wl, k).tolist()
        win_fx = [Fx(m, x_wl, x_wl - 1) for m in window_m]
        tc = build_tc(win_fx, k)
        ob = build_obc(win_fx, k)
        run = int(min(100, shifts - done))
        for new in _rand_ints(rng, x_wl, run):
            m = int(new)
            tc.slide(m)
            ob.slide(m)
            window_m = [m] + window_m[:-1]
            ref_fx = [Fx(v, x_wl, x_wl - 1) for v in window_m]
            ref_tc = build_tc(ref_fx, k)
            ref_ob = build_obc(ref_fx, k)
            done += 1
            if tc.entries != ref_tc.entries or tc.window != ref_tc.window:
                failures += 1
                ce = ce or f"tc slide k={k} window={window_m}"
            if (
                ob.entries != ref_ob.entries
                or ob.d_initial != ref_ob.d_initial
                or ob.window != ref_ob.window
            ):
                failures += 1
                ce = ce or f"obc slide k={k} window={window_m}"
    return SuiteResult("slide_vs_rebuild", done, failures, ce)


def _split_addr(a: int, k: int, units: int) -> list[int]:
    mask = (1 << k) - 1
    return [(a >> (u * k)) & mask for u in range(units)]


def sweep_bank_monolithic(
    rng: np.random.Generator,
    n_range: tuple[int, int],
    ks: tuple[int, ...] = (2, 4, 8),
    addrs: int = 500,
) -> SuiteResult:
    """Decomposed bank lookups against a single monolithic table."""
    cases = failures = 0
    ce = None
    x_wl = 10
    for n in range(n_range[0], n_range[1] + 1):
        window = [Fx(int(m), x_wl, x_wl - 1) for m in _rand_ints(rng, x_wl, n)]
        mono_tc = build_tc(window, n)
        mono_ob = build_obc(window, n)
        probe = [0, (1 << n) - 1] + [1 << i for i in range(n)]
        probe += [int(a) for a in rng.integers(0, 1 << n, size=addrs)]
        for k in ks:
            tc_bank = bank_build(window, n, k, "tc")
            ob_bank = bank_build(window, n, k, "obc")
            units = len(tc_bank.units)
            for a in probe:
                parts = _split_addr(a, k, units)
                cases += 1
                if tc_bank.lookup_ints(parts) != mono_tc.entries[a]:
                    failures += 1
                    ce = ce or f"tc bank n={n} k={k} addr={a}"
                cases += 1
                if ob_bank.lookup_ints(parts) != mono_ob.lookup_int(a):
                    failures += 1
                    ce = ce or f"obc bank n={n} k={k} addr={a}"
            # row-level API spot check, address bits padded with zeros
            row = [int(b) for b in rng.integers(0, 2, size=n)]
            a = sum(b << i for i, b in enumerate(row))
            pad_row = row + [0] * (tc_bank.padded_taps - n)
            cases += 1
            if tc_bank.lookup(pad_row) != mono_tc.entries[a]:
                failures += 1
                ce = ce or f"tc bank row api n={n} k={k}"
            obc_row = [2 * b - 1 for b in pad_row]
            cases += 1
            if ob_bank.lookup(obc_row) != mono_ob.lookup_int(a):
                failures += 1
                ce = ce or f"obc bank row api n={n} k={k}"
    return SuiteResult("bank_vs_monolithic", cases, failures, ce)


def sweep_degeneracy(samples: int, rng: np.random.Generator) -> SuiteResult:
    """DLMS(D=0) and BLMS(L=1) against plain LMS, full trajectories."""
    cases = failures = 0
    ce = None
    for scheme in ("tc", "obc"):
        cfg = ExperimentConfig(
            n_taps=8,
            coeff_bits=10,
            iterations=samples,
            scheme=scheme,
            lut_k=4,
            mu_exp=5,
            snr_db=30.0,
            seed=int(rng.integers(0, 2**63)),
        )
        data = generate_trial(cfg, 0)
        xs = data.x_m.tolist()
        ds = data.d_m.tolist()
        base = da_trajectory(cfg, xs, ds)
        dlms_cfg = dataclasses.replace(cfg, variant="dlms", delay=0)
        blms_cfg = dataclasses.replace(cfg, variant="blms", block=1)
        for name, cfg2 in (("dlms_d0", dlms_cfg), ("blms_l1", blms_cfg)):
            other = da_trajectory(cfg2, xs, ds)
            cases += samples
            if other != base:
                failures += 1
                ce = ce or f"{name} diverges from lms, scheme={scheme}"
    return SuiteResult("variant_degeneracy", cases, failures, ce)


def sweep_reconstruction(max_b: int) -> SuiteResult:
    """Exhaustive TC and OBC slice/reconstruct round trips."""
    cases = failures = 0
    ce = None
    for b in range(2, max_b + 1):
        for m in range(-(1 << (b - 1)), 1 << (b - 1)):
            w = Fx(m, b, b - 1)
            row_tc = slice_tc(w)
            row_ob = slice_obc(w)
            cases += 3
            if reconstruct_tc(row_tc) != w.exact:
                failures += 1
                ce = ce or f"tc reconstruct B={b} m={m}"
            if reconstruct_obc(row_ob) != w.exact:
                failures += 1
                ce = ce or f"obc reconstruct B={b} m={m}"
            if row_ob != tuple(2 * bit - 1 for bit in row_tc):
                failures += 1
                ce = ce or f"obc/tc slice law B={b} m={m}"
    return SuiteResult("bit_slice_reconstruction", cases, failures, ce)


def sweep_cost_relations(max_n: int) -> SuiteResult:
    """OBC halving and agreement of word counts with built structures."""
    cases = failures = 0
    ce = None
    for n in range(1, max_n + 1):
        prev_words = {"tc": None, "obc": None}
        for k in range(min(n, 8), 0, -1):
            tc = estimate("tc", n, 12, k)
            ob = estimate("obc", n, 12, k)
            cases += 1
            if 2 * ob.total_lut_words != tc.total_lut_words:
                failures += 1
                ce = ce or f"halving n={n} k={k}"
            for rep, prev_key in ((tc, "tc"), (ob, "obc")):
                cases += 1
                prev = prev_words[prev_key]
                if prev is not None and rep.total_lut_words > prev:
                    failures += 1
                    ce = ce or f"monotonicity n={n} k={k} scheme={prev_key}"
                prev_words[prev_key] = rep.total_lut_words
            if k <= 6 and n <= 12:
                window = [Fx(0, 10, 9)] * n
                for scheme, rep in (("tc", tc), ("obc", ob)):
                    bank = bank_build(window, n, k, scheme)
                    cases += 2
                    if len(bank.units) != rep.lut_units:
                        failures += 1
                        ce = ce or f"unit count n={n} k={k} {scheme}"
                    if any(
                        len(u.entries) != rep.words_per_unit for u in bank.units
                    ):
                        failures += 1
                        ce = ce or f"entry count n={n} k={k} {scheme}"
    return SuiteResult("cost_relations", cases, failures, ce)


def verify(
    sweep: str = "small",
    seed: int = 0x5EED_DA,
    corrupt: Optional[Callable[[LutBank], None]] = None,
) -> VerifyReport:
    """Run every equivalence suite at the requested sweep size."""
    if sweep not in SWEEPS:
        raise ValueError(f"sweep must be one of {sorted(SWEEPS)}")
    p = SWEEPS[sweep]
    rng = np.random.default_rng(seed)
    suites = [sweep_tc_direct(p["scheme_cases"], rng, corrupt)]
    suites.extend(sweep_obc_equivalence(p["scheme_cases"], rng))
    suites.append(sweep_lut_identities(p["lut_max_k"], p["bridge_max_k"], rng))
    suites.append(sweep_slide_rebuild(p["slide_shifts"], rng))
    suites.append(sweep_bank_monolithic(rng, p["bank_n"], addrs=p["bank_addrs"]))
    suites.append(sweep_degeneracy(p["degeneracy_samples"], rng))
    suites.append(sweep_reconstruction(p["recon_max_b"]))
    suites.append(sweep_cost_relations(p["cost_max_n"]))
    return VerifyReport(suites)
