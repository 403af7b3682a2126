"""dafilt command line: run experiments, verify the model, dump traces/costs.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
mismatch.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .cost_model import estimate, estimate_obc_even_odd
from .lut_engine import lut_rows
from .sim_harness import ConfigError, ExperimentConfig, run, trace_iterations
from .verify import verify


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="dafilt", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="run a system-identification experiment")
    p_run.add_argument("--config", required=True, help="TOML experiment config")
    p_run.add_argument("--seed", type=int, default=None, help="override config seed")
    p_run.add_argument("--out", default=None, help="learning-curve CSV path")

    p_ver = sub.add_parser("verify", help="run the oracle-equivalence suites")
    p_ver.add_argument("--sweep", choices=("small", "full"), default="small")
    p_ver.add_argument("--seed", type=int, default=None)

    p_tr = sub.add_parser("trace", help="dump per-clock shift-accumulate traces")
    p_tr.add_argument("--config", required=True)
    p_tr.add_argument("--iters", type=int, required=True)
    p_tr.add_argument("--out", required=True, help="cycle trace CSV path")
    p_tr.add_argument(
        "--lut-out", default=None, help="also dump the final LUT bank as CSV"
    )

    p_cost = sub.add_parser("cost", help="closed-form hardware cost report")
    p_cost.add_argument("--scheme", choices=("tc", "obc"), required=True)
    p_cost.add_argument("--n", type=int, required=True, help="filter taps")
    p_cost.add_argument("--b", type=int, required=True, help="coefficient bits")
    p_cost.add_argument("--k", type=int, required=True, help="taps per LUT unit")
    p_cost.add_argument("--variant", choices=("lms", "dlms", "blms"), default="lms")
    p_cost.add_argument("--delay", type=int, default=0)
    p_cost.add_argument("--block", type=int, default=1)
    p_cost.add_argument(
        "--even-odd-split",
        action="store_true",
        help="OBC even/odd address split (quarter-size LUTs, approximate)",
    )
    p_cost.add_argument("--csv", action="store_true", help="CSV instead of a table")
    return p


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_toml(args.config)
    if args.seed is not None:
        config.seed = args.seed
    result = run(config)
    curve = result.curve
    tail = max(1, len(curve) // 10)
    final_mse = float(sum(curve.mse[-tail:]) / tail)
    print(f"trials={config.ensemble} iterations={config.iterations}")
    print(f"steady-state mse (last {tail} iters): {final_mse:.6g}")
    print(f"final coefficient error: {float(curve.coef_err[-1]):.6g}")
    if args.out:
        curve.write_csv(args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_verify(args) -> int:
    kwargs = {"sweep": args.sweep}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    report = verify(**kwargs)
    print(report.format())
    return 0 if report.ok else 2


def _addr_string(bits: Sequence[int]) -> str:
    return "".join(str(b) for b in bits)


def _cmd_trace(args) -> int:
    config = ExperimentConfig.from_toml(args.config)
    traces = trace_iterations(config, args.iters)
    with open(args.out, "w") as f:
        f.write("iter,cycle,addr_bits,lut_value,sign,acc\n")
        for it, tr in enumerate(traces):
            for rec in tr.records:
                f.write(
                    f"{it},{rec.j},{_addr_string(rec.addr)},"
                    f"{rec.lut_value},{rec.sign},{rec.acc}\n"
                )
    print(f"wrote {args.out} ({len(traces)} iterations)")
    if args.lut_out:
        from .sim_harness import make_filter
        from .variants import BlmsState, DlmsState

        filt = make_filter(config)
        inner = filt.inner if isinstance(filt, (DlmsState, BlmsState)) else filt
        with open(args.lut_out, "w") as f:
            f.write("unit,address,entry_mantissa,entry_real\n")
            for unit, addr, m, real in lut_rows(inner.bank):
                f.write(f"{unit},{addr},{m},{real!r}\n")
        print(f"wrote {args.lut_out}")
    return 0


def _cmd_cost(args) -> int:
    if args.even_odd_split:
        if args.scheme != "obc":
            raise ConfigError("--even-odd-split applies to the OBC scheme only")
        rep = estimate_obc_even_odd(
            args.n, args.b, args.k, args.variant, args.delay, args.block
        )
    else:
        rep = estimate(
            args.scheme, args.n, args.b, args.k, args.variant, args.delay, args.block
        )
    fields = [
        ("scheme", rep.scheme),
        ("variant", rep.variant),
        ("n_taps", rep.n_taps),
        ("b_bits", rep.b_bits),
        ("k", rep.k),
        ("lut_units", rep.lut_units),
        ("words_per_unit", rep.words_per_unit),
        ("total_lut_words", rep.total_lut_words),
        ("lookup_adders", rep.lookup_adders),
        ("cycles_per_output", rep.cycles_per_output),
        ("updates_per_output", rep.updates_per_output),
        ("delay_registers", rep.delay_registers),
        ("approximate", rep.approximate),
    ]
    if args.csv:
        print(",".join(name for name, _ in fields))
        print(",".join(str(val) for _, val in fields))
    else:
        width = max(len(name) for name, _ in fields)
        for name, val in fields:
            print(f"{name:<{width}}  {val}")
        if rep.note:
            print(f"note: {rep.note}")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "verify": _cmd_verify,
        "trace": _cmd_trace,
        "cost": _cmd_cost,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"dafilt: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
