#!/usr/bin/env python3
"""Sweep the hardware cost model over (N, k) and emit a CSV grid.

Shows the area/speed trade the decomposition exposes: total LUT words fall
as k shrinks while per-cycle lookup adders grow, and OBC halves the words of
TC at every point.
"""

import argparse
import sys

from dafilt.cost_model import estimate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--taps", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument("--b", type=int, default=12)
    ap.add_argument("--out", default=None, help="CSV path (default stdout)")
    args = ap.parse_args()

    out = open(args.out, "w") if args.out else sys.stdout
    out.write("scheme,n_taps,k,lut_units,words_per_unit,total_lut_words,lookup_adders,cycles_per_output\n")
    for n in args.taps:
        k = 1
        while k <= min(n, 16):
            for scheme in ("tc", "obc"):
                r = estimate(scheme, n, args.b, k)
                out.write(
                    f"{r.scheme},{r.n_taps},{r.k},{r.lut_units},{r.words_per_unit},"
                    f"{r.total_lut_words},{r.lookup_adders},{r.cycles_per_output}\n"
                )
            k *= 2
    if args.out:
        out.close()
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
