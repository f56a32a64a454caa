"""Rate sweeps toward both limits, with error / bound tables.

Besides the two reference instances this also runs a non-degenerate large-L
variant (oscillating c together with periodic c_tilde), where L actually
enters the finite-L problem.
"""
import argparse
import math
from pathlib import Path

import numpy as np

from apspread.ap_core import APFunction as F
from apspread.hj_cell import CoefficientSet
from apspread.rate_lab import sweep_large_L, sweep_small_L, write_summary

INSTANCES = {
    "large_periodic": (CoefficientSet(F.const(1.0), F.const(0.0), F.const(1.0), F.cosine(1.0)), "large"),
    "large_two_scale": (CoefficientSet(F.const(1.0), F.const(0.0), F.cosine(1.0, 0.5, 1.0), F.cosine(1.0)), "large"),
    "small_quasi": (CoefficientSet(F.from_terms(2.0, [(1.0, 0.5, 0.0), (math.sqrt(2.0), 0.5, 0.0)]),
                                   F.const(0.0), F.const(1.0)), "small"),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("out/rates"))
    ap.add_argument("--only", choices=sorted(INSTANCES), default=None)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, (co, regime) in INSTANCES.items():
        if args.only and name != args.only:
            continue
        if regime == "large":
            s = sweep_large_L(co, 1, workers=args.workers)
        else:
            s = sweep_small_L(co, 1, workers=args.workers)
        s.to_csv(args.out / f"{name}.csv")
        write_summary(s, args.out / f"{name}.json")
        print(f"{name}: limit {s.limit:.8f}  slope {s.fitted_exponent}  spread {s.ratio_spread}")
        for L, err in zip(s.L_values, s.errors):
            print(f"  L={L:<6g} error {err:.3e}")
        if s.bound_values is not None:
            print("  error / bound:", np.array2string(s.errors / s.bound_values, precision=3))
        for note in s.notes:
            print("  note:", note)


if __name__ == "__main__":
    main()
