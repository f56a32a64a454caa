"""Tabulate the large-L effective Hamiltonian and its branch curves for c = 1 + amp cos x."""
import argparse
import csv
from pathlib import Path

import numpy as np

from apspread.ap_core import APFunction as F
from apspread.eigen import hbar_curve, j_curves, lambda_infinity, plateau_level
from apspread.hj_cell import CoefficientSet


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--amp", type=float, default=0.5)
    ap.add_argument("--out", type=Path, default=Path("out/plateau"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    co = CoefficientSet(F.const(1.0), F.const(0.0), F.cosine(1.0, args.amp, 1.0))
    M = plateau_level(co)
    curve = hbar_curve(co)
    ps = np.linspace(-2.0, 2.0, 81)
    with open(args.out / "lambda_infinity.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["p", "lambda", "plateau"])
        for p in ps:
            ev = lambda_infinity(co, p, curve=curve)
            wr.writerow([repr(float(p)), repr(ev.value), ev.plateau])
    levels = np.linspace(M, M + 3.0, 61)
    jc = j_curves(co, levels)
    with open(args.out / "j_curves.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["lambda", "j_plus", "j_minus"])
        for row in zip(levels, jc.j_plus, jc.j_minus):
            wr.writerow([repr(float(v)) for v in row])
    print(f"M = {M:.6f}, plateau [{curve.p_left(M):.6f}, {curve.p_right(M):.6f}]")


if __name__ == "__main__":
    main()
