#!/usr/bin/env python3
"""Normalized Gagliardo energy of 1 - r^2 as s -> 1 against the gradient energy 16 pi / 5."""
import argparse
import math
from pathlib import Path

from henonlab import DiscreteField, ProblemSpec, RadialMesh, build_kernel_table, gagliardo_energy
from henonlab.experiments import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=1024)
    ap.add_argument("--s", type=float, nargs="+", default=[0.5, 0.7, 0.9, 0.95, 0.99])
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    target = 16 * math.pi / 5
    mesh = RadialMesh(args.M, 3)
    u = DiscreteField.from_function(mesh, lambda r: 1.0 - r * r)
    rows = []
    for s in args.s:
        kt = build_kernel_table(ProblemSpec(3, s, 2.0, 3.0, beta=1.0), mesh)
        e = gagliardo_energy(u, kt)
        rows.append((s, e, e / target - 1.0))
        print(f"s = {s:<5g} energy = {e:.6f}  relative gap = {e / target - 1:+.3%}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / f"bbm_limit_M{args.M}.csv", ("s", "energy", "relative_gap"), rows)


if __name__ == "__main__":
    main()
