#!/usr/bin/env python3
"""Sign of the second-variation gap along alpha and the first crossing alpha*_gap."""
import argparse
import json
from pathlib import Path

from henonlab import ProblemSpec, find_alpha_star


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--beta", type=float, default=0.25)
    ap.add_argument("--q", type=float, default=3.0)
    ap.add_argument("--alpha-max", type=float, default=50.0)
    ap.add_argument("--tol", type=float, default=1e-3)
    ap.add_argument("--M", type=int, default=256)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    template = ProblemSpec(3, args.s, 2.0, args.q, beta=args.beta, normalization="dominated")
    sweep = find_alpha_star(template, (0.0, args.alpha_max), tol=args.tol, M=args.M, threads=args.threads)
    for rep in sorted(sweep.reports, key=lambda r: r.alpha):
        if rep.alpha in sweep.scan_alphas:
            print(f"alpha = {rep.alpha:6.2f}  gap = {rep.gap:+12.5g}  hardy(Z=1) = {rep.hardy_Z1:.5g}")
    print(f"alpha*_gap = {sweep.alpha_star_gap:.5f}  decay monotone: {sweep.decay_monotone}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tag = template.spec_hash()
    sweep.write_csv(out / f"symmetry_{tag}.csv")
    (out / f"symmetry_{tag}.json").write_text(json.dumps(sweep.as_dict(), indent=2, default=float) + "\n")


if __name__ == "__main__":
    main()
