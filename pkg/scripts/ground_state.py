#!/usr/bin/env python3
"""Ground state of the mixed Henon problem plus its decay and boundedness diagnostics."""
import argparse
import json
from pathlib import Path

from henonlab import (
    ProblemSpec,
    RadialMesh,
    SolverOptions,
    build_kernel_table,
    minimize_rayleigh,
    stampacchia_diagnostic,
    strauss_check,
)
from henonlab.experiments import henon_source, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--s", type=float, default=0.5)
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=4.0)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--M", type=int, default=256)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    spec = ProblemSpec(args.n, args.s, args.p, args.q, alpha=args.alpha, beta=args.beta)
    kt = build_kernel_table(spec, RadialMesh(args.M, args.n))
    runs = [minimize_rayleigh(spec, kt, opts=SolverOptions(seed=k, noise=0.2)) for k in range(args.seeds)]
    for k, gs in enumerate(runs):
        print(f"seed {k}: R = {gs.R:.10f}  residual_rel = {gs.residual_rel:.2e}  iterations = {gs.iterations}")
    gs = runs[0]
    u = gs.solution
    strauss = strauss_check(u, spec, kt)
    summary = {"spec": spec.as_dict(), "ground_state": gs.summary(), "strauss": strauss.as_dict()}
    if spec.beta < 1.0:
        st = stampacchia_diagnostic(u, henon_source(u, spec), spec, r_exp=2.0)
        summary["stampacchia"] = st.as_dict()
        print(f"Stampacchia: gamma_fit = {st.gamma_fit:.3f}, bound holds = {st.bound_holds}")
    print(f"Strauss: C = {strauss.C_observed:.5f} at r = {strauss.argmax_r:.3f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tag = spec.spec_hash()
    write_csv(out / f"ground_state_{tag}.csv", ("r", "u"), zip(u.mesh.nodes, u.values))
    gs.write_trace(out / f"trace_{tag}.csv")
    (out / f"ground_state_{tag}.json").write_text(json.dumps(summary, indent=2, default=float) + "\n")


if __name__ == "__main__":
    main()
