"""Acceptance criteria 1-10, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import sys
import time
from functools import lru_cache
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))

from acceptance_log import record  # noqa: E402
from oracles import DenseNodalOracle, mc_exterior, mc_sphere_kernel  # noqa: E402

from henonlab import (  # noqa: E402
    DiscreteField,
    ProblemSpec,
    RadialMesh,
    SolverOptions,
    angular_kernel,
    build_kernel_table,
    classify_regime,
    critical_exponent,
    find_alpha_star,
    functional_J,
    gagliardo_energy,
    gradient_J,
    henon_critical_exponent,
    minimize_rayleigh,
    pairing,
    rescale_to_solution,
    scaling_diagnostic,
    stability_sweep,
    stampacchia_diagnostic,
    strauss_check,
    tail_weight,
)
from henonlab.experiments import henon_source  # noqa: E402
from henonlab.solver import relative_residual  # noqa: E402

CRIT4 = ProblemSpec(3, 0.5, 2.0, 4.0, alpha=1.0, beta=0.5)


@lru_cache(maxsize=None)
def crit4_solution(M=256):
    kt = build_kernel_table(CRIT4, RadialMesh(M, 3))
    gs = minimize_rayleigh(CRIT4, kt)
    return gs, kt


def _fd_gradient_error(spec, M, fields, eps, seed):
    kt = build_kernel_table(spec, RadialMesh(M, spec.n))
    rng = np.random.default_rng(seed)
    h = 1e-5
    worst = 0.0
    for _ in range(fields):
        vals = rng.uniform(0.1, 1.5, M + 1)
        u = DiscreteField(kt.mesh, vals)
        v = DiscreteField(kt.mesh, rng.normal(size=M + 1))
        g = pairing(gradient_J(u, spec, kt, eps), v)
        fd = (functional_J(u + v * h, spec, kt).J - functional_J(u - v * h, spec, kt).J) / (2 * h)
        worst = max(worst, abs(g - fd) / abs(fd))
    return worst


def test_c01_gradient_consistency():
    t0 = time.perf_counter()
    e2 = _fd_gradient_error(ProblemSpec(3, 0.5, 2.0, 3.0, alpha=1.0, beta=0.5), 64, 20, 0.0, 1)
    # p = 3 needs n > p for the mixed operator, and q > p
    e3 = _fd_gradient_error(ProblemSpec(4, 0.5, 3.0, 4.0, alpha=1.0, beta=0.5), 64, 20, 1e-8, 2)
    dt = time.perf_counter() - t0
    ok = e2 <= 1e-6 and e3 <= 1e-4 and dt < 30
    record(1, "gradient consistency", ok, f"p=2 err {e2:.2e} (<=1e-6), p=3 err {e3:.2e} (<=1e-4), {dt:.1f}s")
    assert ok


def test_c02_oracle_equivalence():
    t0 = time.perf_counter()
    s, p, M = 0.5, 2.0, 16
    spec = ProblemSpec(3, s, p, 3.0, beta=1.0)
    kt = build_kernel_table(spec, RadialMesh(M, 3))
    oracle = DenseNodalOracle(kt.mesh.nodes, s, p)
    worst = 0.0
    for j in range(M):
        e = np.zeros(M + 1)
        e[j] = 1.0
        ref = kt.constant * oracle.energy(e)
        got = gagliardo_energy(DiscreteField(kt.mesh, e), kt)
        worst = max(worst, abs(got - ref) / ref)
    k_ref = mc_sphere_kernel(3, 3 + s * p, 0.3, 0.7, samples=10**6, seed=11)
    k_err = abs(angular_kernel(3, 3 + s * p, 0.3, 0.7) - k_ref) / k_ref
    t_ref = mc_exterior(3, s * p, 0.5, samples=10**6, seed=12)
    t_err = abs(tail_weight(spec, 0.5) - t_ref) / t_ref
    dt = time.perf_counter() - t0
    ok = worst <= 1e-3 and k_err <= 1e-2 and t_err <= 1e-2 and dt < 120
    record(2, "oracle equivalence", ok,
           f"hats {worst:.2e} (<=1e-3), kernel MC {k_err:.2e}, tail MC {t_err:.2e} (<=1e-2), {dt:.1f}s")
    assert ok


def test_c03_bbm_limit():
    t0 = time.perf_counter()
    target = 16 * math.pi / 5
    mesh = RadialMesh(1024, 3)
    u = DiscreteField.from_function(mesh, lambda r: 1.0 - r * r)
    values = []
    for s in (0.9, 0.95, 0.99):
        kt = build_kernel_table(ProblemSpec(3, s, 2.0, 3.0, beta=1.0), mesh)
        values.append(gagliardo_energy(u, kt))
    gaps = [abs(v - target) for v in values]
    rel = gaps[-1] / target
    monotone = gaps[0] > gaps[1] > gaps[2]
    dt = time.perf_counter() - t0
    ok = rel <= 0.05 and monotone and dt < 300
    record(3, "BBM limit", ok,
           f"E(0.9,0.95,0.99) = {values[0]:.4f}, {values[1]:.4f}, {values[2]:.4f}; "
           f"s=0.99 off 16pi/5 by {rel:.2%} (<=5%), monotone={monotone}, {dt:.1f}s")
    assert ok


def test_c04_existence():
    t0 = time.perf_counter()
    gs0, kt = crit4_solution()
    r = kt.mesh.nodes
    Rs, res, nonneg, cert = [], [], True, []
    for seed in range(5):
        rng = np.random.default_rng(100 + seed)
        shape = (1.0 - r**2) ** rng.uniform(0.5, 2.0) * rng.uniform(0.5, 1.5, r.size)
        init = DiscreteField(kt.mesh, shape)
        gs = minimize_rayleigh(CRIT4, kt, init, SolverOptions(seed=seed))
        Rs.append(gs.R)
        res.append(gs.residual_rel)
        nonneg &= bool(np.all(gs.field.values >= 0))
        sol = rescale_to_solution(gs, CRIT4, kt)
        cert.append(relative_residual(sol, CRIT4, kt))
    spread = max(Rs) / min(Rs) - 1
    dt = time.perf_counter() - t0
    ok = spread <= 0.01 and max(res) <= 1e-6 and nonneg and max(cert) <= 1e-6 and dt < 300
    record(4, "existence regime", ok,
           f"R in [{min(Rs):.6f}, {max(Rs):.6f}] spread {spread:.1e} (<=1%), max residual {max(res):.1e}, "
           f"rescaled residual {max(cert):.1e} (<=1e-6), nonneg={nonneg}, {dt:.1f}s")
    assert ok


def test_c05_nonexistence_scaling():
    t0 = time.perf_counter()
    spec = CRIT4.replace(q=10.0)
    kt = build_kernel_table(spec, RadialMesh(256, 3))
    u = DiscreteField.from_function(kt.mesh, lambda r: 1.0 - r * r)
    rep = scaling_diagnostic(u, spec, kt, (1, 2, 4, 8))
    rel = abs(rep.fitted_slope / rep.analytic_slope - 1)
    dt = time.perf_counter() - t0
    ok = rep.supercritical and rep.fitted_slope < 0 and rel <= 0.1 and rep.R_decreasing and dt < 120
    record(5, "non-existence scaling", ok,
           f"fitted {rep.fitted_slope:.4f} vs analytic {rep.analytic_slope:.4f} ({rel:.1%}, <=10%), "
           f"R {rep.R_values[0]:.3f} -> {rep.R_values[-1]:.3f}, {dt:.1f}s")
    assert ok


def test_c06_stability():
    t0 = time.perf_counter()
    spec = ProblemSpec(3, 0.5, 2.0, 3.0, alpha=1.0, beta=0.5)
    rep = stability_sweep(spec, [0.5, 0.7, 0.9, 0.99], M=256)
    d = rep.distances
    factor = d[0] / d[-1]
    bounded = bool(np.all(np.isfinite(rep.norms))) and max(rep.norms) <= 2.0 * min(rep.norms)
    dt = time.perf_counter() - t0
    ok = rep.distances_decreasing and factor >= 2 and bounded and not rep.failures and dt < 900
    record(6, "s -> 1 stability", ok,
           "distances " + ", ".join(f"{x:.4g}" for x in d)
           + f"; d(0.5)/d(0.99) = {factor:.1f} (>=2), norms in [{min(rep.norms):.3g}, {max(rep.norms):.3g}], {dt:.1f}s")
    assert ok


def test_c07_symmetry_breaking():
    t0 = time.perf_counter()
    template = ProblemSpec(3, 0.5, 2.0, 3.0, beta=0.25, normalization="dominated")
    sweep = find_alpha_star(template, (0.0, 50.0), tol=1e-3, M=256)
    reps = sorted(sweep.reports, key=lambda r: r.alpha)
    gap0 = reps[0].gap
    neg = min(r.gap for r in reps)
    decay = all(sweep.decay_monotone.values())
    dt = time.perf_counter() - t0
    ok = (gap0 > 0 and neg < 0 and sweep.alpha_star_gap is not None and math.isfinite(sweep.alpha_star_gap)
          and decay and dt < 1200)
    record(7, "symmetry breaking", ok,
           f"gap(0) = {gap0:.4g}, min gap = {neg:.4g}, alpha*_gap = {sweep.alpha_star_gap:.4f}, "
           f"decay {sweep.decay_monotone}, {dt:.1f}s")
    assert ok


def test_c08_stampacchia():
    t0 = time.perf_counter()
    gs, kt = crit4_solution()
    u = gs.solution
    rep = stampacchia_diagnostic(u, henon_source(u, CRIT4), CRIT4, 2.0)
    dt = time.perf_counter() - t0
    ok = rep.U_nonincreasing and rep.U_vanishes and rep.gamma_fit > 1 and rep.bound_holds and dt < 60
    record(8, "Stampacchia iteration", ok,
           f"U_k nonincreasing={rep.U_nonincreasing}, vanishes={rep.U_vanishes}, gamma_fit {rep.gamma_fit:.3f} (>1), "
           f"bound {rep.bound:.4g} >= max {rep.max_u:.4g}: {rep.bound_holds}, {dt:.1f}s")
    assert ok


def test_c09_strauss_decay():
    t0 = time.perf_counter()
    beta1 = ProblemSpec(3, 0.5, 2.0, 3.5, alpha=1.0, beta=1.0)
    out = {}
    for label, spec in (("mixed", CRIT4), ("beta=1", beta1)):
        C, gam = [], None
        for M in (128, 256, 512):
            kt = build_kernel_table(spec, RadialMesh(M, 3))
            gs = minimize_rayleigh(spec, kt)
            rep = strauss_check(gs.solution, spec, kt)
            C.append(rep.C_observed)
            gam = rep.gamma_used
        out[label] = (C, gam)
    spreads = {k: max(C) / min(C) - 1 for k, (C, _) in out.items()}
    finite = all(np.all(np.isfinite(C)) for C, _ in out.values())
    gam_ok = math.isclose(out["mixed"][1], 0.5) and math.isclose(out["beta=1"][1], 1.0)
    dt = time.perf_counter() - t0
    ok = finite and gam_ok and max(spreads.values()) <= 0.2 and dt < 300
    record(9, "Strauss decay", ok,
           "; ".join(f"{k}: gamma {g:g}, C = " + ", ".join(f"{c:.4f}" for c in C) + f" (spread {spreads[k]:.1%})"
                     for k, (C, g) in out.items()) + f" (<=20%), {dt:.1f}s")
    assert ok


def test_c10_exponent_table():
    t0 = time.perf_counter()
    cases = [
        (critical_exponent(ProblemSpec(3, 0.5, 2.0, 3.0, beta=0.0)), 6.0),
        (critical_exponent(ProblemSpec(3, 0.5, 2.0, 3.0, beta=1.0)), 3.0),
        (critical_exponent(ProblemSpec(4, 0.5, 2.0, 3.0, beta=0.5)), 4.0),
        (henon_critical_exponent(ProblemSpec(3, 0.5, 2.0, 3.0, alpha=1.0, beta=0.5)), 8.0),
        (henon_critical_exponent(ProblemSpec(3, 0.5, 2.0, 3.0, alpha=1.0, beta=1.0)), 4.0),
        (henon_critical_exponent(ProblemSpec(3, 0.5, 2.0, 3.0, alpha=0.0, beta=0.0)), 6.0),
        (classify_regime(ProblemSpec(6, 0.5, 2.0, 5.0, beta=0.0)).alpha_boundedness_threshold, 6.0),
        (classify_regime(ProblemSpec(3, 0.5, 2.0, 4.0, beta=1.0)).s_boundedness_bound, 0.9),
        (classify_regime(ProblemSpec(3, 0.5, 2.0, 4.0, alpha=0.4, beta=1.0)).embedding_r_bound, 5.0),
    ]
    bad = [(got, want) for got, want in cases if not math.isclose(got, want, rel_tol=1e-12, abs_tol=0)]
    dt = time.perf_counter() - t0
    ok = not bad and dt < 1
    record(10, "exponent arithmetic", ok, f"{len(cases) - len(bad)}/{len(cases)} examples reproduced, {dt * 1e3:.1f} ms")
    assert ok


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted((k, v) for k, v in dict(globals()).items() if k.startswith("test_c")):
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
