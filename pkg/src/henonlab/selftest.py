"""Quick invariant checks behind the ``check`` subcommand.

The double-sum check recomputes the nodal sum with an oracle that shares no
code with the kernel tables: for n = 3 the sphere integral of |r e_1 - rho sigma|^{-3-sp} is
elementary,

    k(r, rho) = 2 pi / ((1 + sp) r rho) * (|r - rho|^{-1-sp} - (r + rho)^{-1-sp}),

and every cell-pair integral is evaluated with QUADPACK.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .discretization import EnergyModel, functional_J, gradient_J, pairing
from .kernel import angular_kernel, angular_kernel_closed, build_kernel_table, tail_weight, tail_weight_closed
from .mesh import DiscreteField, RadialMesh
from .problem import ProblemSpec


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.value:.3e} (tol {self.tolerance:.0e})"


# ---------------------------------------------------------------------------
# n = 3 elementary oracle


def k3(sp: float, r, rho):
    r = np.asarray(r, float)
    rho = np.asarray(rho, float)
    return 2.0 * np.pi / ((1.0 + sp) * r * rho) * (np.abs(r - rho) ** (-1.0 - sp) - (r + rho) ** (-1.0 - sp))


def tail3(sp: float, r: float) -> float:
    """int_1^inf rho^2 k3(r, rho) d rho by adaptive quadrature."""
    if r == 0.0:
        return 4.0 * np.pi / sp
    f = lambda rho: rho * rho * 2.0 * np.pi / ((1.0 + sp) * r * rho) * ((rho - r) ** (-1.0 - sp) - (rho + r) ** (-1.0 - sp))
    a, _ = integrate.quad(f, 1.0, 2.0, epsabs=0, epsrel=1e-10, limit=200)
    b, _ = integrate.quad(f, 2.0, np.inf, epsabs=0, epsrel=1e-10, limit=200)
    return a + b


def _quad_w(f, a, b, r, wvar, sing):
    if b <= a:
        return 0.0
    if wvar is not None:
        return integrate.quad(f, a, b, args=(r,), weight="alg", wvar=wvar, epsabs=0, epsrel=1e-11, limit=200)[0]
    return integrate.quad(lambda x: f(x, r) * sing(x), a, b, epsabs=0, epsrel=1e-11, limit=200)[0]


def _cell_pair(sp, p, a1, b1, a2, b2, gauss):
    """int_{[a1,b1]} int_{[a2,b2]} 4 pi r^2 rho^2 k3(r, rho) |r - rho|^p."""

    gam = p - 1.0 - sp

    def smooth(rho, r):
        # density / |r - rho|^gam, bounded on the diagonal
        return 8.0 * np.pi**2 / (1.0 + sp) * r * rho * (1.0 - (abs(r - rho) / (r + rho)) ** (1.0 + sp))

    overlap = min(b1, b2) - max(a1, a2) > -1e-15
    if not overlap:
        t, w = np.polynomial.legendre.leggauss(gauss)
        x = a1 + (b1 - a1) * (t + 1) / 2
        y = a2 + (b2 - a2) * (t + 1) / 2
        X, Y = np.meshgrid(x, y, indexing="ij")
        d = np.abs(X - Y)
        vals = 8.0 * np.pi**2 / (1.0 + sp) * X * Y * (d ** (p - 1.0 - sp) - d**p * (X + Y) ** (-1.0 - sp))
        return float(np.sum(np.outer(w, w) * vals) * (b1 - a1) * (b2 - a2) / 4)

    def inner(r):
        val = 0.0
        if a2 < r:  # rho below r: weight (r - rho)^gam at the right end
            hi = min(r, b2)
            wv = (0.0, gam) if hi == r else None
            val += _quad_w(smooth, a2, hi, r, wv, lambda rho: abs(r - rho) ** gam)
        if r < b2:  # rho above r: weight (rho - r)^gam at the left end
            lo = max(r, a2)
            wv = (gam, 0.0) if lo == r else None
            val += _quad_w(smooth, lo, b2, r, wv, lambda rho: abs(r - rho) ** gam)
        return val

    pts = [x for x in (a2, b2) if a1 < x < b1]
    return integrate.quad(inner, a1, b1, points=pts or None, epsabs=0, epsrel=1e-10, limit=200)[0]


def oracle_discrete_energy(nodes, values, s: float, p: float, gauss: int = 24) -> float:
    """Dense evaluation of the nodal double sum for n = 3.

    Pair weights are dual-cell integrals of 4 pi r^2 rho^2 k |r - rho|^p divided by
    |r_i - r_j|^p; a cell's self-integral is charged to the mean of its one-sided
    difference quotients; exterior weights are cell integrals of 4 pi r^2 T(r).
    """
    sp = s * p
    r = np.asarray(nodes, float)
    u = np.asarray(values, float)
    M = len(r) - 1
    e = np.concatenate(([0.0], 0.5 * (r[:-1] + r[1:]), [1.0]))
    h = np.diff(r)
    total = 0.0
    for i in range(M + 1):
        for j in range(i + 1, M + 1):
            I = _cell_pair(sp, p, e[i], e[i + 1], e[j], e[j + 1], gauss)
            total += 2.0 * I * abs(u[i] - u[j]) ** p / abs(r[i] - r[j]) ** p
        S = _cell_pair(sp, p, e[i], e[i + 1], e[i], e[i + 1], gauss)
        if i == 0:
            grad = abs(u[1] - u[0]) ** p / h[0] ** p
        elif i == M:
            grad = abs(u[M] - u[M - 1]) ** p / h[M - 1] ** p
        else:
            grad = 0.5 * (abs(u[i] - u[i - 1]) ** p / h[i - 1] ** p + abs(u[i + 1] - u[i]) ** p / h[i] ** p)
        total += S * grad
    for i in range(M):
        tau, _ = integrate.quad(lambda x: 4.0 * np.pi * x * x * tail3(sp, x), e[i], e[i + 1], epsrel=1e-10)
        total += 2.0 * tau * abs(u[i]) ** p
    return total


# ---------------------------------------------------------------------------
# checks


def check_gradient(M=32, trials=5, seed=0, p=2.0, n=3, eps=0.0) -> CheckResult:
    spec = ProblemSpec(n, 0.5, p, p + 1.0 if p > 2 else 3.0, alpha=1.0, beta=0.5)
    kt = build_kernel_table(spec, RadialMesh(M, n))
    rng = np.random.default_rng(seed)
    worst = 0.0
    h = 1e-5
    for _ in range(trials):
        u = DiscreteField(kt.mesh, rng.uniform(0.2, 1.5, M + 1))
        v = DiscreteField(kt.mesh, rng.normal(size=M + 1))
        g = pairing(gradient_J(u, spec, kt, eps), v)
        fd = (functional_J(u + h * v, spec, kt).J - functional_J(u - h * v, spec, kt).J) / (2 * h)
        worst = max(worst, abs(g - fd) / max(abs(fd), 1e-300))
    return CheckResult(f"gradient vs central differences (p={p:g})", worst, 1e-6 if p == 2 else 1e-4)


def check_double_sum(M=8, s=0.5, p=2.0) -> CheckResult:
    spec = ProblemSpec(3, s, p, 3.0, beta=1.0)
    kt = build_kernel_table(spec, RadialMesh(M, 3))
    worst = 0.0
    for j in range(0, M, max(1, M // 4)):
        e = np.zeros(M + 1)
        e[j] = 1.0
        if j == M // 2:
            e = 1.0 - kt.mesh.nodes**2
        ref = oracle_discrete_energy(kt.mesh.nodes, e, s, p)
        worst = max(worst, abs(kt.raw_energy(e) - ref) / ref)
    return CheckResult(f"double sum vs n=3 elementary oracle (M={M})", worst, 1e-3)


def check_kernel_routes() -> CheckResult:
    spec = ProblemSpec(3, 0.5, 2.0, 3.0, beta=1.0)
    worst = 0.0
    for r, rho in ((0.2, 0.5), (0.7, 0.3), (0.5, 0.51), (0.1, 2.0)):
        a = angular_kernel(3, 4.0, r, rho)
        worst = max(worst, abs(float(angular_kernel_closed(3, 1.0, r, rho)) - a) / a)
        worst = max(worst, abs(float(k3(1.0, r, rho)) - a) / a)
    for r in (0.0, 0.3, 0.8):
        a = tail_weight(spec, r)
        worst = max(worst, abs(float(tail_weight_closed(spec, r)) - a) / a)
    return CheckResult("kernel closed forms vs quadrature", worst, 1e-8)


def check_homogeneity(M=32, seed=1) -> CheckResult:
    spec = ProblemSpec(3, 0.5, 2.0, 3.5, alpha=1.0, beta=0.5)
    kt = build_kernel_table(spec, RadialMesh(M, 3))
    m = EnergyModel(spec, kt)
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.1, 1.0, M + 1)
    u[-1] = 0.0
    worst = 0.0
    for t in (0.3, 2.0, 7.5):
        worst = max(worst, abs(m.Z(t * u) - t**2 * m.Z(u)) / (t**2 * m.Z(u)))
        worst = max(worst, abs(m.henon(t * u) - t**3.5 * m.henon(u)) / (t**3.5 * m.henon(u)))
        R = lambda x: m.Z(x) / m.henon(x) ** (2.0 / 3.5)
        worst = max(worst, abs(R(t * u) - R(u)) / R(u))
    return CheckResult("homogeneity of Z, N and invariance of R", worst, 1e-12)


def run_all() -> list[CheckResult]:
    return [
        check_gradient(),
        check_gradient(p=3.0, n=4, eps=1e-8),
        check_double_sum(),
        check_kernel_routes(),
        check_homogeneity(),
    ]


if __name__ == "__main__":  # pragma: no cover
    for res in run_all():
        print(res.line())
