"""Reference computations that share no code with the package.

* Monte-Carlo estimates of sphere and exterior integrals.
* A dense evaluation of the nodal Gagliardo sum for n = 3, built from
  closed-form inner integrals of the elementary n = 3 angular kernel.
* A grid-search minimizer of the Rayleigh quotient over a few radial profiles.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate


def sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def _uniform_sphere(rng, n, size):
    x = rng.standard_normal((size, n))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def mc_sphere_kernel(n, sigma_exp, r, rho, samples=10**6, seed=0):
    """int_{S^{n-1}} |r e_1 - rho sigma|^{-sigma_exp} d sigma."""
    sig = _uniform_sphere(np.random.default_rng(seed), n, samples)
    d2 = r * r + rho * rho - 2.0 * r * rho * sig[:, 0]
    return sphere_area(n) * float(np.mean(d2 ** (-sigma_exp / 2)))


def mc_sphere_moment(n, p, samples=10**6, seed=0):
    """int_{S^{n-1}} |sigma_1|^p d sigma."""
    sig = _uniform_sphere(np.random.default_rng(seed), n, samples)
    return sphere_area(n) * float(np.mean(np.abs(sig[:, 0]) ** p))


def mc_exterior(n, sp, r, samples=10**6, seed=0):
    """int_{|y| > 1} |x - y|^{-n-sp} dy for |x| = r, Pareto importance sampling.

    |y| is drawn with density sp * rho^{-1-sp} on (1, inf), so the weight
    |S| rho^{n-1} / density tends to a constant times |x - y|^{n+sp} at infinity.
    """
    rng = np.random.default_rng(seed)
    rho = rng.random(samples) ** (-1.0 / sp)
    sig = _uniform_sphere(rng, n, samples)
    d2 = r * r + rho * rho - 2.0 * r * rho * sig[:, 0]
    weight = sphere_area(n) * rho ** (n + sp) / sp
    return float(np.mean(weight * d2 ** (-(n + sp) / 2)))


# ---------------------------------------------------------------------------
# n = 3 dense nodal sum


def tail3(sp, r):
    """int_1^inf rho^2 k(r, rho) d rho in closed form for n = 3."""
    if r == 0.0:
        return 4.0 * math.pi / sp
    if abs(sp - 1.0) < 1e-14:
        I = math.log((1 + r) / (1 - r)) + r / (1 - r) + r / (1 + r)
    else:
        a, b = 1.0 - r, 1.0 + r
        I = (a ** (1 - sp) - b ** (1 - sp)) / (sp - 1) + r * (a ** (-sp) + b ** (-sp)) / sp
    return 2.0 * math.pi / ((1.0 + sp) * r) * I


def _moment(r, a, b, g):
    """int_a^b rho |r - rho|^g d rho, exact."""

    def above(t):  # rho = r + t
        return r * t ** (g + 1) / (g + 1) + t ** (g + 2) / (g + 2)

    def below(t):  # rho = r - t
        return r * t ** (g + 1) / (g + 1) - t ** (g + 2) / (g + 2)

    val = 0.0
    if a < r:
        hi = min(b, r)
        val += below(r - a) - below(r - hi)
    if b > r:
        lo = max(a, r)
        val += above(b - r) - above(lo - r)
    return val


def _inner(r, a, b, sp, p):
    """int_a^b rho (|r-rho|^{p-1-sp} - |r-rho|^p (r+rho)^{-1-sp}) d rho."""
    smooth = lambda rho: rho * abs(r - rho) ** p * (r + rho) ** (-1.0 - sp)
    pts = [r] if a < r < b else None
    rem = integrate.quad(smooth, a, b, points=pts, epsabs=0, epsrel=1e-12, limit=200)[0]
    return _moment(r, a, b, p - 1.0 - sp) - rem


def cell_pair_integral(sp, p, A, B):
    """int_A int_B 4 pi r^2 rho^2 k(r, rho) |r - rho|^p d rho d r, n = 3."""
    a, b = A
    pts = [x for x in B if a < x < b] or None
    f = lambda r: r * _inner(r, B[0], B[1], sp, p)
    val = integrate.quad(f, a, b, points=pts, epsabs=0, epsrel=1e-11, limit=200)[0]
    return 8.0 * math.pi**2 / (1.0 + sp) * val


class DenseNodalOracle:
    """Pair, self and exterior weights of the nodal sum on given n = 3 nodes."""

    def __init__(self, nodes, s, p):
        self.r = np.asarray(nodes, float)
        self.p = p
        sp = s * p
        M = len(self.r) - 1
        e = np.concatenate(([0.0], 0.5 * (self.r[:-1] + self.r[1:]), [1.0]))
        cells = list(zip(e[:-1], e[1:]))
        self.pair = np.zeros((M + 1, M + 1))
        for i in range(M + 1):
            for j in range(i, M + 1):
                self.pair[i, j] = self.pair[j, i] = cell_pair_integral(sp, p, cells[i], cells[j])
        self.ext = np.array(
            [integrate.quad(lambda x: 4 * math.pi * x * x * tail3(sp, x), a, b, epsrel=1e-11)[0] for a, b in cells[:-1]]
            + [0.0]
        )

    def energy(self, u):
        u = np.asarray(u, float)
        r, p = self.r, self.p
        M = len(r) - 1
        total = 0.0
        for i in range(M + 1):
            for j in range(M + 1):
                if i != j:
                    total += self.pair[i, j] * abs(u[i] - u[j]) ** p / abs(r[i] - r[j]) ** p
        q = np.abs(np.diff(u)) ** p / np.diff(r) ** p
        for i in range(M + 1):
            if i == 0:
                g = q[0]
            elif i == M:
                g = q[-1]
            else:
                g = 0.5 * (q[i - 1] + q[i])
            total += self.pair[i, i] * g
        return total + 2.0 * float(np.dot(self.ext, np.abs(u) ** p))


# ---------------------------------------------------------------------------
# Rayleigh quotient by grid search


def grid_search_min(quotient, dim, span=2.0, points=9, rounds=12, shrink=0.45):
    """Minimize quotient(c) over c in R^dim with c_0 = 1 by zooming grids."""
    center = np.zeros(dim - 1)
    width = span
    best = quotient(np.concatenate(([1.0], center)))
    for _ in range(rounds):
        axes = [np.linspace(c - width, c + width, points) for c in center]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim - 1)
        coeffs = np.hstack([np.ones((len(grid), 1)), grid])
        vals = quotient(coeffs)
        k = int(np.nanargmin(vals))
        if vals[k] < best:
            best, center = float(vals[k]), grid[k]
        width *= shrink
    return best, np.concatenate(([1.0], center))
