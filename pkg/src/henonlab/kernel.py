"""Gagliardo normalization constants and the radially reduced nonlocal kernel.

For radial x = r e_1 and |y| = rho the n-dimensional kernel |x - y|^{-(n+sp)}
integrated over the sphere of radius rho gives rho^{n-1} k(r, rho) with

    k(r, rho) = |S^{n-2}| int_0^pi (r^2 + rho^2 - 2 r rho cos t)^{-(n+sp)/2} sin^{n-2} t dt.

Two routes are provided for every kernel quantity: adaptive quadrature
(``angular_kernel``, ``tail_weight``) and hypergeometric closed forms
(``angular_kernel_closed``, ``tail_weight_closed``).  Tables are assembled
from the closed forms; the quadrature routes serve as references.
"""
from __future__ import annotations

import hashlib
import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate
from scipy.special import gamma, hyp2f1, jv, roots_jacobi

from .errors import DomainError, SingularDiagonal
from .mesh import RadialMesh, sphere_area
from .problem import ProblemSpec

log = logging.getLogger(__name__)

CACHE_ENV = "HENON_CACHE_DIR"


def _check_nps(n, p, s):
    if n < 2 or p <= 1 or not 0 < s < 1:
        raise DomainError(f"need n >= 2, p > 1, 0 < s < 1 (got n={n}, p={p}, s={s})")


def sphere_moment(n: int, p: float) -> float:
    """int_{S^{n-1}} |sigma . e_1|^p d sigma."""
    return 2.0 * np.pi ** ((n - 1) / 2.0) * gamma((p + 1) / 2.0) / gamma((n + p) / 2.0)


def bbm_constant(n: int, p: float, s: float) -> float:
    """K(n, s, p) with K^p = p (1 - s) / int_{S^{n-1}} |sigma_1|^p.

    With this choice K^p times the Gagliardo double integral tends to the
    gradient energy as s -> 1.
    """
    _check_nps(n, p, s)
    return (p * (1.0 - s) / sphere_moment(n, p)) ** (1.0 / p)


@lru_cache(maxsize=None)
def first_radial_eigenvalue(n: int, p: float) -> float:
    """First Dirichlet eigenvalue of the p-Laplacian on the unit ball of R^n."""
    if p == 2.0:
        nu = n / 2.0 - 1.0
        # first positive zero of J_nu, bracketed between nu and nu + pi + 2
        from scipy.optimize import brentq

        lo = max(nu, 1e-3)
        grid = np.linspace(lo, nu + np.pi + 3.0, 400)
        vals = jv(nu, grid)
        k = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
        return brentq(lambda x: jv(nu, x), grid[k], grid[k + 1], xtol=1e-15) ** 2

    # shooting with lambda = 1: flux w = r^{n-1}|u'|^{p-2}u', zero at R1
    def rhs(r, y):
        u, w = y
        du = -np.abs(w / r ** (n - 1)) ** (1.0 / (p - 1.0)) * (w < 0) + np.abs(
            w / r ** (n - 1)
        ) ** (1.0 / (p - 1.0)) * (w > 0)
        dw = -(r ** (n - 1)) * np.abs(u) ** (p - 2.0) * u
        return [du, dw]

    def hit_zero(r, y):
        return y[0]

    hit_zero.terminal = True
    hit_zero.direction = -1
    r0 = 1e-6
    sol = integrate.solve_ivp(
        rhs, (r0, 100.0), [1.0, -(r0**n) / n], events=hit_zero, rtol=1e-11, atol=1e-14
    )
    R1 = float(sol.t_events[0][0])
    return R1**p


def poincare_constant(n: int, p: float) -> float:
    """Smallest C_P with ||u||_p <= C_P ||grad u||_p on W_0^{1,p} of the unit ball."""
    return first_radial_eigenvalue(n, p) ** (-1.0 / p)


def dominated_constant(n: int, p: float, s: float) -> float:
    """Constant C making C * (double integral) <= ||grad u||_p^p on the unit ball."""
    _check_nps(n, p, s)
    omega = sphere_area(n) / n
    cp = poincare_constant(n, p)
    bracket = (n * omega / p) * (1.0 / (1.0 - s) + 2.0**p * cp**p / s)
    return 1.0 / bracket


def normalization_constant(spec: ProblemSpec) -> float:
    """Multiplier of the double integral in [u]_{s,p}^p for the normalization chosen in ``spec``."""
    if spec.normalization == "bbm":
        return bbm_constant(spec.n, spec.p, spec.s) ** spec.p
    return dominated_constant(spec.n, spec.p, spec.s)


# ---------------------------------------------------------------------------
# pointwise kernel


def angular_kernel(n: int, sigma_exp: float, r: float, rho: float, epsrel: float = 1e-11) -> float:
    """Integral over the unit sphere of |r e_1 - rho sigma|^{-sigma_exp}, by adaptive quadrature."""
    if r < 0 or rho < 0 or (r == 0 and rho == 0):
        raise DomainError("need r, rho >= 0, not both zero")
    if r == rho:
        raise SingularDiagonal("angular kernel is singular on r == rho")
    a, b = r * r + rho * rho, 2.0 * r * rho
    half = sigma_exp / 2.0
    if b == 0.0:
        return sphere_area(n) * a ** (-half)
    wn2 = sphere_area(n - 1) if n > 2 else 2.0

    def f(t):
        return (a - b * np.cos(t)) ** (-half) * np.sin(t) ** (n - 2)

    # the integrand peaks in a window of width ~ |r - rho| / sqrt(r rho) at t = 0
    t0 = min(abs(r - rho) / np.sqrt(r * rho), np.pi / 4)
    pts = [x for x in (t0, 4 * t0, 16 * t0) if x < np.pi]
    val, _ = integrate.quad(f, 0.0, np.pi, points=pts, epsrel=epsrel, epsabs=0.0, limit=400)
    return wn2 * val


def _regular_factor(n, sp, T):
    """2F1(-sp/2, (n-sp)/2 - 1; n/2; T), bounded on [0, 1]."""
    return hyp2f1(-sp / 2.0, (n - sp) / 2.0 - 1.0, n / 2.0, T)


def angular_kernel_closed(n: int, sp: float, r, rho):
    """Vectorized closed form of ``angular_kernel(n, n + sp, r, rho)``.

    k = |S^{n-1}| R^{2+sp-n} (R + m)^{-1-sp} |R - m|^{-1-sp} F((m/R)^2)
    with R = max(r, rho), m = min(r, rho) and F the regular hypergeometric factor.
    """
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    R = np.maximum(r, rho)
    m = np.minimum(r, rho)
    with np.errstate(divide="ignore", invalid="ignore"):
        T = (m / R) ** 2
        val = (
            sphere_area(n)
            * R ** (2.0 + sp - n)
            * (R + m) ** (-1.0 - sp)
            * (R - m) ** (-1.0 - sp)
            * _regular_factor(n, sp, T)
        )
    return val


def pair_density(n: int, sp: float, r, rho):
    """Smooth factor of the radial double-integral density.

    |S^{n-1}| r^{n-1} rho^{n-1} k(r, rho) = pair_density * |r - rho|^{-1-sp}.
    """
    r = np.asarray(r, dtype=float)
    rho = np.asarray(rho, dtype=float)
    R = np.maximum(r, rho)
    m = np.minimum(r, rho)
    S = sphere_area(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(R > 0, R / (R + m), 1.0)
        T = np.where(R > 0, (m / np.where(R > 0, R, 1.0)) ** 2, 0.0)
    return S * S * m ** (n - 1) * ratio ** (1.0 + sp) * _regular_factor(n, sp, T)


def tail_weight(spec: ProblemSpec, r: float, epsrel: float = 1e-10) -> float:
    """T(r) = int_1^inf k(r, rho) rho^{n-1} d rho, by nested adaptive quadrature.

    The substitution rho = 1/t maps the exterior to (0, 1] where the integrand
    behaves like t^{sp-1}; that factor is handed to QUADPACK as an algebraic weight.
    """
    if not 0.0 <= r < 1.0:
        raise DomainError(f"tail weight needs 0 <= r < 1, got {r}")
    n, sp = spec.n, spec.s * spec.p
    sig = n + sp

    def g(t):
        if t == 0.0:
            return sphere_area(n)
        return angular_kernel(n, sig, r, 1.0 / t, epsrel=1e-12) * t ** (-sig)

    val, _ = integrate.quad(g, 0.0, 1.0, weight="alg", wvar=(sp - 1.0, 0.0), epsrel=epsrel, limit=200)
    return val


def tail_weight_closed(spec: ProblemSpec, r):
    """T(r) = |S^{n-1}| / (sp) * 2F1((n+sp)/2, sp/2; n/2; r^2), vectorized."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(r >= 1):
        raise DomainError("tail weight needs 0 <= r < 1")
    n, sp = spec.n, spec.s * spec.p
    return sphere_area(n) / sp * hyp2f1((n + sp) / 2.0, sp / 2.0, n / 2.0, r * r)


# ---------------------------------------------------------------------------
# table assembly


@lru_cache(maxsize=None)
def _jacobi01(order: int, expo: float):
    """Nodes/weights on [0, 1] for the weight x^expo."""
    t, w = roots_jacobi(order, 0.0, expo)
    return 0.5 * (t + 1.0), w / 2.0 ** (expo + 1.0)


@dataclass(frozen=True, eq=False)
class KernelTable:
    """Precomputed nonlocal interaction data for one (spec, mesh) pair.

    ``pair_weights[i, j]`` (i != j) is the weight of |u_i - u_j|^p in the
    double integral over B x B; it equals ``k_matrix[i, j] * w_i * w'_j`` with
    w the volume weights and w' = w / |S^{n-1}|.  ``tail_cells[i]`` is the
    cell integral of the exterior weight T against the volume element.
    ``constant`` multiplies the whole double integral.
    """

    spec: ProblemSpec
    mesh: RadialMesh
    k_matrix: np.ndarray
    tail: np.ndarray
    constant: float
    pair_weights: np.ndarray
    tail_cells: np.ndarray

    def raw_energy(self, u: np.ndarray) -> float:
        """Unnormalized double integral for nodal values ``u`` (length M + 1)."""
        p = self.spec.p
        diff = np.abs(u[:, None] - u[None, :]) ** p
        return float(np.sum(self.pair_weights * diff) + 2.0 * np.dot(self.tail_cells, np.abs(u) ** p))


def _table_key(spec, mesh, near_band, d_order, r_order, far_order):
    tag = f"{spec.n}|{spec.s!r}|{spec.p!r}|{mesh.digest}|{near_band}|{d_order}|{r_order}|{far_order}|v1"
    return hashlib.sha256(tag.encode()).hexdigest()[:20]


def build_kernel_table(
    spec: ProblemSpec,
    mesh: RadialMesh,
    near_band: int = 4,
    d_order: int = 10,
    r_order: int = 6,
    far_order: int = 2,
    cache_dir=None,
) -> KernelTable:
    """Assemble the nonlocal interaction weights on ``mesh``.

    Pairs of dual cells within ``near_band`` of each other are integrated
    with the singular product rule; farther pairs use a tensor Gauss rule of
    ``far_order`` points per cell.  Each weight is divided by |r_i - r_j|^p so
    that the nodal sum reproduces the double integral exactly for fields that
    are linear across the pair.  The self-interaction of a cell is moved onto
    the links to its neighbours in the same spirit.
    """
    if spec.n != mesh.n:
        raise DomainError("mesh dimension differs from spec dimension")
    cache_dir = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    key = _table_key(spec, mesh, near_band, d_order, r_order, far_order)
    W = tail_cells = None
    if cache_dir:
        path = Path(cache_dir) / f"kernel_{key}.npz"
        if path.exists():
            with np.load(path) as z:
                W, tail_cells = z["W"], z["tail_cells"]
            log.debug("kernel table loaded from %s", path)
    if W is None:
        W, tail_cells = _assemble(spec, mesh, near_band, d_order, r_order, far_order)
        if cache_dir:
            Path(cache_dir).mkdir(parents=True, exist_ok=True)
            np.savez(Path(cache_dir) / f"kernel_{key}.npz", W=W, tail_cells=tail_cells)

    w = mesh.quad_weights
    wr = mesh.radial_weights
    with np.errstate(divide="ignore", invalid="ignore"):
        kmat = W / (w[:, None] * wr[None, :])
    np.fill_diagonal(kmat, 0.0)
    tail = np.empty(mesh.M + 1)
    tail[:-1] = tail_weight_closed(spec, mesh.nodes[:-1])
    tail[-1] = np.inf
    for arr in (kmat, tail, W, tail_cells):
        arr.flags.writeable = False
    return KernelTable(
        spec=spec,
        mesh=mesh,
        k_matrix=kmat,
        tail=tail,
        constant=normalization_constant(spec),
        pair_weights=W,
        tail_cells=tail_cells,
    )


def _assemble(spec, mesh, near_band, d_order, r_order, far_order):
    n, p = spec.n, spec.p
    sp = spec.s * p
    gam = p - 1.0 - sp
    M = mesh.M
    r = mesh.nodes
    e = mesh.cell_edges
    N = M + 1
    W = np.zeros((N, N))

    # far pairs: tensor Gauss on the dual cells
    iu, ju = np.triu_indices(N, k=near_band + 1)
    if len(iu):
        t, wt = np.polynomial.legendre.leggauss(far_order)
        loc, wt = 0.5 * (t + 1.0), 0.5 * wt
        wid = np.diff(e)
        xs = e[:-1, None] + wid[:, None] * loc
        ws = wid[:, None] * wt
        chunk = 200_000
        for c in range(0, len(iu), chunk):
            a, b = iu[c : c + chunk], ju[c : c + chunk]
            X = xs[a][:, :, None]
            Y = xs[b][:, None, :]
            dens = pair_density(n, sp, X, Y) * np.abs(X - Y) ** gam
            val = np.einsum("kij,ki,kj->k", dens, ws[a], ws[b])
            W[a, b] = val / np.abs(r[a] - r[b]) ** p

    # near pairs and self cells
    self_int = None
    for off in range(0, near_band + 1):
        i = np.arange(0, N - off)
        j = i + off
        vals = near_pair_integrals(mesh, n, sp, gam, i, j, d_order, r_order)
        if off == 0:
            self_int = vals
        else:
            W[i, j] = vals / np.abs(r[i] - r[j]) ** p
    W = np.triu(W, 1)
    W = W + W.T

    # self-interaction S_i |u'(r_i)|^p, with |u'|^p taken as the mean of the
    # one-sided difference quotients (one-sided at both ends of the mesh)
    h = mesh.h
    share = np.zeros(M)  # added to link (k, k+1), unordered
    share[0] += self_int[0] / h[0] ** p
    share[-1] += self_int[M] / h[-1] ** p
    inner_nodes = np.arange(1, M)
    share[inner_nodes] += 0.5 * self_int[inner_nodes] / h[inner_nodes] ** p
    share[inner_nodes - 1] += 0.5 * self_int[inner_nodes] / h[inner_nodes - 1] ** p
    k = np.arange(M)
    W[k, k + 1] += 0.5 * share
    W[k + 1, k] += 0.5 * share

    # exterior interaction, cell-averaged; the boundary node carries u = 0
    xg, wg = np.polynomial.legendre.leggauss(6)
    xg, wg = 0.5 * (xg + 1.0), 0.5 * wg
    wid = np.diff(e)[:-1]
    pts = e[:-2, None] + wid[:, None] * xg
    vals = tail_weight_closed(spec, pts) * pts ** (n - 1)
    tail_cells = np.zeros(N)
    tail_cells[:-1] = sphere_area(n) * wid * (vals @ wg)
    return W, tail_cells


def near_pair_integrals(mesh, n, sp, gam, i, j, d_order=10, r_order=6):
    """int_{C_i} int_{C_j} pair_density(r, rho) |r - rho|^gam d rho dr.

    Integrates in d = rho - r.  For fixed d the admissible r form an interval
    whose endpoints move linearly with d, so the inner integral is smooth
    between the breakpoints of the cell pair.  Pieces that end at d = 0 use a
    Gauss-Jacobi rule carrying the weight |d|^gam.
    """
    i = np.atleast_1d(i)
    j = np.atleast_1d(j)
    e = mesh.cell_edges
    a1, b1 = e[i], e[i + 1]
    a2, b2 = e[j], e[j + 1]
    lo, hi = a2 - b1, b2 - a1
    bp = np.stack([a2 - b1, a2 - a1, b2 - b1, b2 - a1, np.clip(0.0, lo, hi)], axis=-1)
    bp.sort(axis=-1)

    xj, wj = _jacobi01(d_order, gam)
    xl, wl = np.polynomial.legendre.leggauss(d_order)
    xl, wl = 0.5 * (xl + 1.0), 0.5 * wl
    xr, wr = np.polynomial.legendre.leggauss(r_order)
    xr, wr = 0.5 * (xr + 1.0), 0.5 * wr

    def inner(d, sel):
        rl = np.maximum(a1[sel, None], a2[sel, None] - d)
        rh = np.minimum(b1[sel, None], b2[sel, None] - d)
        length = np.clip(rh - rl, 0.0, None)
        rr = rl[..., None] + length[..., None] * xr
        vals = pair_density(n, sp, rr, rr + d[..., None])
        return length * (vals @ wr)

    total = np.zeros(len(i))
    for k in range(4):
        d0, d1 = bp[:, k], bp[:, k + 1]
        width = d1 - d0
        live = width > 0
        m1 = live & (d0 == 0.0)
        if np.any(m1):
            d = d1[m1, None] * xj
            total[m1] += d1[m1] ** (gam + 1.0) * (inner(d, m1) @ wj)
        m2 = live & (d1 == 0.0)
        if np.any(m2):
            d = d0[m2, None] * xj
            total[m2] += np.abs(d0[m2]) ** (gam + 1.0) * (inner(d, m2) @ wj)
        m3 = live & (d0 != 0.0) & (d1 != 0.0)
        if np.any(m3):
            d = d0[m3, None] + width[m3, None] * xl
            total[m3] += width[m3] * ((np.abs(d) ** gam * inner(d, m3)) @ wl)
    return total
