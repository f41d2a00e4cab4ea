"""Energy functionals of radial fields and their discrete derivatives.

Conventions: fields are nodal values on a ``RadialMesh`` (length M + 1, last
entry pinned to 0).  The local energy uses the piecewise-linear interpolant;
the nonlocal energy uses the pair weights of a ``KernelTable``; the Henon term
is lumped at the nodes.  Derivatives are taken of these discrete energies
exactly, so finite differences of J reproduce ``gradient_J``.

``mode`` chooses how the two parts of the operator are weighted:
``convex`` -> (1 - beta) local + beta nonlocal, ``additive`` -> local + beta nonlocal.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionError, MeshMismatch, MeshTooCoarse, RegularizationRequired
from .kernel import KernelTable
from .mesh import DiscreteField, RadialMesh, check_same_mesh, sphere_area
from .problem import ProblemSpec

MODES = ("convex", "additive")


@dataclass(frozen=True)
class EnergyReport:
    grad_energy: float
    gagliardo: float
    henon: float
    hardy: float
    J: float
    residual_norm: float

    def as_dict(self) -> dict:
        return asdict(self)


def operator_weights(beta: float, mode: str = "convex") -> tuple[float, float]:
    """Coefficients (local, nonlocal) of the operator for ``mode``."""
    if mode == "convex":
        return 1.0 - beta, beta
    if mode == "additive":
        return 1.0, beta
    raise ValueError(f"unknown mode {mode!r}")


def _phi(x, p):
    """|x|^{p-2} x, continuous at 0 for p > 1."""
    return np.abs(x) ** (p - 1.0) * np.sign(x)


# ---------------------------------------------------------------------------
# energies on raw arrays


def local_energy(mesh: RadialMesh, u: np.ndarray, p: float) -> float:
    slope = np.diff(u) / mesh.h
    return float(np.dot(mesh.interval_volumes, np.abs(slope) ** p))


def local_derivative(mesh: RadialMesh, u: np.ndarray, p: float, eps: float = 0.0) -> np.ndarray:
    slope = np.diff(u) / mesh.h
    if eps > 0.0:
        flux = (slope * slope + eps * eps) ** ((p - 2.0) / 2.0) * slope
    else:
        flux = _phi(slope, p)
    flux = p * mesh.interval_volumes * flux / mesh.h
    g = np.zeros_like(u)
    g[1:] += flux
    g[:-1] -= flux
    return g


def local_hessian_diagonals(mesh, u, p, eps=0.0, picard=False):
    """Tridiagonal Hessian (or secant matrix if ``picard``) of the local energy.

    Returns (main, off) with main of length M + 1 and off of length M.
    """
    slope = np.diff(u) / mesh.h
    if picard:
        coef = (slope * slope + eps * eps) ** ((p - 2.0) / 2.0)
    elif eps > 0.0:
        s2 = slope * slope + eps * eps
        coef = s2 ** ((p - 4.0) / 2.0) * ((p - 1.0) * slope * slope + eps * eps)
    else:
        coef = (p - 1.0) * np.abs(slope) ** (p - 2.0)
    c = p * mesh.interval_volumes * coef / mesh.h**2
    main = np.zeros(mesh.M + 1)
    main[1:] += c
    main[:-1] += c
    return main, -c


def nonlocal_raw_derivative(kt: KernelTable, u: np.ndarray) -> np.ndarray:
    p = kt.spec.p
    diff = u[:, None] - u[None, :]
    return 2.0 * p * (np.sum(kt.pair_weights * _phi(diff, p), axis=1) + kt.tail_cells * _phi(u, p))


def nonlocal_raw_hessian(kt: KernelTable, u: np.ndarray, picard: bool = False, eps: float = 0.0) -> np.ndarray:
    """Hessian of the raw double sum; ``eps`` floors |u_i - u_j| for p < 2."""
    p = kt.spec.p
    fac = 1.0 if picard else (p - 1.0)
    if p == 2.0:
        A = kt.pair_weights.copy()
        tail = kt.tail_cells.copy()
    else:
        d2 = (u[:, None] - u[None, :]) ** 2 + eps * eps
        with np.errstate(divide="ignore", invalid="ignore"):
            A = kt.pair_weights * d2 ** ((p - 2.0) / 2.0)
            tail = kt.tail_cells * (u * u + eps * eps) ** ((p - 2.0) / 2.0)
        A[~np.isfinite(A)] = 0.0
        tail[~np.isfinite(tail)] = 0.0
    A *= -2.0 * p * fac
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, -A.sum(axis=1) + 2.0 * p * fac * tail)
    return A


def henon_value(mesh: RadialMesh, u: np.ndarray, alpha: float, q: float, positive_part: bool = True) -> float:
    v = np.maximum(u, 0.0) if positive_part else np.abs(u)
    return float(np.dot(mesh.quad_weights * mesh.nodes**alpha, v**q))


def henon_derivative(mesh, u, alpha, q, positive_part=True):
    wr = mesh.quad_weights * mesh.nodes**alpha
    if positive_part:
        return q * wr * np.maximum(u, 0.0) ** (q - 1.0)
    return q * wr * _phi(u, q)


class EnergyModel:
    """Bundles Z (operator energy), the Henon term and their derivatives.

    Z(u) = a_loc * ||grad u||_p^p + a_nl * [u]_{s,p}^p with (a_loc, a_nl)
    given by ``operator_weights``.  Arrays passed in are full nodal vectors.
    """

    def __init__(self, spec: ProblemSpec, kt: KernelTable, mode: str = "convex", eps_reg: float = 0.0):
        if spec.n != kt.spec.n or spec.s != kt.spec.s or spec.p != kt.spec.p:
            raise MeshMismatch("kernel table was built for different (n, s, p)")
        if spec.normalization != kt.spec.normalization:
            raise MeshMismatch("kernel table normalization differs from spec")
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.spec = spec
        self.kt = kt
        self.mesh = kt.mesh
        self.mode = mode
        self.eps = eps_reg
        self.a_loc, self.a_nl = operator_weights(spec.beta, mode)

    @property
    def p(self):
        return self.spec.p

    def grad_energy(self, u):
        return local_energy(self.mesh, u, self.p)

    def gagliardo(self, u):
        return self.kt.constant * self.kt.raw_energy(u) if self.a_nl else 0.0

    def Z(self, u):
        val = self.a_loc * self.grad_energy(u) if self.a_loc else 0.0
        if self.a_nl:
            val += self.a_nl * self.gagliardo(u)
        return val

    def grad_Z(self, u):
        g = np.zeros_like(u)
        if self.a_loc:
            g += self.a_loc * local_derivative(self.mesh, u, self.p, self.eps)
        if self.a_nl:
            g += self.a_nl * self.kt.constant * nonlocal_raw_derivative(self.kt, u)
        g[-1] = 0.0
        return g

    def hess_Z(self, u, picard=False, eps_nl=0.0, eps_loc=None):
        """Dense Hessian of Z (or the secant matrix A with grad Z = A u)."""
        N = self.mesh.M + 1
        A = np.zeros((N, N))
        if self.a_loc:
            e = self.eps if eps_loc is None else eps_loc
            main, off = local_hessian_diagonals(self.mesh, u, self.p, e, picard)
            idx = np.arange(N)
            A[idx, idx] += self.a_loc * main
            A[idx[:-1], idx[1:]] += self.a_loc * off
            A[idx[1:], idx[:-1]] += self.a_loc * off
        if self.a_nl:
            A += self.a_nl * self.kt.constant * nonlocal_raw_hessian(self.kt, u, picard, eps_nl)
        return A

    def henon(self, u, positive_part=True):
        return henon_value(self.mesh, u, self.spec.alpha, self.spec.q, positive_part)

    def grad_henon(self, u, positive_part=True):
        g = henon_derivative(self.mesh, u, self.spec.alpha, self.spec.q, positive_part)
        g[-1] = 0.0
        return g

    def J(self, u):
        return self.Z(u) / self.p - self.henon(u) / self.spec.q

    def grad_J(self, u):
        """Euclidean derivative dJ/du_i (boundary entry zero)."""
        return self.grad_Z(u) / self.p - self.grad_henon(u) / self.spec.q

    def hess_J(self, u):
        q = self.spec.q
        wr = self.mesh.quad_weights * self.mesh.nodes**self.spec.alpha
        d = (q - 1.0) * wr * np.maximum(u, 0.0) ** (q - 2.0)
        H = self.hess_Z(u) / self.p
        H[np.diag_indices_from(H)] -= d
        return H

    # residual measures ---------------------------------------------------

    def riesz(self, g):
        """Nodal Riesz representative of a derivative vector w.r.t. lumped mass."""
        out = np.zeros_like(g)
        out[:-1] = g[:-1] / self.mesh.quad_weights[:-1]
        return out

    def dual_norm(self, g):
        """Mass-weighted l^{p'} norm of the Riesz representative of ``g``."""
        pc = self.p / (self.p - 1.0)
        w = self.mesh.quad_weights[:-1]
        rep = self.riesz(g)[:-1]
        return float(np.sum(w * np.abs(rep) ** pc) ** (1.0 / pc))

    def residual(self, u):
        return self.dual_norm(self.grad_J(u))

    def residual_scale(self, u):
        """Size of the Henon term of J' at u, used to make residuals relative."""
        return self.dual_norm(self.grad_henon(u) / self.spec.q)


# ---------------------------------------------------------------------------
# public operations on fields


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=float)


def gradient_energy(u: DiscreteField, p: float) -> float:
    """||grad u||_p^p of the piecewise-linear interpolant, shells integrated exactly."""
    if u.mesh.M < 4:
        raise MeshTooCoarse("gradient energy needs M >= 4")
    return local_energy(u.mesh, u.values, p)


def gagliardo_energy(u: DiscreteField, kt: KernelTable) -> float:
    """Normalized [u]_{s,p}^p including the exterior interaction."""
    check_same_mesh(u.mesh, kt.mesh)
    return kt.constant * kt.raw_energy(u.values)


def henon_norm(u, alpha: float, q: float, mesh: RadialMesh | None = None) -> float:
    """Lumped int_B |x|^alpha (u^+)^q dx.  ``u`` may be a field or a raw array on ``mesh``."""
    if isinstance(u, DiscreteField):
        mesh = u.mesh
    return henon_value(mesh, _values(u), alpha, q)


def hardy_integral(u: DiscreteField) -> float:
    """int_B u^2 / |x|^2 dx of the piecewise-linear interpolant (n >= 3)."""
    mesh = u.mesh
    if mesh.n < 3:
        raise DimensionError("the Hardy integral needs n >= 3")
    return _hardy(mesh, u.values)


def _hardy(mesh, v):
    x, wts, loc = mesh.interval_gauss(4)
    ul = v[:-1, None] * (1.0 - loc) + v[1:, None] * loc
    return float(sphere_area(mesh.n) * np.sum(wts * ul**2 * x ** (mesh.n - 3)))


def lebesgue_norm(u: DiscreteField, p: float) -> float:
    """||u||_{L^p(B)} of the piecewise-linear interpolant (4-point Gauss per interval)."""
    mesh = u.mesh
    x, wts, loc = mesh.interval_gauss(4)
    v = u.values[:-1, None] * (1.0 - loc) + u.values[1:, None] * loc
    return float((sphere_area(mesh.n) * np.sum(wts * np.abs(v) ** p * x ** (mesh.n - 1))) ** (1.0 / p))


def inner_gradient_energy(u: DiscreteField, p: float, radius: float) -> float:
    """||grad u||_p^p restricted to the ball of the given radius (whole intervals)."""
    mesh = u.mesh
    keep = mesh.nodes[1:] <= radius + 1e-15
    slope = np.diff(u.values) / mesh.h
    return float(np.dot(mesh.interval_volumes[keep], np.abs(slope[keep]) ** p))


def functional_J(u: DiscreteField, spec: ProblemSpec, kt: KernelTable, mode: str = "convex", eps_reg: float | None = None) -> EnergyReport:
    """Evaluate J and its ingredients at ``u``."""
    check_same_mesh(u.mesh, kt.mesh)
    if eps_reg is None:
        eps_reg = 1e-10 if spec.p < 2 else 0.0
    model = EnergyModel(spec, kt, mode, eps_reg)
    v = u.values
    g = model.grad_energy(v)
    e = kt.constant * kt.raw_energy(v)
    h = model.henon(v)
    a_loc, a_nl = model.a_loc, model.a_nl
    J = (a_loc * g + (a_nl * e if a_nl else 0.0)) / spec.p - h / spec.q
    hardy = _hardy(u.mesh, v) if u.mesh.n >= 3 else math.inf
    return EnergyReport(
        grad_energy=g,
        gagliardo=e,
        henon=h,
        hardy=hardy,
        J=J,
        residual_norm=model.residual(v),
    )


def gradient_J(u: DiscreteField, spec: ProblemSpec, kt: KernelTable, eps_reg: float = 0.0, mode: str = "convex") -> DiscreteField:
    """Riesz representative of J'(u) w.r.t. the lumped mass; boundary value 0.

    Pair it with a direction through ``pairing`` to get <J'(u), v>.
    """
    if eps_reg < 0:
        raise ValueError("eps_reg must be >= 0")
    if spec.p < 2 and eps_reg == 0.0:
        raise RegularizationRequired("p < 2 needs eps_reg > 0 for the local flux")
    check_same_mesh(u.mesh, kt.mesh)
    model = EnergyModel(spec, kt, mode, eps_reg)
    return DiscreteField(u.mesh, model.riesz(model.grad_J(u.values)))


def pairing(a: DiscreteField, v: DiscreteField) -> float:
    """Lumped L^2 pairing sum_i w_i a_i v_i."""
    check_same_mesh(a.mesh, v.mesh)
    return float(np.dot(a.mesh.quad_weights * a.values, v.values))
