"""Ground states as minimizers of the Rayleigh quotient R = Z / N.

Z(u) = a_loc ||grad u||_p^p + a_nl [u]_{s,p}^p and N(u) = (int |x|^alpha |u|^q)^{p/q}.
The minimization is a preconditioned projected gradient method on the
constraint N(u) = 1: Barzilai-Borwein step lengths safeguarded by Armijo
backtracking, the secant matrix of Z as metric.  A converged minimizer is
rescaled along its ray to a critical point of J and polished by Newton steps
on the discrete Euler-Lagrange equations.
"""
from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize

from .discretization import EnergyModel
from .errors import InvalidInit, NotConverged, RegimeRefusal, RescaleFailed
from .kernel import KernelTable
from .mesh import DiscreteField, check_same_mesh
from .problem import EXISTENCE, ProblemSpec, classify_regime

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6
    max_iter: int = 3000
    seed: int = 0
    mode: str = "convex"
    noise: float = 0.01
    armijo: float = 1e-4
    polish: bool = True
    polish_tol: float = 1e-11
    eps_reg: float = 0.0
    override_critical: bool = False
    raise_on_fail: bool = True


@dataclass
class GroundState:
    field: DiscreteField
    R: float
    Z: float
    N: float
    residual: float
    residual_rel: float
    iterations: int
    converged: bool
    t_scale: float
    mode: str
    spec: ProblemSpec
    history: list = field(default_factory=list, repr=False)

    @property
    def solution(self) -> DiscreteField:
        """The field rescaled to a critical point of J."""
        return self.field * self.t_scale

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "R", "residual", "step"])
            for it, R, res, step in self.history:
                w.writerow([it, f"{R:.17g}", f"{res:.17g}", f"{step:.17g}"])

    def summary(self) -> dict:
        return {
            "R": self.R,
            "Z": self.Z,
            "N": self.N,
            "residual": self.residual,
            "residual_rel": self.residual_rel,
            "iterations": self.iterations,
            "converged": self.converged,
            "t_scale": self.t_scale,
            "mode": self.mode,
        }


def default_init(mesh, seed=0, noise=0.01) -> DiscreteField:
    """(1 - r^2) with multiplicative uniform noise of relative size ``noise``."""
    rng = np.random.default_rng(seed)
    base = 1.0 - mesh.nodes**2
    return DiscreteField(mesh, base * (1.0 + noise * rng.uniform(-1.0, 1.0, base.shape)))


class _Quotient:
    """R, its gradient and the metric, on the interior unknowns."""

    def __init__(self, model: EnergyModel):
        self.model = model
        self.p = model.spec.p
        self.q = model.spec.q
        self._chol = None

    def full(self, x):
        return np.append(x, 0.0)

    def N(self, x):
        return self.model.henon(self.full(x), positive_part=False) ** (self.p / self.q)

    def value_and_grad(self, x):
        u = self.full(x)
        m = self.model
        Z = m.Z(u)
        H = m.henon(u, positive_part=False)
        if H <= 0.0:
            return np.inf, None, Z, 0.0
        N = H ** (self.p / self.q)
        gN = (self.p / self.q) * H ** (self.p / self.q - 1.0) * m.grad_henon(u, positive_part=False)
        R = Z / N
        g = (m.grad_Z(u) - R * gN) / N
        return R, g[:-1], Z, N

    def metric(self, x):
        if self.p == 2.0 and self._chol is not None:
            return self._chol
        u = self.full(x)
        if self.p < 2.0:
            # bounded secant coefficients where the field is locally flat
            slope = np.abs(np.diff(u)) / self.model.mesh.h
            A = self.model.hess_Z(u, True, 1e-3 * np.max(np.abs(u)), 1e-3 * np.max(slope))[:-1, :-1]
        else:
            A = self.model.hess_Z(u, picard=True)[:-1, :-1]
        # the secant matrix is semidefinite where |u'| vanishes and p > 2
        shift = 1e-12 * np.max(np.abs(np.diag(A)))
        A[np.diag_indices_from(A)] += shift
        c = linalg.cho_factor(A, lower=True, check_finite=False)
        if self.p == 2.0:
            self._chol = c
        return c

    def normalize(self, x):
        N = self.N(x)
        return x / N ** (1.0 / self.p), N


def _check_regime(spec: ProblemSpec, override: bool):
    rep = classify_regime(spec)
    if rep.regime != EXISTENCE and not override:
        raise RegimeRefusal(
            f"q = {spec.q} is not below the threshold {rep.p_star_beta_alpha:.6g} ({rep.regime})"
        )


def minimize_rayleigh(spec: ProblemSpec, kt: KernelTable, init: DiscreteField | None = None, opts: SolverOptions | None = None) -> GroundState:
    """Minimize R over nonzero fields and certify the result as a critical point of J."""
    opts = opts or SolverOptions()
    _check_regime(spec, opts.override_critical)
    mesh = kt.mesh
    if init is None:
        init = default_init(mesh, opts.seed, opts.noise)
    check_same_mesh(init.mesh, mesh)
    eps = opts.eps_reg if opts.eps_reg > 0 else (1e-10 if spec.p < 2 else 0.0)
    model = EnergyModel(spec, kt, opts.mode, eps)
    Q = _Quotient(model)

    x = init.interior.copy()
    if Q.N(x) == 0.0:
        raise InvalidInit("initial field has N(u) = 0")
    x, _ = Q.normalize(x)

    history = []
    R, g, Z, N = Q.value_and_grad(x)
    tau = 1.0
    x_old = g_old = None
    converged = False
    it = 0
    took_abs = False
    for it in range(1, opts.max_iter + 1):
        C = Q.metric(x)
        d = -linalg.cho_solve(C, g, check_finite=False)
        gnorm = float(np.sqrt(max(-np.dot(g, d), 0.0)))
        history.append((it - 1, R, gnorm, tau))
        if gnorm <= opts.tol * max(1.0, R):
            if not took_abs:
                # R(|u|) <= R(u): continue from the absolute value
                took_abs = True
                x = np.abs(x)
                x, _ = Q.normalize(x)
                R, g, Z, N = Q.value_and_grad(x)
                x_old = g_old = None
                tau = 1.0
                continue
            converged = True
            break
        if x_old is not None:
            sx = x - x_old
            sy = g - g_old
            sty = float(np.dot(sx, sy))
            if sty > 0:
                # BB1 length measured in the metric: s^T P s / s^T y
                tau = float(np.clip(_metric_norm2(C, sx) / sty, 1e-6, 1e6))
            else:
                tau = min(2.0 * tau, 1e6)
        slope = float(np.dot(g, d))
        step = tau
        accepted = False
        for _ in range(60):
            xt = x + step * d
            if Q.N(xt) == 0.0:
                xt = np.abs(x)
            Rt, gt, Zt, Nt = Q.value_and_grad(xt)
            if np.isfinite(Rt) and Rt <= R + opts.armijo * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            log.debug("line search stalled at iteration %d", it)
            converged = gnorm <= 10 * opts.tol * max(1.0, R)
            break
        x_old, g_old = x, g
        xt, _ = Q.normalize(xt)
        # R and its (0-homogeneous) gradient scale: recompute on the sphere
        x = xt
        R, g, Z, N = Q.value_and_grad(x)
        tau = step

    u = np.abs(np.append(x, 0.0))
    gs = _finish(spec, kt, model, u, it, converged, history, opts)
    if not gs.converged and opts.raise_on_fail:
        raise NotConverged(f"no convergence after {it} iterations", state=gs)
    return gs


def _metric_norm2(C, v):
    L = np.tril(C[0])
    w = L.T @ v
    return float(np.dot(w, w))


def _finish(spec, kt, model, u, iterations, converged, history, opts) -> GroundState:
    p, q = spec.p, spec.q
    N = model.henon(u, positive_part=False) ** (p / q)
    u = u / N ** (1.0 / p)
    Z = model.Z(u)
    t = Z ** (1.0 / (q - p))
    v = t * u
    if opts.polish and converged and p >= 2.0:
        v = _newton_polish(model, v, opts.polish_tol)
        v = np.maximum(v, 0.0)
        Nv = model.henon(v, positive_part=False) ** (p / q)
        t = Nv ** (1.0 / p)
        u = v / t
        Z = model.Z(u)
    res = model.residual(v)
    scale = model.residual_scale(v)
    rel = res / scale if scale > 0 else np.inf
    N = model.henon(u, positive_part=False) ** (p / q)
    field_ = DiscreteField(kt.mesh, u)
    interior = field_.values[1:-1]
    if np.any(interior <= 0.0):
        warnings.warn("ground state vanishes at interior nodes", RuntimeWarning, stacklevel=3)
    return GroundState(
        field=field_,
        R=Z / N,
        Z=Z,
        N=N,
        residual=res,
        residual_rel=rel,
        iterations=iterations,
        converged=converged,
        t_scale=t,
        mode=model.mode,
        spec=spec,
        history=history,
    )


def _newton_polish(model: EnergyModel, v, tol, max_steps=25):
    """Newton on dJ/du = 0 (interior unknowns); keeps the best iterate."""
    best = v.copy()
    best_res = model.residual(v) / max(model.residual_scale(v), 1e-300)
    x = v.copy()
    for _ in range(max_steps):
        if best_res <= tol:
            break
        g = model.grad_J(x)[:-1]
        H = model.hess_J(x)[:-1, :-1]
        try:
            dx = linalg.solve(H, g, assume_a="sym", check_finite=False)
        except linalg.LinAlgError:
            break
        x = x.copy()
        x[:-1] -= dx
        r = model.residual(x) / max(model.residual_scale(x), 1e-300)
        if not np.isfinite(r):
            break
        if r < best_res:
            best, best_res = x.copy(), r
        elif r > 10 * best_res:
            break
    return best


def residual_norm(u: DiscreteField, spec: ProblemSpec, kt: KernelTable, mode: str = "convex", eps_reg: float = 0.0) -> float:
    """Dual norm (mass-weighted l^{p'}) of J'(u)."""
    check_same_mesh(u.mesh, kt.mesh)
    if spec.p < 2 and eps_reg == 0.0:
        eps_reg = 1e-10
    return EnergyModel(spec, kt, mode, eps_reg).residual(u.values)


def relative_residual(u: DiscreteField, spec: ProblemSpec, kt: KernelTable, mode: str = "convex") -> float:
    model = EnergyModel(spec, kt, mode, 1e-10 if spec.p < 2 else 0.0)
    return model.residual(u.values) / model.residual_scale(u.values)


def rescale_to_solution(gs: GroundState, spec: ProblemSpec, kt: KernelTable, tol: float = 1e-6) -> DiscreteField:
    """Scale the normalized minimizer to a critical point of J.

    A bounded search in log t minimizes the relative residual along the ray
    t * field; the homogeneity prediction t^{q-p} = Z seeds the bracket.
    """
    if not gs.converged:
        raise RescaleFailed("ground state did not converge")
    model = EnergyModel(spec, kt, gs.mode, 1e-10 if spec.p < 2 else 0.0)
    u = gs.field.values
    t0 = gs.Z ** (1.0 / (spec.q - spec.p))

    def rel(logt):
        v = np.exp(logt) * u
        return model.residual(v) / model.residual_scale(v)

    res = optimize.minimize_scalar(
        rel, bounds=(np.log(t0) - 1.5, np.log(t0) + 1.5), method="bounded", options={"xatol": 1e-12}
    )
    t = float(np.exp(res.x))
    best = min(res.fun, rel(np.log(t0)))
    if rel(np.log(t0)) <= res.fun:
        t = t0
    if not best <= tol:
        raise RescaleFailed(f"relative residual {best:.3g} on the ray exceeds {tol:.3g}")
    return gs.field * t
