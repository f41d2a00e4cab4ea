"""Numerical diagnostics: s -> 1 stability, dilation scaling, radial decay, level truncation."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .discretization import EnergyModel, gradient_energy, lebesgue_norm
from .errors import DomainError, ExponentTooSmall, HenonError
from .kernel import KernelTable, build_kernel_table
from .mesh import DiscreteField, RadialMesh, sphere_area
from .problem import EXISTENCE, ProblemSpec, classify_regime
from .solver import SolverOptions, minimize_rayleigh

log = logging.getLogger(__name__)


def write_csv(path, header, rows) -> None:
    """Plain CSV, floats with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return v


def _plain(obj):
    """Convert numpy scalars/arrays to JSON-friendly Python objects."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# ---------------------------------------------------------------------------
# s -> 1 stability


@dataclass
class StabilityReport:
    s_values: list
    distances: list
    norms: list
    local_R: float
    local_norm: float
    R_values: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)
    p: float = 2.0

    @property
    def distances_decreasing(self) -> bool:
        d = np.asarray(self.distances, dtype=float)
        return bool(np.all(np.isfinite(d)) and np.all(np.diff(d) < 0))

    @property
    def norm_bound(self) -> float:
        return float(np.nanmax(self.norms))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["distances_decreasing"] = self.distances_decreasing
        d["norm_bound"] = self.norm_bound
        return _plain(d)

    header = ("s", "distance", "norm", "R")

    def rows(self):
        return list(zip(self.s_values, self.distances, self.norms, self.R_values))


def stability_sweep(template: ProblemSpec, s_values, M: int = 256, grading: float = 2.0,
                    opts: SolverOptions | None = None, threads: int = 1) -> StabilityReport:
    """Distances between mixed-operator solutions and the purely local solution as s grows.

    The local (beta = 0) problem is solved once; its ground state seeds every
    mixed solve.  Distances are L^p distances between the rescaled solutions,
    norms are Z^{1/p} of the mixed solutions.
    """
    if not 0.0 < template.beta <= 1.0:
        raise DomainError("the stability sweep needs beta in (0, 1]")
    if template.normalization != "bbm":
        raise DomainError("the s -> 1 limit needs the bbm normalization")
    s_values = [float(s) for s in s_values]
    if any(b <= a for a, b in zip(s_values, s_values[1:])):
        raise DomainError("s values must be strictly increasing")
    for s in s_values:
        if not 0.0 < s < 1.0 or not s * template.p < template.n:
            raise DomainError(f"s = {s} violates 0 < s < 1, s p < n")
    opts = opts or SolverOptions(tol=1e-8)
    mesh = RadialMesh(M, template.n, grading)
    p = template.p

    local = template.replace(beta=0.0)
    g0 = minimize_rayleigh(local, build_kernel_table(local, mesh), None, opts)
    u0 = g0.solution

    def one(s):
        spec = template.replace(s=s)
        kt = build_kernel_table(spec, mesh)
        gs = minimize_rayleigh(spec, kt, g0.field, opts)
        v = gs.solution
        Zv = EnergyModel(spec, kt, opts.mode).Z(v.values)
        return lebesgue_norm(v - u0, p), Zv ** (1.0 / p), gs.R

    def guarded(s):
        try:
            return one(s), None
        except HenonError as exc:
            return (math.nan, math.nan, math.nan), f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            out = list(ex.map(guarded, s_values))
    else:
        out = [guarded(s) for s in s_values]
    rep = StabilityReport(
        s_values=s_values,
        distances=[o[0][0] for o in out],
        norms=[o[0][1] for o in out],
        R_values=[o[0][2] for o in out],
        local_R=g0.R,
        local_norm=gradient_energy(u0, p) ** (1.0 / p),
        failures={str(s): o[1] for s, o in zip(s_values, out) if o[1]},
        p=p,
    )
    if not rep.distances_decreasing:
        log.info("distances are not monotone along the sweep: %s", rep.distances)
    return rep


# ---------------------------------------------------------------------------
# dilation scaling


@dataclass
class ScalingReport:
    lambdas: list
    R_values: list
    fitted_slope: float
    analytic_slope: float
    asymptotic_slope: float
    local_exponent: float
    nonlocal_exponent: float
    local_share: float
    predicted_R: list
    supercritical: bool

    @property
    def R_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.R_values) < 0))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["R_decreasing"] = self.R_decreasing
        return _plain(d)

    header = ("lambda", "R", "R_predicted")

    def rows(self):
        return list(zip(self.lambdas, self.R_values, self.predicted_R))


def dilate(u: DiscreteField, lam: float) -> DiscreteField:
    """u_lam(r) = u(lam r) on the same mesh; monotone cubic, zero beyond r = 1/lam."""
    if lam < 1.0:
        raise DomainError("dilation factor must be >= 1 to keep the support in the ball")
    if lam == 1.0:
        return u
    r = u.mesh.nodes
    interp = PchipInterpolator(r, u.values, extrapolate=False)
    x = lam * r
    vals = np.zeros_like(r)
    inside = x <= 1.0
    vals[inside] = interp(x[inside])
    return DiscreteField(u.mesh, vals)


def scaling_diagnostic(u: DiscreteField, spec: ProblemSpec, kt: KernelTable, lambdas=(1.0, 2.0, 4.0, 8.0),
                       mode: str = "convex") -> ScalingReport:
    """R(u_lam) along dilations u_lam(x) = u(lam x), against exact homogeneity.

    Under x -> lam x the gradient term scales like lam^{p-n}, the Gagliardo term
    like lam^{sp-n} and N like lam^{-(n+alpha)p/q}.  ``analytic_slope`` is the
    least-squares slope of log R_pred against log lam, where R_pred combines
    both terms with their weights at lam = 1; for beta in {0, 1} it reduces to
    the single exponent.  ``asymptotic_slope`` is the large-lam exponent.
    """
    lambdas = [float(x) for x in lambdas]
    if len(lambdas) < 2:
        raise DomainError("need at least two dilation factors")
    if min(lambdas) < 1.0:
        raise DomainError("dilation factors must be >= 1")
    n, s, p, q, a = spec.n, spec.s, spec.p, spec.q, spec.alpha
    model = EnergyModel(spec, kt, mode, 1e-10 if p < 2 else 0.0)

    def R_of(v):
        return model.Z(v) / model.henon(v, positive_part=False) ** (p / q)

    R = [R_of(dilate(u, lam).values) for lam in lambdas]
    shift = (n + a) * p / q
    e_loc = p - n + shift
    e_nl = s * p - n + shift
    G = model.a_loc * model.grad_energy(u.values)
    E = model.a_nl * model.gagliardo(u.values) if model.a_nl else 0.0
    N = model.henon(u.values, positive_part=False) ** (p / q)
    lam = np.asarray(lambdas)
    pred = (G * lam ** (p - n) + E * lam ** (s * p - n)) * lam**shift / N
    ll = np.log(lam)
    fitted = float(np.polyfit(ll, np.log(R), 1)[0])
    analytic = float(np.polyfit(ll, np.log(pred), 1)[0])
    asym = e_loc if G > 0 else e_nl
    rep = classify_regime(spec)
    return ScalingReport(
        lambdas=lambdas,
        R_values=[float(x) for x in R],
        fitted_slope=fitted,
        analytic_slope=analytic,
        asymptotic_slope=asym,
        local_exponent=e_loc,
        nonlocal_exponent=e_nl,
        local_share=float(G / (G + E)) if G + E > 0 else math.nan,
        predicted_R=[float(x) for x in pred],
        supercritical=spec.q > rep.p_star_beta_alpha and rep.regime != EXISTENCE,
    )


# ---------------------------------------------------------------------------
# radial decay


@dataclass
class StraussReport:
    gamma_used: float
    C_observed: float
    norm_used: str
    argmax_r: float

    def as_dict(self) -> dict:
        return _plain(asdict(self))


def strauss_check(u: DiscreteField, spec: ProblemSpec, kt: KernelTable | None = None) -> StraussReport:
    """max_i |u_i| r_i^gamma / norm(u) over nodes with r_i > 0.

    gamma = n/p - 1 with the gradient norm when beta < 1; gamma = n/p - s with
    the full W^{s,p} norm (L^p plus seminorm) when beta = 1, which needs ``kt``.
    """
    n, p = spec.n, spec.p
    r = u.mesh.nodes
    if spec.pure_nonlocal:
        if kt is None:
            raise ValueError("beta = 1 needs a kernel table for the seminorm")
        gamma = n / p - spec.s
        semi = kt.constant * kt.raw_energy(u.values)
        norm = (lebesgue_norm(u, p) ** p + semi) ** (1.0 / p)
        label = "W^{s,p}"
    else:
        gamma = n / p - 1.0
        norm = gradient_energy(u, p) ** (1.0 / p)
        label = "grad L^p"
    if norm == 0.0:
        return StraussReport(gamma, 0.0, label, math.nan)
    vals = np.abs(u.values[1:]) * r[1:] ** gamma
    k = int(np.argmax(vals))
    return StraussReport(gamma, float(vals[k] / norm), label, float(r[1:][k]))


# ---------------------------------------------------------------------------
# level truncation


@dataclass
class StampacchiaReport:
    C_k: list
    U_k: list
    gamma_fit: float
    log_C_hat_fit: float
    gamma_theory: float
    tau: float
    p_star: float
    delta: float
    scale: float
    bound: float
    bound_holds: bool
    rescaled_bound: float
    rescaled_bound_holds: bool
    max_u: float
    U_nonincreasing: bool
    U_vanishes: bool

    def as_dict(self) -> dict:
        return _plain(asdict(self))

    header = ("k", "C_k", "U_k")

    def rows(self):
        return [(k, c, u) for k, (c, u) in enumerate(zip(self.C_k, self.U_k))]


def stampacchia_tau(p_star: float, r_exp: float) -> float:
    return p_star / (p_star - p_star / r_exp - 1.0)


def _gauss_values(u: DiscreteField):
    mesh = u.mesh
    x, wts, loc = mesh.interval_gauss(4)
    v = u.values[:-1, None] * (1.0 - loc) + u.values[1:, None] * loc
    w = sphere_area(mesh.n) * wts * x ** (mesh.n - 1)
    return v, w


def stampacchia_diagnostic(u: DiscreteField, f: DiscreteField, spec: ProblemSpec, r_exp: float,
                           delta: float | None = None, K: int = 20) -> StampacchiaReport:
    """Run the level-truncation sequence on a computed solution.

    u~ = delta^{1/p - 1} u / (||u||_{p*} + ||f||_r), C_k = 1 - 2^{-k} and
    U_k = ||(u~ - C_k)^+||_{p*}^p, with p* = np/(n - p).  Without an explicit
    ``delta`` one is chosen so that max u~ = 1 - 2^{-K/2}.  ``gamma_fit`` comes
    from a least-squares fit of log U_{k+1} = k log C_hat + gamma log U_k over
    the positive terms.  ``bound`` is (||u||_{p*} + ||f||_r)/delta checked at
    every node; ``rescaled_bound`` is the bound implied by u~ <= 1.
    """
    if not 0.0 <= spec.beta < 1.0:
        raise DomainError("the truncation argument needs beta in [0, 1)")
    n, p = spec.n, spec.p
    if not r_exp > n / p:
        raise ExponentTooSmall(f"r = {r_exp} must exceed n/p = {n / p}")
    p_star = n * p / (n - p)
    tau = stampacchia_tau(p_star, r_exp)
    A = lebesgue_norm(u, p_star) + lebesgue_norm(f, r_exp)
    umax = float(np.max(u.values))
    if delta is None:
        target = 1.0 - 2.0 ** (-K / 2.0)
        # delta^{1/p - 1} umax / A = target
        delta = (target * A / umax) ** (1.0 / (1.0 / p - 1.0)) if umax > 0 else 1.0
    if not delta > 0:
        raise DomainError("delta must be positive")
    scale = delta ** (1.0 / p - 1.0) / A
    v, w = _gauss_values(u)
    ut = scale * v
    C = [1.0 - 2.0 ** (-k) for k in range(K + 1)]
    U = [float(np.sum(w * np.maximum(ut - c, 0.0) ** p_star) ** (p / p_star)) for c in C]

    pos = [k for k in range(K) if U[k] > 0 and U[k + 1] > 0]
    if len(pos) >= 3:
        X = np.column_stack([np.array(pos, float), np.log([U[k] for k in pos])])
        y = np.log([U[k + 1] for k in pos])
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        logC, gam = float(coef[0]), float(coef[1])
    else:
        logC, gam = math.nan, math.nan
    bound = A / delta
    rbound = A * delta ** (1.0 - 1.0 / p)
    return StampacchiaReport(
        C_k=C,
        U_k=U,
        gamma_fit=gam,
        log_C_hat_fit=logC,
        gamma_theory=1.0 / p + p_star / (tau * p),
        tau=tau,
        p_star=p_star,
        delta=float(delta),
        scale=float(scale),
        bound=float(bound),
        bound_holds=bool(np.all(u.values <= bound)),
        rescaled_bound=float(rbound),
        rescaled_bound_holds=bool(np.all(u.values <= rbound * (1 + 1e-12))),
        max_u=umax,
        U_nonincreasing=bool(np.all(np.diff(U) <= 0.0)),
        U_vanishes=bool(U[-1] == 0.0 or U[-1] < 1e-300),
    )


def henon_source(u: DiscreteField, spec: ProblemSpec) -> DiscreteField:
    """f = |x|^alpha (u^+)^{q-1}, the right-hand side solved by u."""
    r = u.mesh.nodes
    return DiscreteField(u.mesh, r**spec.alpha * np.maximum(u.values, 0.0) ** (spec.q - 1.0))
