"""Problem parameters, critical exponents and regime classification."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

from .errors import DomainError

NORMALIZATIONS = ("bbm", "dominated")

EXISTENCE = "Existence"
NONEXISTENCE = "Nonexistence"
CRITICAL = "Critical"


@dataclass(frozen=True)
class ProblemSpec:
    """Parameter tuple (n, s, p, q, alpha, beta) of the Henon problem on the unit ball.

    ``normalization`` selects the constant in front of the Gagliardo double
    integral: ``bbm`` recovers the gradient energy as s -> 1, ``dominated``
    makes the seminorm bounded by the gradient norm.
    """

    n: int
    s: float
    p: float
    q: float
    alpha: float = 0.0
    beta: float = 0.0
    normalization: str = "bbm"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"n must be an integer >= 2, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not 0.0 < self.s < 1.0:
            raise DomainError(f"s must lie in (0, 1), got {self.s}")
        if not self.p > 1.0:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if not self.q > self.p:
            raise DomainError(f"q must exceed p, got q={self.q}, p={self.p}")
        if not self.alpha >= 0.0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError(f"beta must lie in [0, 1], got {self.beta}")
        if self.normalization not in NORMALIZATIONS:
            raise DomainError(f"unknown normalization {self.normalization!r}")
        check_dimension(self)

    @property
    def pure_nonlocal(self) -> bool:
        # exact comparison on purpose: the exponents jump at beta = 1
        return self.beta == 1.0

    def replace(self, **changes) -> "ProblemSpec":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def spec_hash(self) -> str:
        payload = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:12]


@dataclass(frozen=True)
class RegimeReport:
    p_star_beta: float
    p_star_beta_alpha: float
    regime: str
    alpha_boundedness_threshold: float
    s_boundedness_bound: float
    embedding_r_bound: float

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def check_dimension(spec: ProblemSpec) -> None:
    if spec.pure_nonlocal:
        if not spec.n > spec.s * spec.p:
            raise DomainError(f"beta = 1 needs n > s*p (n={spec.n}, sp={spec.s * spec.p})")
    elif not spec.n > spec.p:
        raise DomainError(f"beta < 1 needs n > p (n={spec.n}, p={spec.p})")


def _order(spec: ProblemSpec) -> float:
    """Differentiability order of the energy space: s for beta = 1, else 1."""
    return spec.s if spec.pure_nonlocal else 1.0


def critical_exponent(spec: ProblemSpec) -> float:
    """Sobolev exponent np/(n - p) (beta < 1) or np/(n - sp) (beta = 1)."""
    check_dimension(spec)
    n, p = spec.n, spec.p
    return n * p / (n - _order(spec) * p)


def henon_critical_exponent(spec: ProblemSpec) -> float:
    """Weighted threshold (n + alpha) p / (n - p) or (n + alpha) p / (n - sp)."""
    check_dimension(spec)
    n, p = spec.n, spec.p
    return (n * p + spec.alpha * p) / (n - _order(spec) * p)


def alpha_boundedness_threshold(spec: ProblemSpec) -> float:
    n, p, q = spec.n, spec.p, spec.q
    if spec.pure_nonlocal:
        s = spec.s
        return max(0.0, (q - 1.0) * (n / p - s) - s * p)
    return max(0.0, (q - 1.0) * (n / p - 1.0) - p)


def s_boundedness_bound(spec: ProblemSpec) -> float:
    n, p, q = spec.n, spec.p, spec.q
    return (n / p) * (q - 1.0) / (p + q - 1.0)


def embedding_r_bound(spec: ProblemSpec) -> float:
    """Upper exponent r for the compact radial embedding into L^r(|x|^alpha, B)."""
    n, p, a = spec.n, spec.p, spec.alpha
    t = _order(spec)
    if a < (n - t * p) / p:
        return n * p / (n - t * p - a * p)
    return math.inf


def classify_regime(spec: ProblemSpec, rel_tol: float = 1e-12) -> RegimeReport:
    """Place ``spec`` in the existence, non-existence or critical regime.

    Equality with the weighted threshold is decided with a relative tolerance
    of ``rel_tol`` so that a q computed from ``henon_critical_exponent`` lands
    in the critical regime despite round-off.
    """
    ps = critical_exponent(spec)
    psa = henon_critical_exponent(spec)
    if math.isclose(spec.q, psa, rel_tol=rel_tol, abs_tol=0.0):
        regime = CRITICAL
    elif spec.q < psa:
        regime = EXISTENCE
    else:
        regime = NONEXISTENCE
    return RegimeReport(
        p_star_beta=ps,
        p_star_beta_alpha=psa,
        regime=regime,
        alpha_boundedness_threshold=alpha_boundedness_threshold(spec),
        s_boundedness_bound=s_boundedness_bound(spec),
        embedding_r_bound=embedding_r_bound(spec),
    )
