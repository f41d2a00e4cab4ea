import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from henonlab import ProblemSpec, classify_regime, critical_exponent, henon_critical_exponent
from henonlab.errors import DomainError


@pytest.mark.parametrize(
    "kwargs, expected",
    [
        (dict(n=3, s=0.5, p=2.0, q=3.0, beta=0.0), 6.0),
        (dict(n=3, s=0.5, p=2.0, q=3.0, beta=1.0), 3.0),
        (dict(n=4, s=0.5, p=2.0, q=3.0, beta=0.5), 4.0),
    ],
)
def test_critical_exponent_examples(kwargs, expected):
    assert critical_exponent(ProblemSpec(**kwargs)) == expected


@pytest.mark.parametrize(
    "kwargs, expected",
    [
        (dict(n=3, s=0.5, p=2.0, q=3.0, alpha=1.0, beta=0.5), 8.0),
        (dict(n=3, s=0.5, p=2.0, q=3.0, alpha=1.0, beta=1.0), 4.0),
        (dict(n=3, s=0.5, p=2.0, q=3.0, alpha=0.0, beta=0.0), 6.0),
    ],
)
def test_henon_exponent_examples(kwargs, expected):
    assert henon_critical_exponent(ProblemSpec(**kwargs)) == expected


def test_regime_report_examples():
    assert classify_regime(ProblemSpec(6, 0.5, 2.0, 5.0, beta=0.0)).alpha_boundedness_threshold == 6.0
    assert math.isclose(classify_regime(ProblemSpec(3, 0.5, 2.0, 4.0, beta=1.0)).s_boundedness_bound, 0.9)
    assert math.isclose(classify_regime(ProblemSpec(3, 0.5, 2.0, 4.0, alpha=0.4, beta=1.0)).embedding_r_bound, 5.0)


def test_embedding_bound_infinite_for_large_alpha():
    assert classify_regime(ProblemSpec(3, 0.5, 2.0, 4.0, alpha=2.0, beta=0.5)).embedding_r_bound == math.inf


@pytest.mark.parametrize(
    "q, regime", [(4.0, "Existence"), (8.0, "Critical"), (9.0, "Nonexistence")]
)
def test_regimes(q, regime):
    assert classify_regime(ProblemSpec(3, 0.5, 2.0, q, alpha=1.0, beta=0.5)).regime == regime


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=1, s=0.5, p=2.0, q=3.0),
        dict(n=3, s=0.0, p=2.0, q=3.0),
        dict(n=3, s=1.0, p=2.0, q=3.0),
        dict(n=3, s=0.5, p=1.0, q=3.0),
        dict(n=3, s=0.5, p=2.0, q=2.0),
        dict(n=3, s=0.5, p=2.0, q=3.0, alpha=-1.0),
        dict(n=3, s=0.5, p=2.0, q=3.0, beta=1.5),
        dict(n=3, s=0.5, p=3.0, q=4.0, beta=0.5),  # n > p fails
        dict(n=3, s=0.5, p=2.0, q=3.0, normalization="other"),
    ],
)
def test_invalid_specs(kwargs):
    with pytest.raises(DomainError):
        ProblemSpec(**kwargs)


def test_beta_one_only_on_exact_match():
    near = ProblemSpec(3, 0.5, 2.0, 3.0, beta=1.0 - 1e-15)
    assert critical_exponent(near) == 6.0
    assert critical_exponent(near.replace(beta=1.0)) == 3.0


def test_spec_hash_stable_and_sensitive():
    a = ProblemSpec(3, 0.5, 2.0, 4.0, alpha=1.0, beta=0.5)
    assert a.spec_hash() == ProblemSpec(3, 0.5, 2.0, 4.0, alpha=1.0, beta=0.5).spec_hash()
    assert a.spec_hash() != a.replace(q=4.5).spec_hash()


specs = st.builds(
    lambda n, s, p_frac, alpha, beta: (n, s, 1.0 + p_frac * (n - 1.0), alpha, beta),
    st.integers(3, 8),
    st.floats(0.05, 0.95),
    st.floats(0.05, 0.9),
    st.floats(0.0, 10.0),
    st.sampled_from([0.0, 0.3, 0.7, 1.0]),
)


@given(specs, st.floats(0.01, 5.0))
def test_henon_exponent_increasing_in_alpha(args, da):
    n, s, p, alpha, beta = args
    a = ProblemSpec(n, s, p, p + 0.5, alpha=alpha, beta=beta)
    b = a.replace(alpha=alpha + da)
    assert henon_critical_exponent(b) > henon_critical_exponent(a)
    assert critical_exponent(a) <= henon_critical_exponent(a)


@given(st.integers(3, 8), st.floats(0.05, 0.9), st.floats(0.01, 0.09))
def test_henon_exponent_increasing_in_s_at_beta_one(n, s, ds):
    a = ProblemSpec(n, s, 2.0, 2.5, alpha=1.0, beta=1.0)
    assert henon_critical_exponent(a.replace(s=s + ds)) > henon_critical_exponent(a)


@given(specs)
def test_critical_exponent_is_classified_critical(args):
    n, s, p, alpha, beta = args
    base = ProblemSpec(n, s, p, p + 0.5, alpha=alpha, beta=beta)
    q = henon_critical_exponent(base)
    assert classify_regime(base.replace(q=q)).regime == "Critical"


@given(st.integers(3, 8), st.floats(1.1, 2.0), st.floats(2.2, 8.0), st.floats(0.0, 3.0))
def test_alpha_threshold_vacuous_above_bound(n, p, q_extra, slack):
    p = min(p, n - 0.5)
    q = p + q_extra
    alpha = (n / p - 1.0) * (q - 1.0) + slack
    rep = classify_regime(ProblemSpec(n, 0.5, p, q, alpha=alpha, beta=0.5))
    assert rep.alpha_boundedness_threshold <= alpha
