import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from famtree.core import Label, ModelKind, parse_label
from famtree.stats import (
    empirical_moments,
    enumerate_exact,
    ks_band,
    ks_band_two_sample,
    ks_one_sample,
    ks_two_sample,
)


def test_enumeration_examples():
    m = ModelKind.linear(0.0)
    assert enumerate_exact(m, 3, Label(())).probs == {1: 0.5, 2: 0.5}
    assert enumerate_exact(m, 4, Label(()))[3] == pytest.approx(0.25, abs=1e-15)
    for model in (m, ModelKind.linear(-0.5), ModelKind.port(2.0)):
        assert enumerate_exact(model, 2, Label(())).probs == {1: 1.0}


def test_enumeration_hand_computed_port():
    # G_3 under PORT beta=1: root picked w.p. 2/3 at the second step
    d = enumerate_exact(ModelKind.port(1.0), 3, Label(()))
    assert d[2] == pytest.approx(2 / 3, abs=1e-15)
    assert d[1] == pytest.approx(1 / 3, abs=1e-15)


def test_enumeration_unborn_label_has_degree_zero():
    d = enumerate_exact(ModelKind.linear(0.0), 3, parse_label("2"))
    assert d[0] == pytest.approx(0.5)
    assert d[1] == pytest.approx(0.5)


@pytest.mark.parametrize("n", range(1, 8))
def test_enumeration_normalized(model, n):
    for lab in ("root", "1", "2", "1.1"):
        d = enumerate_exact(model, n, parse_label(lab))
        assert abs(math.fsum(d.probs.values()) - 1) <= 1e-12
        assert all(p >= 0 for p in d.probs.values())


def test_enumeration_mean_matches_recursion():
    # E[deg(root)+beta] obeys E[X_{n+1}+beta] = (E[X_n]+beta)(1 + 1/S_n)
    beta = 0.5
    m = ModelKind.linear(beta)
    ex = 1.0 + beta  # n = 2
    for n in range(2, 9):
        assert enumerate_exact(m, n, Label(())).mean() + beta == pytest.approx(ex, rel=1e-12)
        ex *= 1 + 1 / (2 * n - 2 + n * beta)


def test_enumeration_too_large():
    with pytest.raises(ValueError):
        enumerate_exact(ModelKind.linear(0.0), 10, Label(()))


def test_moment_examples():
    est = empirical_moments(np.ones(10), [3])[0]
    assert (est.estimate, est.se) == (1.0, 0.0)
    assert empirical_moments([1.0, 2.0], [0])[0].estimate == 1.0
    u = np.random.default_rng(2).random(10**6)
    est = empirical_moments(u, [2])[0]
    assert abs(est.estimate - 1 / 3) <= 3 * est.se
    with pytest.raises(ValueError):
        empirical_moments([1.0], [1])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=50), st.sampled_from([0.5, 2.0, 4.0]),
       st.integers(1, 4))
def test_moment_scaling(xs, c, k):
    a = empirical_moments(xs, [k])[0].estimate
    b = empirical_moments(np.asarray(xs) * c, [k])[0].estimate
    assert b == pytest.approx(c**k * a, rel=1e-12)


def test_ks_one_sample_examples():
    assert ks_one_sample([0.5], lambda t: t).distance == pytest.approx(0.5)
    assert ks_one_sample(np.full(20, 0.3), lambda t: t).distance == pytest.approx(0.7)
    x = np.random.default_rng(8).random(10**4)
    assert ks_one_sample(x, lambda t: t).distance < ks_band(10**4)


def test_ks_one_sample_against_scipy():
    rng = np.random.default_rng(3)
    for m in (1, 5, 100, 3000):
        x = rng.standard_normal(m)
        ours = ks_one_sample(x, sps.norm.cdf).distance
        assert ours == pytest.approx(sps.kstest(x, "norm").statistic, abs=1e-14)


def test_ks_one_sample_rejects_bad_cdf():
    with pytest.raises(ValueError):
        ks_one_sample([1.0, 2.0], lambda t: t)  # value 2 > 1
    with pytest.raises(ValueError):
        ks_one_sample([0.1, 0.2], lambda t: 1 - t)


def test_ks_two_sample_examples():
    a = np.random.default_rng(1).random(50)
    assert ks_two_sample(a, a) == 0.0
    assert ks_two_sample([0.0], [1.0]) == 1.0
    rng = np.random.default_rng(4)
    assert ks_two_sample(rng.random(10**4), rng.random(10**4)) < ks_band_two_sample(10**4, 10**4)
    with pytest.raises(ValueError):
        ks_two_sample([], [1.0])


def test_ks_two_sample_against_scipy():
    rng = np.random.default_rng(5)
    for m1, m2 in [(1, 1), (10, 37), (500, 400)]:
        a, b = rng.standard_normal(m1), rng.standard_normal(m2) + 0.1
        assert ks_two_sample(a, b) == pytest.approx(sps.ks_2samp(a, b).statistic, abs=1e-14)
    # ties
    a, b = rng.integers(0, 5, 200), rng.integers(0, 6, 150)
    assert ks_two_sample(a, b) == pytest.approx(sps.ks_2samp(a, b).statistic, abs=1e-14)


@settings(max_examples=50, deadline=None)
# integer samples keep both maps strictly increasing in floating point
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=40),
       st.lists(st.integers(-50, 50), min_size=1, max_size=40))
def test_ks_two_sample_invariant_under_monotone_maps(a, b):
    d = ks_two_sample(a, b)
    assert ks_two_sample(np.exp(np.asarray(a) / 10), np.exp(np.asarray(b) / 10)) == pytest.approx(d)
    assert ks_two_sample(np.asarray(a) ** 3, np.asarray(b) ** 3) == pytest.approx(d)
