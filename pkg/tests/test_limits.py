import math

import mpmath
import numpy as np
import pytest

from famtree.core import Label, ModelKind, parse_label
from famtree.engine import run_replicates
from famtree.limits import (
    BetaFactor,
    UnsupportedLawError,
    beta_factor_moment,
    limit_law,
    port_martingale_step_error,
    port_martingale_value,
    port_normalizer,
    sample_limit_special,
    zeta0_moment_linear,
    zeta0_moment_linear_factorial_form,
    zeta0_moment_port,
    zeta0_special_cdf,
    zetax_moment,
)
from famtree.stats import empirical_moments, ks_one_sample

mpmath.mp.dps = 40


def mp_linear(k, beta):
    beta = mpmath.mpf(beta)
    r = 2 + beta
    return (mpmath.gamma(1 + beta / r) / mpmath.gamma(beta + 1)
            * mpmath.gamma(k + beta + 1) / mpmath.gamma(1 + (k + beta) / r))


def mp_port(k, beta):
    beta = mpmath.mpf(beta)
    r = 1 + beta
    return mpmath.gamma(beta / r) * mpmath.gamma(k + beta) / (mpmath.gamma((k + beta) / r) * mpmath.gamma(beta))


def test_linear_examples():
    assert zeta0_moment_linear(2, 0.0) == pytest.approx(2.0, rel=1e-14)
    assert zeta0_moment_linear(1, 0.0) == pytest.approx(1.1283791670955126, rel=1e-14)
    assert zeta0_moment_linear(1, 0.0) == pytest.approx(float(2 / mpmath.sqrt(mpmath.pi)), rel=1e-14)


def test_port_examples():
    assert zeta0_moment_port(2, 1.0) == pytest.approx(4.0, rel=1e-14)
    assert zeta0_moment_port(1, 1.0) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


@pytest.mark.parametrize("beta", [-0.5, -0.1, 0.0, 0.5, 1.0, 2.0, 7.5])
def test_linear_against_mpmath(beta):
    for k in range(1, 11):
        assert zeta0_moment_linear(k, beta) == pytest.approx(float(mp_linear(k, beta)), rel=1e-12)


@pytest.mark.parametrize("beta", [0.1, 0.5, 1.0, 2.0, 7.5])
def test_port_against_mpmath(beta):
    for k in range(1, 11):
        assert zeta0_moment_port(k, beta) == pytest.approx(float(mp_port(k, beta)), rel=1e-12)


def test_both_forms_agree():
    for beta in (-0.5, 0.0, 0.5, 1.0, 2.0):
        for k in range(1, 9):
            a = zeta0_moment_linear(k, beta)
            b = zeta0_moment_linear_factorial_form(k, beta)
            assert abs(a / b - 1) <= 1e-12


def test_even_moments_are_double_factorials():
    for k in range(1, 7):
        dfact = math.prod(range(1, 2 * k, 2))
        assert abs(zeta0_moment_linear(2 * k, 0.0) / 2**k / dfact - 1) <= 1e-10


def test_large_orders_are_finite():
    for k in (20, 35, 50):
        assert 0 < zeta0_moment_linear(k, 1.0) < math.inf
        assert 0 < zeta0_moment_port(k, 0.5) < math.inf


def test_beta_factor_examples():
    assert beta_factor_moment(1, 1, 2) == pytest.approx(1 / 3)
    assert beta_factor_moment(1, 1, 1) == pytest.approx(1 / 2)
    assert beta_factor_moment(2.5, 0, 3) == 1.0


def test_limit_law_factors():
    law = limit_law(ModelKind.linear(0.5), parse_label("1.3.2"))
    assert law.factors == (BetaFactor(1.5, 0), BetaFactor(1.5, 3), BetaFactor(1.5, 2))
    assert law.factors[0].degenerate
    law = limit_law(ModelKind.port(0.5), parse_label("1.3"))
    assert law.factors == (BetaFactor(0.5, 1), BetaFactor(0.5, 3))
    assert law.scaling_exponent == pytest.approx(1 / 1.5)
    assert limit_law(ModelKind.linear(1.0), Label(())).factors == ()


def test_zetax_examples():
    m = ModelKind.linear(0.0)
    assert zetax_moment(limit_law(m, "1"), 2) == pytest.approx(2.0)
    assert zetax_moment(limit_law(m, "2"), 2) == pytest.approx(2 / 3)
    for model in (ModelKind.linear(0.7), ModelKind.port(0.7)):
        for k in (1, 3):
            root = zeta0_moment_port(k, 0.7) if model.is_port else zeta0_moment_linear(k, 0.7)
            assert zetax_moment(limit_law(model, Label(())), k) == root


def test_special_sampler_root_moment():
    law = limit_law(ModelKind.linear(0.0), Label(()))
    x = sample_limit_special(law, 1, 10**6)
    est = empirical_moments(x, [2])[0]
    assert abs(est.estimate - 2.0) <= 3 * est.se


@pytest.mark.parametrize("model,label", [
    (ModelKind.linear(0.0), "2"), (ModelKind.linear(0.0), "3.1"),
    (ModelKind.port(1.0), "root"), (ModelKind.port(1.0), "2.2"),
])
def test_special_sampler_matches_moments(model, label):
    law = limit_law(model, label)
    x = sample_limit_special(law, 7, 400_000)
    for est in empirical_moments(x, [1, 2, 3]):
        assert abs(est.estimate - zetax_moment(law, est.k)) <= 3 * est.se


def test_special_cdfs():
    x = sample_limit_special(limit_law(ModelKind.port(1.0), Label(())), 3, 10**4)
    assert ks_one_sample(x, zeta0_special_cdf(ModelKind.port(1.0))).distance < 1.63 / 100
    x = sample_limit_special(limit_law(ModelKind.linear(0.0), Label(())), 3, 10**4)
    assert ks_one_sample(x, zeta0_special_cdf(ModelKind.linear(0.0))).distance < 1.63 / 100
    assert zeta0_special_cdf(ModelKind.linear(0.5)) is None


def test_sampler_deterministic():
    law = limit_law(ModelKind.port(1.0), "2")
    assert np.array_equal(sample_limit_special(law, 5, 100), sample_limit_special(law, 5, 100))


def test_unsupported_sampler():
    with pytest.raises(UnsupportedLawError, match="moments"):
        sample_limit_special(limit_law(ModelKind.linear(0.5), Label(())), 1, 10)


def test_port_normalizer_examples():
    assert port_normalizer(1, 3, 0.5) == 1.0
    assert port_normalizer(2, 1, 1.0) == pytest.approx(2.0)
    direct = math.prod(1 + 2 / (i * 1.5 - 1) for i in range(1, 30))
    assert port_normalizer(30, 2, 0.5) == pytest.approx(direct, rel=1e-12)


def test_port_normalizer_growth():
    for k, beta in [(1, 1.0), (2, 0.5), (3, 2.0)]:
        ratios = [port_normalizer(n, k, beta) / n ** (k / (1 + beta)) for n in (10**4, 10**5, 10**6)]
        assert abs(ratios[2] / ratios[1] - 1) < abs(ratios[1] / ratios[0] - 1) + 1e-12
        assert abs(ratios[2] / ratios[1] - 1) < 1e-3


def test_martingale_examples():
    assert port_martingale_value(0, 1, 1, 1.0) == pytest.approx(1.0)
    assert all(port_martingale_value(x, n, 3, 0.5) >= 0 for x in range(10) for n in range(1, 10))


def test_martingale_identity_grid():
    worst = max(port_martingale_step_error(x, n, k, b)
                for x in range(21) for n in range(1, 51) for k in range(1, 5) for b in (0.5, 1.0, 2.0))
    assert worst <= 1e-12


def test_martingale_identity_high_precision():
    # independent check of the algebra in 40-digit arithmetic
    for x, n, k, beta in [(0, 1, 1, 0.5), (3, 7, 2, 1.0), (12, 30, 4, 2.0)]:
        beta = mpmath.mpf(beta)

        def z(xv, nv):
            c = mpmath.fprod(1 + k / (i * (1 + beta) - 1) for i in range(1, nv))
            return mpmath.binomial(xv + k + beta - 1, k) / c

        s = n * (1 + beta) - 1
        p = (x + beta) / s
        assert abs(p * z(x + 1, n + 1) + (1 - p) * z(x, n + 1) - z(x, n)) < mpmath.mpf(10) ** -30
        assert port_martingale_value(x, n, k, float(beta)) == pytest.approx(float(z(x, n)), rel=1e-12)


def test_martingale_mean_constant_in_simulation():
    # E[Z_n] = Z_1 along the PORT root degree
    beta, k, n = 1.0, 2, 400
    rs = run_replicates(ModelKind.port(beta), n, 31, 20_000, watched=[Label(())], checkpoints=[n])
    z = np.array([port_martingale_value(int(x), n, k, beta) for x in rs.degrees[:, 0, 0]])
    z1 = port_martingale_value(0, 1, k, beta)
    assert abs(z.mean() - z1) <= 4 * z.std(ddof=1) / math.sqrt(len(z))
