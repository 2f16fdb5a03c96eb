"""Closed-form limit laws for the normalized degree of a fixed vertex.

The limit of ``deg(x, G_n) / n**delta`` is distributed as the root limit
``zeta0`` times independent Beta factors, one per coordinate of ``x``. For
general beta only the moments of ``zeta0`` are known; exact samplers exist
for the linear model with beta=0 (``sqrt(2)|N(0,1)|``) and for the PORT
model with beta=1 (``2 sqrt(Exp(1))``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .core import Label, ModelKind, SeedLike, as_label, make_rng


class UnsupportedLawError(ValueError):
    pass


@dataclass(frozen=True)
class BetaFactor:
    a: float
    b: float  # b == 0 encodes the degenerate factor identically 1

    @property
    def degenerate(self) -> bool:
        return self.b == 0


@dataclass(frozen=True)
class LimitLaw:
    model: ModelKind
    label: Label
    scaling_exponent: float
    factors: tuple[BetaFactor, ...]

    def moment(self, k: int) -> float:
        return zetax_moment(self, k)


def limit_law(model: ModelKind, label) -> LimitLaw:
    label = as_label(label)
    beta = model.beta
    factors = []
    for s, xs in enumerate(label.path):
        if model.is_port:
            factors.append(BetaFactor(beta, xs))
        elif s == 0:
            factors.append(BetaFactor(1 + beta, xs - 1))
        else:
            factors.append(BetaFactor(1 + beta, xs))
    return LimitLaw(model, label, model.scaling_exponent, tuple(factors))


def zeta0_moment_linear(k: int, beta: float) -> float:
    """k-th moment of the root limit, linear model (log-gamma form)."""
    _check_k(k)
    if not beta > -1:
        raise ValueError(f"beta must be > -1, got {beta}")
    r = 2.0 + beta
    log_m = (gammaln(1 + beta / r) - gammaln(beta + 1)
             + gammaln(k + beta + 1) - gammaln(1 + (k + beta) / r))
    return float(math.exp(log_m))


def zeta0_moment_linear_factorial_form(k: int, beta: float) -> float:
    """Same moment written as k! * Gamma ratio * C(k+beta, k).

    The generalized binomial is expanded as a finite product, so this is an
    independent evaluation of the log-gamma form.
    """
    _check_k(k)
    r = 2.0 + beta
    binom = 1.0
    for i in range(1, k + 1):
        binom *= (beta + i) / i
    return math.factorial(k) * math.exp(gammaln(1 + beta / r) - gammaln(1 + (k + beta) / r)) * binom


def zeta0_moment_port(k: int, beta: float) -> float:
    _check_k(k)
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    r = 1.0 + beta
    log_m = gammaln(beta / r) + gammaln(k + beta) - gammaln((k + beta) / r) - gammaln(beta)
    return float(math.exp(log_m))


def zeta0_moment(model: ModelKind, k: int) -> float:
    if model.is_port:
        return zeta0_moment_port(k, model.beta)
    return zeta0_moment_linear(k, model.beta)


def beta_factor_moment(a: float, b: float, k: int) -> float:
    if not a > 0 or b < 0:
        raise ValueError(f"need a > 0 and b >= 0, got a={a}, b={b}")
    if b == 0:
        return 1.0
    return float(math.exp(gammaln(a + k) + gammaln(a + b) - gammaln(a) - gammaln(a + b + k)))


def zetax_moment(law: LimitLaw, k: int) -> float:
    m = zeta0_moment(law.model, k)
    for f in law.factors:
        m *= beta_factor_moment(f.a, f.b, k)
    return m


def has_special_sampler(model: ModelKind) -> bool:
    return (not model.is_port and model.beta == 0.0) or (model.is_port and model.beta == 1.0)


def sample_zeta0_special(model: ModelKind, rng: np.random.Generator, count: int) -> np.ndarray:
    if not model.is_port and model.beta == 0.0:
        return math.sqrt(2.0) * np.abs(rng.standard_normal(count))
    if model.is_port and model.beta == 1.0:
        return 2.0 * np.sqrt(rng.standard_exponential(count))
    raise UnsupportedLawError(
        f"no closed-form sampler for the root limit of {model}; "
        "only its moments are known, validate with zetax_moment instead"
    )


def sample_limit_special(law: LimitLaw, seed: SeedLike, count: int) -> np.ndarray:
    """i.i.d. draws of the limit law; only for linear beta=0 and PORT beta=1."""
    rng = make_rng(seed)
    x = sample_zeta0_special(law.model, rng, count)
    for f in law.factors:
        if not f.degenerate:
            x *= rng.beta(f.a, f.b, count)
    return x


def zeta0_special_cdf(model: ModelKind) -> Optional[Callable[[np.ndarray], np.ndarray]]:
    """CDF of the root limit when its law is known in closed form, else None."""
    from scipy.special import erf

    if not model.is_port and model.beta == 0.0:
        # sqrt(2)|N|: P(<= t) = erf(t / 2)
        return lambda t: np.where(np.asarray(t) > 0, erf(np.maximum(t, 0) / 2.0), 0.0)
    if model.is_port and model.beta == 1.0:
        # 2 sqrt(Exp(1)): P(<= t) = 1 - exp(-t^2/4)
        return lambda t: np.where(np.asarray(t) > 0, -np.expm1(-np.square(t) / 4.0), 0.0)
    return None


def port_normalizer(n: int, k: int, beta: float) -> float:
    """c_n(k) = prod_{i=1}^{n-1} (1 + k / (i(1+beta) - 1))."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n == 1:
        return 1.0
    i = np.arange(1, n, dtype=np.float64)
    return float(np.exp(np.sum(np.log1p(k / (i * (1.0 + beta) - 1.0)))))


def _log_gen_binom(x: float, k: int) -> float:
    # log C(x, k) = log Gamma(x+1) - log Gamma(k+1) - log Gamma(x-k+1), x - k + 1 > 0
    return gammaln(x + 1) - gammaln(k + 1) - gammaln(x - k + 1)


def port_martingale_value(x_n: int, n: int, k: int, beta: float) -> float:
    """Z_n = C(X_n + k + beta - 1, k) / c_n(k); a martingale for the PORT root degree."""
    if x_n < 0:
        raise ValueError(f"degree must be nonnegative, got {x_n}")
    return float(math.exp(_log_gen_binom(x_n + k + beta - 1, k)) / port_normalizer(n, k, beta))


def port_martingale_step_error(x_n: int, n: int, k: int, beta: float) -> float:
    """Relative gap between E[Z_{n+1} | X_n] and Z_n, from the PORT transition law.

    The root (out-degree = degree) is chosen with probability (X_n+beta)/S_n,
    S_n = n(1+beta) - 1.
    """
    s_n = n * (1.0 + beta) - 1.0
    p = (x_n + beta) / s_n
    z_now = port_martingale_value(x_n, n, k, beta)
    z_up = port_martingale_value(x_n + 1, n + 1, k, beta)
    z_stay = port_martingale_value(x_n, n + 1, k, beta)
    expected = p * z_up + (1.0 - p) * z_stay
    return abs(expected - z_now) / z_now


def _check_k(k: int) -> None:
    if int(k) != k or k < 1:
        raise ValueError(f"moment order must be a positive integer, got {k}")
