"""Validation toolkit: exact small-n enumeration, moment estimates, KS distances."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Label, ModelKind, as_label

MAX_ENUM_N = 9


@dataclass(frozen=True)
class MomentEstimate:
    k: int
    estimate: float
    se: float
    m: int


@dataclass
class ExactDistribution:
    """Exact law of ``deg(label, G_n)``."""

    model: ModelKind
    n: int
    label: Label
    probs: dict[int, float]

    def __getitem__(self, d: int) -> float:
        return self.probs.get(d, 0.0)

    def support(self) -> list[int]:
        return sorted(self.probs)

    def mean(self) -> float:
        return math.fsum(d * p for d, p in self.probs.items())


@dataclass(frozen=True)
class KSResult:
    distance: float
    m: int


def enumerate_exact(model: ModelKind, n: int, label) -> ExactDistribution:
    """Sum path probabilities over every growth history of length ``n``.

    Brute force: (n-1)! histories at most, so ``n`` is capped at 9. Does not
    share code with the simulation engine.
    """
    label = as_label(label)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > MAX_ENUM_N:
        raise ValueError(f"n={n} too large for exhaustive enumeration (max {MAX_ENUM_N})")
    beta = model.beta
    port = model.is_port
    leaves: dict[int, list[float]] = defaultdict(list)

    def weight(labels, deg, i):
        d = deg[i] - (1 if (port and labels[i]) else 0)
        return d + beta

    def visit(labels, deg, children, prob):
        if len(labels) == n:
            try:
                i = labels.index(label.path)
                leaves[deg[i]].append(prob)
            except ValueError:
                leaves[0].append(prob)
            return
        if len(labels) == 1:
            choices = [(0, 1.0)]
        else:
            ws = [weight(labels, deg, i) for i in range(len(labels))]
            s = math.fsum(ws)
            choices = [(i, wi / s) for i, wi in enumerate(ws) if wi > 0]
        for i, p in choices:
            children[i] += 1
            deg[i] += 1
            labels.append(labels[i] + (children[i],))
            deg.append(1)
            children.append(0)
            visit(labels, deg, children, prob * p)
            labels.pop()
            deg.pop()
            children.pop()
            deg[i] -= 1
            children[i] -= 1

    visit([()], [0], [0], 1.0)
    probs = {d: math.fsum(ps) for d, ps in sorted(leaves.items())}
    return ExactDistribution(model, n, label, probs)


def empirical_moments(samples, orders: Iterable[int]) -> list[MomentEstimate]:
    """Raw moments with standard error ``std(x**k) / sqrt(m)``."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    m = x.size
    if m < 2:
        raise ValueError(f"need at least 2 samples, got {m}")
    out = []
    for k in orders:
        k = int(k)
        if k == 0:
            out.append(MomentEstimate(0, 1.0, 0.0, m))
            continue
        xk = x**k
        est = float(np.mean(xk))
        se = float(np.std(xk, ddof=1) / math.sqrt(m))
        out.append(MomentEstimate(k, est, se, m))
    return out


def ks_one_sample(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> KSResult:
    """Exact sup-distance between the empirical CDF of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=np.float64).ravel())
    m = x.size
    if m == 0:
        raise ValueError("no samples")
    f = np.asarray(cdf(x), dtype=np.float64)
    if f.shape != x.shape:
        f = np.array([float(cdf(v)) for v in x])
    if np.any(~np.isfinite(f)) or np.any(f < 0) or np.any(f > 1):
        raise ValueError("cdf values must lie in [0, 1]")
    if np.any(np.diff(f) < -1e-12):
        raise ValueError("cdf must be nondecreasing")
    i = np.arange(1, m + 1)
    d_plus = np.max(i / m - f)
    d_minus = np.max(f - (i - 1) / m)
    return KSResult(float(max(d_plus, d_minus)), m)


def ks_two_sample(a, b) -> float:
    """Sup-distance between the empirical CDFs of ``a`` and ``b``."""
    a = np.sort(np.asarray(a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    grid = np.concatenate([a, b])
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_band(m: int, coef: float = 1.63) -> float:
    """Asymptotic one-sample KS band ``coef / sqrt(m)`` (1.63 ~ alpha 0.01)."""
    return coef / math.sqrt(m)


def ks_band_two_sample(m1: int, m2: int, coef: float = 1.63) -> float:
    return coef * math.sqrt((m1 + m2) / (m1 * m2))


def frequencies(values: Sequence[int]) -> dict[int, float]:
    v = np.asarray(values, dtype=np.int64)
    counts = np.bincount(v)
    return {d: c / v.size for d, c in enumerate(counts) if c}


def binomial_deviations(values: Sequence[int], exact: ExactDistribution) -> list[tuple[int, float, float, float]]:
    """Per atom ``(degree, empirical, exact, z)`` with z in binomial standard errors.

    Atoms with exact probability 0 or 1 get ``z = inf`` on any mismatch.
    """
    m = len(values)
    emp = frequencies(values)
    rows = []
    for d in sorted(set(emp) | set(exact.probs)):
        p = exact[d]
        f = emp.get(d, 0.0)
        se = math.sqrt(p * (1 - p) / m)
        if se == 0:
            z = 0.0 if abs(f - p) < 1e-12 else math.inf
        else:
            z = abs(f - p) / se
        rows.append((d, f, p, z))
    return rows
