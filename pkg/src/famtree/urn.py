"""Two-colour Pólya urns with real-valued masses.

Scalar mode adds ``c`` to the drawn colour; matrix mode adds row ``R[colour]``
of a 2x2 replacement matrix to ``(white, black)``. The generalized urn with
``R = [[1, beta], [0, 1 + beta]]`` tracks the root weight of the PORT model.
"""

from __future__ import annotations

import concurrent.futures as cf
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numba
import numpy as np

from .core import SeedLike, make_rng, replicate_seed

Reinforcement = Union[float, tuple[tuple[float, float], tuple[float, float]]]


@dataclass(frozen=True)
class UrnState:
    white: float
    black: float
    reinforcement: Reinforcement = 1.0
    draws: int = 0

    @property
    def is_matrix(self) -> bool:
        return not isinstance(self.reinforcement, (int, float))

    @property
    def total(self) -> float:
        return self.white + self.black

    @property
    def white_fraction(self) -> float:
        return self.white / (self.white + self.black)


def port_matrix(beta: float) -> tuple[tuple[float, float], tuple[float, float]]:
    return ((1.0, float(beta)), (0.0, 1.0 + beta))


def polya_step(s: UrnState, u: float) -> UrnState:
    total = s.white + s.black
    if not total > 0:
        raise ValueError("urn is empty")
    white_drawn = u < s.white / total
    if s.is_matrix:
        row = s.reinforcement[0 if white_drawn else 1]
        return replace(s, white=s.white + row[0], black=s.black + row[1], draws=s.draws + 1)
    c = float(s.reinforcement)
    if white_drawn:
        return replace(s, white=s.white + c, draws=s.draws + 1)
    return replace(s, black=s.black + c, draws=s.draws + 1)


@numba.njit(cache=True, nogil=True)
def _polya_kernel(white, black, c, uniforms):
    for u in uniforms:
        if u < white / (white + black):
            white += c
        else:
            black += c
    return white, black


@numba.njit(cache=True, nogil=True)
def _matrix_kernel(white, black, r, uniforms, checkpoints, out):
    j = 0
    t = 0
    for i in range(checkpoints.shape[0]):
        while t < checkpoints[i]:
            if uniforms[t] < white / (white + black):
                white += r[0, 0]
                black += r[0, 1]
            else:
                white += r[1, 0]
                black += r[1, 1]
            t += 1
        out[j] = white
        j += 1
    return white, black


def _validate_scalar(a: float, b: float, c: float, steps: int) -> None:
    if not a > 0:
        raise ValueError(f"initial white mass must be > 0, got {a}")
    if b < 0:
        raise ValueError(f"initial black mass must be >= 0, got {b}")
    if not c > 0:
        raise ValueError(f"reinforcement must be > 0, got {c}")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")


def polya_run(a: float, b: float, c: float, steps: int, seed: SeedLike) -> float:
    """White fraction after ``steps`` draws; one uniform per draw."""
    _validate_scalar(a, b, c, steps)
    rng = make_rng(seed)
    white, black = _polya_kernel(float(a), float(b), float(c), rng.random(int(steps)))
    return white / (white + black)


def polya_runs(a: float, b: float, c: float, steps: Union[int, Sequence[int]], master_seed: int,
               reps: Optional[int] = None, threads: int = 1) -> np.ndarray:
    """Final white fractions of independent urns; urn ``i`` uses ``replicate_seed(master_seed, i)``.

    ``steps`` may be one count for all urns or one count per urn.
    """
    if np.ndim(steps) == 0:
        if reps is None:
            raise ValueError("reps is required when steps is a scalar")
        counts = np.full(int(reps), int(steps), dtype=np.int64)
    else:
        counts = np.asarray(steps, dtype=np.int64)
    out = np.empty(len(counts), dtype=np.float64)

    def work(lo, hi):
        for i in range(lo, hi):
            out[i] = polya_run(a, b, c, int(counts[i]), replicate_seed(master_seed, i))

    _parallel(work, len(counts), threads)
    return out


def generalized_run(beta: float, steps: int, seed: SeedLike,
                    checkpoints: Optional[Sequence[int]] = None) -> np.ndarray:
    """White mass of the matrix urn after each checkpoint (number of draws).

    Starts from white ``1 + beta`` (the root) and black ``beta`` (its first child).
    """
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    cps = np.asarray(sorted(checkpoints) if checkpoints is not None else [steps], dtype=np.int64)
    if len(cps) and (cps[0] < 0 or cps[-1] > steps):
        raise ValueError(f"checkpoints must lie in [0, {steps}]")
    rng = make_rng(seed)
    r = np.array(port_matrix(beta), dtype=np.float64)
    out = np.empty(len(cps), dtype=np.float64)
    _matrix_kernel(1.0 + beta, float(beta), r, rng.random(int(steps)), cps, out)
    return out


def generalized_runs(beta: float, steps: int, master_seed: int, reps: int,
                     checkpoints: Optional[Sequence[int]] = None, threads: int = 1) -> np.ndarray:
    cps = sorted(checkpoints) if checkpoints is not None else [steps]
    out = np.empty((reps, len(cps)), dtype=np.float64)

    def work(lo, hi):
        for i in range(lo, hi):
            out[i] = generalized_run(beta, steps, replicate_seed(master_seed, i), cps)

    _parallel(work, reps, threads)
    return out


def _parallel(work, count: int, threads: int) -> None:
    threads = max(1, int(threads))
    if threads == 1 or count < 2:
        work(0, count)
        return
    bounds = np.linspace(0, count, min(count, 4 * threads) + 1).astype(int)
    with cf.ThreadPoolExecutor(threads) as pool:
        for f in [pool.submit(work, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]:
            f.result()
