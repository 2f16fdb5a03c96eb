"""Dynamic weighted sampling over an append-only array of weights.

A Fenwick (binary indexed) tree over the weights gives O(log n) append,
increment and inverse-CDF lookup. The jitted helpers work on raw arrays so
the growth kernel in :mod:`famtree.engine` can use them without Python
overhead; :class:`WeightIndex` wraps them for general use.
"""

from __future__ import annotations

import math

import numba
import numpy as np

AUDIT_RTOL = 1e-9


class NoMassError(ValueError):
    pass


@numba.njit(cache=True, nogil=True)
def fw_add(tree, i, delta):
    """Add ``delta`` to element ``i`` (0-based). ``len(tree) - 1`` is the capacity."""
    cap = tree.shape[0] - 1
    j = i + 1
    while j <= cap:
        tree[j] += delta
        j += j & (-j)


@numba.njit(cache=True, nogil=True)
def fw_find(tree, w, size, target):
    """Index ``i`` with ``cum_i <= target < cum_{i+1}``.

    Boundary hits go to the right interval, so zero-weight entries are never
    returned. Targets at or past the total (rounding) fall back to the last
    positive-weight entry.
    """
    cap = tree.shape[0] - 1
    pos = 0
    step = 1
    while step * 2 <= cap:
        step *= 2
    while step > 0:
        nxt = pos + step
        if nxt <= cap and tree[nxt] <= target:
            pos = nxt
            target -= tree[nxt]
        step >>= 1
    if pos >= size:
        pos = size - 1
        while pos > 0 and w[pos] <= 0.0:
            pos -= 1
    return pos


@numba.njit(cache=True, nogil=True)
def fw_build(tree, w, size):
    """Rebuild the prefix tree from leaf weights in O(capacity)."""
    cap = tree.shape[0] - 1
    for j in range(cap + 1):
        tree[j] = 0.0
    for i in range(size):
        tree[i + 1] = w[i]
    for j in range(1, cap + 1):
        k = j + (j & (-j))
        if k <= cap:
            tree[k] += tree[j]


@numba.njit(cache=True, nogil=True)
def leaf_sum(w, size):
    s = 0.0
    for i in range(size):
        s += w[i]
    return s


def _pow2_at_least(n: int) -> int:
    cap = 1
    while cap < n:
        cap *= 2
    return cap


class WeightIndex:
    """Append-only weights with O(log n) proportional sampling.

    >>> idx = WeightIndex()
    >>> idx.insert(1.0), idx.insert(3.0)
    (0, 1)
    >>> idx.sample(0.5)
    1
    """

    def __init__(self, capacity: int = 16):
        cap = _pow2_at_least(max(int(capacity), 1))
        self.tree = np.zeros(cap + 1, dtype=np.float64)
        self.weights = np.zeros(cap, dtype=np.float64)
        self.size = 0
        self.total = 0.0

    def __len__(self) -> int:
        return self.size

    @property
    def capacity(self) -> int:
        return len(self.weights)

    def reserve(self, size: int) -> None:
        if size <= self.capacity:
            return
        cap = _pow2_at_least(size)
        w = np.zeros(cap, dtype=np.float64)
        w[: self.size] = self.weights[: self.size]
        self.weights = w
        self.tree = np.zeros(cap + 1, dtype=np.float64)
        fw_build(self.tree, self.weights, self.size)

    def insert(self, w: float) -> int:
        w = float(w)
        if not w >= 0:
            raise ValueError(f"weights must be nonnegative, got {w}")
        self.reserve(self.size + 1)
        i = self.size
        self.weights[i] = w
        fw_add(self.tree, i, w)
        self.size += 1
        self.total += w
        return i

    def weight(self, i: int) -> float:
        self._check_index(i)
        return float(self.weights[i])

    def add_weight(self, i: int, delta: float) -> None:
        self._check_index(i)
        new = self.weights[i] + delta
        if new < 0:
            raise ValueError(f"weight {i} would become negative ({new})")
        self.weights[i] = new
        fw_add(self.tree, i, float(delta))
        self.total += delta

    def sample(self, u: float) -> int:
        if not 0.0 <= u < 1.0:
            raise ValueError(f"u must lie in [0, 1), got {u}")
        if self.size == 0 or self.total <= 0:
            raise NoMassError("cannot sample from an index with zero total weight")
        return int(fw_find(self.tree, self.weights, self.size, u * self.total))

    def audit(self, rtol: float = AUDIT_RTOL) -> bool:
        """Recompute the total from the leaves; rebuild the tree if it drifted.

        Returns True when the running total was within ``rtol``.
        """
        fresh = math.fsum(self.weights[: self.size].tolist())
        ok = abs(fresh - self.total) <= rtol * max(abs(fresh), 1.0)
        if not ok:
            fw_build(self.tree, self.weights, self.size)
        self.total = fresh
        return ok

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.size:
            raise IndexError(f"index {i} out of range for size {self.size}")
