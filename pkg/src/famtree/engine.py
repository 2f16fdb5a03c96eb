"""Growth of random family trees under linear preferential attachment.

Every step draws one uniform for the parent choice. While the white/black
coloring is active, each increment of a colored vertex draws one more
uniform for its color. Uniforms come from a single stream per run, buffered
in blocks; block size never changes the trajectory.
"""

from __future__ import annotations

import concurrent.futures as cf
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numba
import numpy as np

from .core import (
    Label,
    ModelKind,
    SeedLike,
    TreeState,
    VertexRecord,
    as_label,
    make_rng,
    replicate_seed,
)
from .wsample import AUDIT_RTOL, fw_add, fw_build, fw_find, leaf_sum

AUDIT_PERIOD = 1 << 20
_BLOCK = 1 << 16

# layout of the integer coloring record
_C_ENABLED, _C_PARENT_NODE, _C_CHILD_NODE, _C_ACTIVE, _C_N, _C_DRAWS = range(6)
# layout of the float coloring record
_W_PARENT, _B_PARENT, _W_CHILD, _B_CHILD = range(4)


class ColoringError(RuntimeError):
    pass


@numba.njit(cache=True, nogil=True)
def _advance(deg, par, crd, w, tree, n, n_stop, total, is_port, beta,
             uniforms, pos, node_par, node_coord, node_vertex, col, colw):
    """Grow from ``n`` vertices towards ``n_stop``; stops early when uniforms run out.

    Returns ``(n, pos, total)``.
    """
    need = 2 if col[_C_ENABLED] != 0 else 1
    n_nodes = node_par.shape[0]
    while n < n_stop:
        if pos + need > uniforms.shape[0]:
            break
        u = uniforms[pos]
        pos += 1
        if n == 1:
            p = 0  # only vertex; S_1 may be <= 0 for beta <= 0
        else:
            p = fw_find(tree, w, n, u * total)

        if col[_C_ACTIVE] != 0:
            pv = node_vertex[col[_C_PARENT_NODE]]
            cv = node_vertex[col[_C_CHILD_NODE]]
            if p == pv or p == cv:
                iw = _W_PARENT if p == pv else _W_CHILD
                u2 = uniforms[pos]
                pos += 1
                if u2 < colw[iw] / (colw[iw] + colw[iw + 1]):
                    colw[iw] += 1.0
                else:
                    colw[iw + 1] += 1.0
                if p == pv:
                    col[_C_DRAWS] += 1

        c = deg[p] + 1 if p == 0 else deg[p]
        deg[p] += 1
        if is_port:
            new_w = (deg[p] - (1 if p != 0 else 0)) + beta
        else:
            new_w = deg[p] + beta
        delta = new_w - w[p]
        w[p] = new_w
        fw_add(tree, p, delta)
        total += delta

        v = n
        deg[v] = 1
        par[v] = p
        crd[v] = c
        nw = beta if is_port else 1.0 + beta
        w[v] = nw
        fw_add(tree, v, nw)
        total += nw
        n += 1

        for k in range(1, n_nodes):
            if node_vertex[k] < 0 and node_coord[k] == c and node_vertex[node_par[k]] == p:
                node_vertex[k] = v
                break

        if col[_C_ENABLED] != 0 and col[_C_ACTIVE] == 0 and node_vertex[col[_C_CHILD_NODE]] == v:
            colw[_W_CHILD] = 1.0 + beta
            colw[_B_CHILD] = 0.0
            colw[_W_PARENT] = 1.0 + beta
            colw[_B_PARENT] = deg[p] - 1.0
            col[_C_N] = n
            col[_C_ACTIVE] = 1

        if (n & (AUDIT_PERIOD - 1)) == 0:
            fresh = leaf_sum(w, n)
            if abs(fresh - total) > AUDIT_RTOL * fresh:
                fw_build(tree, w, n)
            total = fresh
    return n, pos, total


@dataclass
class ColoringState:
    parent: Label
    child_index: int
    activation_step: Optional[int]
    parent_white: float
    parent_black: float
    child_white: float
    child_black: float
    draws: int  # colored increments of the parent after activation

    @property
    def active(self) -> bool:
        return self.activation_step is not None

    @property
    def white_fraction(self) -> float:
        """White share of the parent's weight; nan until the colored child is born."""
        if not self.active:
            return math.nan
        return self.parent_white / (self.parent_white + self.parent_black)


class GrowthRun:
    """One growing tree with a private uniform stream.

    >>> from famtree.core import ModelKind, parse_label
    >>> run = GrowthRun(ModelKind.linear(0.0), seed=1)
    >>> str(run.step())
    '1'
    >>> run.degree_of(parse_label("root"))
    1
    """

    def __init__(self, model: ModelKind, seed: SeedLike = None, watched: Iterable = (),
                 capacity: int = 16, check: bool = False):
        self.model = model
        self.rng = make_rng(seed)
        self.check = check
        self.state = TreeState(model)
        self.state.reserve(capacity)
        cap = self.state.capacity
        self._w = np.zeros(cap, dtype=np.float64)
        self._tree = np.zeros(cap + 1, dtype=np.float64)
        self._init_root()
        self._buf = np.empty(0, dtype=np.float64)
        self._pos = 0
        self._labels: list[Label] = [Label(())]
        self._node_par = np.array([-1], dtype=np.int64)
        self._node_coord = np.array([0], dtype=np.int64)
        self._node_vertex = np.array([0], dtype=np.int64)
        self._col = np.zeros(6, dtype=np.int64)
        self._colw = np.zeros(4, dtype=np.float64)
        self._col_label: Optional[tuple[Label, int]] = None
        self.watched: list[Label] = []
        for x in watched:
            self.watch(x)

    def _init_root(self) -> None:
        # root weight is 0 in the index until its forced first child (beta may be negative)
        if self.model.is_port:
            self._w[0] = self.model.beta
            fw_add(self._tree, 0, self.model.beta)
        self._total = float(self._w[0])

    def reset(self, seed: SeedLike) -> None:
        """Back to the single root with a fresh stream; keeps watched labels and coloring setup."""
        st = self.state
        n = st.n
        st.degree[:n] = 0
        st.parent[:n] = -1
        st.coord[:n] = 0
        st.n = 1
        self._w[:n] = 0.0
        self._tree[:] = 0.0
        self._init_root()
        self.rng = make_rng(seed)
        self._buf = self._buf[:0]
        self._pos = 0
        self._node_vertex[1:] = -1
        self._col[_C_ACTIVE] = 0
        self._col[_C_N] = 0
        self._col[_C_DRAWS] = 0
        self._colw[:] = 0.0

    @property
    def n(self) -> int:
        return self.state.n

    @property
    def total_weight(self) -> float:
        return self.state.total_weight

    def watch(self, label) -> None:
        label = as_label(label)
        self._node(label)
        if label not in self.watched:
            self.watched.append(label)

    def _node(self, label: Label) -> int:
        if label in self._labels:
            return self._labels.index(label)
        parent_node = self._node(label.parent())
        self._labels.append(label)
        self._node_par = np.append(self._node_par, parent_node)
        self._node_coord = np.append(self._node_coord, label.path[-1])
        self._node_vertex = np.append(self._node_vertex, self.state.find(label))
        return len(self._labels) - 1

    def _reserve(self, size: int) -> None:
        if size <= self.state.capacity:
            return
        self.state.reserve(size)
        cap = self.state.capacity
        w = np.zeros(cap, dtype=np.float64)
        w[: self.n] = self._w[: self.n]
        self._w = w
        self._tree = np.zeros(cap + 1, dtype=np.float64)
        fw_build(self._tree, self._w, self.n)

    def _refill(self, want: int) -> None:
        rest = self._buf[self._pos:]
        self._buf = np.concatenate([rest, self.rng.random(max(want, _BLOCK) if self._col[0] else want)])
        self._pos = 0

    def advance_to(self, n_stop: int) -> None:
        """Grow until the tree has ``n_stop`` vertices."""
        self._reserve(n_stop)
        st = self.state
        while st.n < n_stop:
            remaining = n_stop - st.n
            need = 2 if self._col[0] else 1
            if len(self._buf) - self._pos < need:
                self._refill(remaining)
            n, pos, total = _advance(
                st.degree, st.parent, st.coord, self._w, self._tree, st.n, n_stop,
                self._total, self.model.is_port, self.model.beta, self._buf, self._pos,
                self._node_par, self._node_coord, self._node_vertex, self._col, self._colw,
            )
            st.n, self._pos, self._total = int(n), int(pos), float(total)
            if self.check:
                self.check_invariants()

    def step(self) -> Label:
        """Attach one new vertex; returns its label."""
        self.advance_to(self.n + 1)
        return self.state.label_of(self.n - 1)

    def degree_of(self, x) -> int:
        x = as_label(x)
        if x in self._labels:
            v = int(self._node_vertex[self._labels.index(x)])
        else:
            v = self.state.find(x)
        return 0 if v < 0 else int(self.state.degree[v])

    def degrees_of(self, labels: Sequence[Label]) -> np.ndarray:
        return np.array([self.degree_of(x) for x in labels], dtype=np.int64)

    def enable_coloring(self, parent, child_index: int) -> None:
        """Color the weights of ``parent`` and its ``child_index``-th child from that child's birth."""
        if self.model.is_port:
            raise ColoringError("coloring is defined for the linear model only")
        if self._col[_C_ENABLED]:
            raise ColoringError("coloring already active")
        parent = as_label(parent)
        child_index = int(child_index)
        if child_index < 1:
            raise ColoringError(f"child index must be >= 1, got {child_index}")
        child = parent.child(child_index)
        if self.state.find(child) >= 0:
            raise ColoringError(f"vertex {child} already exists")
        self._col[_C_PARENT_NODE] = self._node(parent)
        self._col[_C_CHILD_NODE] = self._node(child)
        self._col[_C_ENABLED] = 1
        self._col_label = (parent, child_index)

    @property
    def coloring(self) -> Optional[ColoringState]:
        if self._col_label is None:
            return None
        c, w = self._col, self._colw
        return ColoringState(
            parent=self._col_label[0],
            child_index=self._col_label[1],
            activation_step=int(c[_C_N]) if c[_C_ACTIVE] else None,
            parent_white=float(w[_W_PARENT]),
            parent_black=float(w[_B_PARENT]),
            child_white=float(w[_W_CHILD]),
            child_black=float(w[_B_CHILD]),
            draws=int(c[_C_DRAWS]),
        )

    def vertex_record(self, x) -> Optional[VertexRecord]:
        x = as_label(x)
        v = self.state.find(x)
        if v < 0:
            return None
        rec = self.state.record(v)
        col = self.coloring
        if col is not None and col.active:
            if x == col.parent:
                rec.white_weight, rec.black_weight = col.parent_white, col.parent_black
            elif x == col.parent.child(col.child_index):
                rec.white_weight, rec.black_weight = col.child_white, col.child_black
            else:
                rec.white_weight, rec.black_weight = 0.0, rec.degree + self.model.beta
        return rec

    def index_weights(self) -> np.ndarray:
        return self._w[: self.n]

    def check_invariants(self) -> None:
        st = self.state
        st.check_invariants()
        if st.n >= 2:
            fresh = float(np.sum(self._w[: st.n]))
            if abs(fresh - st.total_weight) > 1e-9 * fresh:
                raise AssertionError(f"index weights sum {fresh} != S_n {st.total_weight}")
            if abs(self._total - fresh) > 1e-9 * fresh:
                raise AssertionError(f"running total {self._total} drifted from {fresh}")
        col = self.coloring
        if col is not None and col.active:
            beta = self.model.beta
            for lab, wv, bv in ((col.parent, col.parent_white, col.parent_black),
                                (col.parent.child(col.child_index), col.child_white, col.child_black)):
                d = self.degree_of(lab)
                if abs(wv + bv - (d + beta)) > 1e-9 * (d + abs(beta) + 1):
                    raise AssertionError(f"{lab}: W+B={wv + bv} != deg+beta={d + beta}")
            d = self.degree_of(col.parent.child(col.child_index))
            if col.child_black != 0.0 or abs(col.child_white - (d + beta)) > 1e-9 * (d + 1):
                raise AssertionError("newborn colored vertex must stay all white")


@dataclass
class Trajectory:
    """Degrees of watched labels (columns) at checkpoints (rows)."""

    model: ModelKind
    labels: list[Label]
    checkpoints: list[int]
    degrees: np.ndarray
    coloring: Optional[ColoringState] = None

    def normalized(self) -> np.ndarray:
        scale = np.asarray(self.checkpoints, dtype=np.float64) ** self.model.scaling_exponent
        return self.degrees / scale[:, None]


def _prepare(model: ModelKind, n_target: int, watched, checkpoints):
    if n_target < 1:
        raise ValueError(f"n_target must be >= 1, got {n_target}")
    labels = [as_label(x) for x in watched]
    cps = sorted(int(c) for c in (checkpoints if checkpoints is not None else [n_target]))
    if cps and (cps[0] < 1 or cps[-1] > n_target):
        raise ValueError(f"checkpoints must lie in [1, {n_target}]")
    return labels, cps


def _new_run(model, n_target, seed, labels, coloring, check=False) -> GrowthRun:
    run = GrowthRun(model, seed, watched=labels, capacity=max(n_target, 2), check=check)
    if coloring is not None:
        run.enable_coloring(*coloring)
    return run


def _trajectory(run: GrowthRun, n_target, labels, cps) -> Trajectory:
    out = np.zeros((len(cps), len(labels)), dtype=np.int64)
    for r, cp in enumerate(cps):
        run.advance_to(cp)
        out[r] = run.degrees_of(labels)
    run.advance_to(n_target)
    return Trajectory(run.model, labels, cps, out, run.coloring)


def grow(model: ModelKind, n_target: int, seed: SeedLike, watched: Iterable = (Label(()),),
         checkpoints: Optional[Sequence[int]] = None,
         coloring: Optional[tuple] = None, check: bool = False) -> Trajectory:
    """Grow one tree to ``n_target`` vertices; deterministic in (model, n_target, seed).

    ``coloring`` is an optional ``(parent_label, child_index)`` pair.
    """
    labels, cps = _prepare(model, n_target, watched, checkpoints)
    run = _new_run(model, n_target, seed, labels, coloring, check)
    return _trajectory(run, n_target, labels, cps)


@dataclass
class ReplicateSet:
    model: ModelKind
    labels: list[Label]
    checkpoints: list[int]
    degrees: np.ndarray  # (reps, checkpoints, labels)
    colorings: Optional[list[ColoringState]] = None

    @property
    def reps(self) -> int:
        return self.degrees.shape[0]

    def final_normalized(self, label) -> np.ndarray:
        j = self.labels.index(as_label(label))
        n = self.checkpoints[-1]
        return self.degrees[:, -1, j] / float(n) ** self.model.scaling_exponent


def run_replicates(model: ModelKind, n_target: int, master_seed: int, reps: int,
                   watched: Iterable = (Label(()),), checkpoints: Optional[Sequence[int]] = None,
                   coloring: Optional[tuple] = None, threads: int = 1) -> ReplicateSet:
    """Independent replicates; replicate ``i`` uses ``replicate_seed(master_seed, i)``.

    Output is indexed by replicate, so it does not depend on ``threads``.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    labels, cps = _prepare(model, n_target, watched, checkpoints)
    degrees = np.zeros((reps, len(cps), len(labels)), dtype=np.int64)
    colorings: list = [None] * reps

    def work(lo: int, hi: int) -> None:
        run = _new_run(model, n_target, None, labels, coloring)
        for i in range(lo, hi):
            run.reset(replicate_seed(master_seed, i))
            t = _trajectory(run, n_target, labels, cps)
            degrees[i] = t.degrees
            colorings[i] = t.coloring

    threads = max(1, int(threads))
    if threads == 1:
        work(0, reps)
    else:
        bounds = np.linspace(0, reps, min(reps, 4 * threads) + 1).astype(int)
        with cf.ThreadPoolExecutor(threads) as pool:
            for f in [pool.submit(work, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]:
                f.result()
    return ReplicateSet(model, labels, cps, degrees, colorings if coloring is not None else None)
