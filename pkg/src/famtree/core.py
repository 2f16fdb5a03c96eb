"""Labels, model parameters and weight bookkeeping for random family trees."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

ROOT_TEXT = "root"

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator, None]


class LabelError(ValueError):
    pass


class ModelError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Label:
    """Path address of a vertex: ``(2, 1)`` is the first child of the root's second child."""

    path: tuple[int, ...] = ()

    def __post_init__(self):
        path = tuple(int(j) for j in self.path)
        for j in path:
            if j < 1:
                raise LabelError(f"label entries must be >= 1, got {j}")
        object.__setattr__(self, "path", path)

    @classmethod
    def root(cls) -> "Label":
        return cls(())

    @property
    def is_root(self) -> bool:
        return not self.path

    @property
    def depth(self) -> int:
        return len(self.path)

    def parent(self) -> "Label":
        if not self.path:
            raise LabelError("the root has no parent")
        return Label(self.path[:-1])

    def child(self, j: int) -> "Label":
        return Label(self.path + (j,))

    def prefixes(self) -> list["Label"]:
        """All ancestors from the root down to (and including) this label."""
        return [Label(self.path[:i]) for i in range(len(self.path) + 1)]

    def __str__(self) -> str:
        return format_label(self)


def parse_label(text: str) -> Label:
    text = text.strip()
    if text == ROOT_TEXT:
        return Label(())
    if not text:
        raise LabelError("empty label; use 'root' for the root")
    path = []
    for part in text.split("."):
        if not part.isdigit():
            raise LabelError(f"bad label component {part!r} in {text!r}")
        j = int(part)
        if j < 1:
            raise LabelError(f"bad label component {part!r} in {text!r}: entries must be >= 1")
        path.append(j)
    return Label(tuple(path))


def format_label(label: Label) -> str:
    if not label.path:
        return ROOT_TEXT
    return ".".join(str(j) for j in label.path)


def as_label(x: Union[Label, str, Iterable[int]]) -> Label:
    if isinstance(x, Label):
        return x
    if isinstance(x, str):
        return parse_label(x)
    return Label(tuple(x))


class Variant(str, enum.Enum):
    LINEAR = "linear"  # weight = degree + beta
    GPORT = "port"  # weight = out-degree + beta


@dataclass(frozen=True)
class ModelKind:
    variant: Variant
    beta: float

    def __post_init__(self):
        variant = Variant(self.variant)
        object.__setattr__(self, "variant", variant)
        beta = float(self.beta)
        object.__setattr__(self, "beta", beta)
        if not math.isfinite(beta):
            raise ModelError(f"beta must be finite, got {beta}")
        if variant is Variant.LINEAR and not beta > -1:
            raise ModelError(f"linear model requires beta > -1, got {beta}")
        if variant is Variant.GPORT and not beta > 0:
            raise ModelError(f"generalized PORT model requires beta > 0, got {beta}")

    @classmethod
    def linear(cls, beta: float) -> "ModelKind":
        return cls(Variant.LINEAR, beta)

    @classmethod
    def port(cls, beta: float) -> "ModelKind":
        return cls(Variant.GPORT, beta)

    @property
    def is_port(self) -> bool:
        return self.variant is Variant.GPORT

    @property
    def scaling_exponent(self) -> float:
        """Exponent delta such that degree / n**delta has a nondegenerate limit."""
        if self.is_port:
            return 1.0 / (1.0 + self.beta)
        return 1.0 / (2.0 + self.beta)

    @property
    def newborn_weight(self) -> float:
        return self.beta if self.is_port else 1.0 + self.beta

    def __str__(self) -> str:
        return f"{self.variant.value}(beta={self.beta:g})"


@dataclass
class VertexRecord:
    label: Label
    degree: int
    out_degree: int
    white_weight: Optional[float] = None
    black_weight: Optional[float] = None

    def check(self, model: Optional[ModelKind] = None) -> None:
        expected = self.degree if self.label.is_root else self.degree - 1
        if self.out_degree != expected:
            raise AssertionError(f"{self.label}: out_degree {self.out_degree} != {expected}")
        if self.white_weight is not None and model is not None and not model.is_port:
            total = self.white_weight + self.black_weight
            if not math.isclose(total, self.degree + model.beta, rel_tol=1e-12, abs_tol=1e-12):
                raise AssertionError(
                    f"{self.label}: W+B = {total} != degree+beta = {self.degree + model.beta}"
                )


def vertex_weight(v: VertexRecord, m: ModelKind) -> float:
    if m.is_port:
        return v.out_degree + m.beta
    return v.degree + m.beta


def total_weight_formula(n: int, m: ModelKind) -> float:
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if m.is_port:
        return (n - 1) + n * m.beta
    return (2 * n - 2) + n * m.beta


@dataclass
class TreeState:
    """Array-backed tree: per-vertex degree, parent index and child coordinate.

    Vertex 0 is the root; vertex ``i`` was born at step ``i``. Arrays are
    over-allocated; only the first ``n`` entries are meaningful.
    """

    model: ModelKind
    n: int = 1
    degree: np.ndarray = field(default_factory=lambda: np.zeros(16, dtype=np.int64))
    parent: np.ndarray = field(default_factory=lambda: np.full(16, -1, dtype=np.int64))
    coord: np.ndarray = field(default_factory=lambda: np.zeros(16, dtype=np.int64))

    @property
    def capacity(self) -> int:
        return len(self.degree)

    def reserve(self, size: int) -> None:
        if size <= self.capacity:
            return
        cap = self.capacity
        while cap < size:
            cap *= 2
        for name, fill in (("degree", 0), ("parent", -1), ("coord", 0)):
            old = getattr(self, name)
            new = np.full(cap, fill, dtype=np.int64)
            new[: len(old)] = old
            setattr(self, name, new)

    def degrees(self) -> np.ndarray:
        return self.degree[: self.n]

    def out_degrees(self) -> np.ndarray:
        out = self.degree[: self.n].copy()
        out[1:] -= 1
        return out

    @property
    def total_weight(self) -> float:
        """S_n from the integer degree sums plus n*beta (no float accumulation)."""
        if self.model.is_port:
            integer_part = int(self.out_degrees().sum())
        else:
            integer_part = int(self.degrees().sum())
        return integer_part + self.n * self.model.beta

    def label_of(self, i: int) -> Label:
        path = []
        while i > 0:
            path.append(int(self.coord[i]))
            i = int(self.parent[i])
        return Label(tuple(reversed(path)))

    def find(self, label: Label) -> int:
        """Vertex index of ``label``, or -1 if it is not born yet."""
        i = 0
        par = self.parent[: self.n]
        crd = self.coord[: self.n]
        for j in label.path:
            hits = np.flatnonzero((par == i) & (crd == j))
            if len(hits) == 0:
                return -1
            i = int(hits[0])
        return i

    def record(self, i: int) -> VertexRecord:
        d = int(self.degree[i])
        return VertexRecord(self.label_of(i), d, d if i == 0 else d - 1)

    def vertices(self) -> list[VertexRecord]:
        return [self.record(i) for i in range(self.n)]

    def weight_sum(self) -> float:
        """Freshly recomputed sum of vertex weights."""
        return math.fsum(vertex_weight(v, self.model) for v in self.vertices())

    def check_invariants(self) -> None:
        n = self.n
        deg = self.degrees()
        if int(deg.sum()) != 2 * (n - 1):
            raise AssertionError(f"degree sum {int(deg.sum())} != 2(n-1) = {2 * (n - 1)}")
        if int(self.out_degrees().sum()) != n - 1:
            raise AssertionError("out-degree sum != n-1")
        expected = total_weight_formula(n, self.model)
        if self.total_weight != expected:
            raise AssertionError(f"S_n {self.total_weight} != {expected}")
        base = self.out_degrees() if self.model.is_port else deg
        s = math.fsum((base + self.model.beta).tolist())
        # exact whenever beta is dyadic; otherwise only per-vertex rounding remains
        if not math.isclose(s, expected, rel_tol=1e-12, abs_tol=1e-12):
            raise AssertionError(f"weight sum {s} != S_n = {expected}")


def replicate_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Seed of replicate ``index``: SeedSequence hash of (master_seed, index)."""
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(index),))


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
