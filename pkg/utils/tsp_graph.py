# utils/tsp_graph.py

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from utils.errors import ValidationError
from utils.permutations import as_permutation

AVAILABLE = math.pi
IN_TOUR = 0.0


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Complete Euclidean graph: node coordinates plus symmetric distance matrix."""

    coords: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_coords(cls, coords) -> "WeightedGraph":
        pts = np.asarray(coords, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValidationError(f"coordinates must have shape (n>=2, 2), got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("coordinates must be finite")
        w = cdist(pts, pts)
        off = w[~np.eye(len(pts), dtype=bool)]
        if np.any(off <= 0.0):
            raise ValidationError("coordinates must be pairwise distinct")
        return cls(_frozen(pts), _frozen(w))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def max_weight(self) -> float:
        return float(self.weights.max())

    def edges(self) -> list[tuple[int, int]]:
        n = self.n
        return [(i, j) for i in range(n) for j in range(i + 1, n)]

    def permuted(self, sigma: Sequence[int]) -> "WeightedGraph":
        """Relabel nodes so that old node ``i`` becomes node ``sigma[i]``."""
        perm = as_permutation(sigma, self.n)
        coords = np.empty_like(self.coords)
        coords[perm] = self.coords
        return WeightedGraph.from_coords(coords)


@dataclass(frozen=True, eq=False)
class AnnotatedGraph:
    """A graph plus per-node features: 0 for tour members, pi for available nodes."""

    graph: WeightedGraph
    alpha: np.ndarray

    def __post_init__(self) -> None:
        alpha = _frozen(self.alpha)
        if alpha.shape != (self.graph.n,):
            raise ValidationError(f"alpha must have {self.graph.n} entries, got {alpha.shape}")
        if not np.all((alpha == IN_TOUR) | (alpha == AVAILABLE)):
            raise ValidationError("alpha entries must be 0 or pi")
        object.__setattr__(self, "alpha", alpha)

    @classmethod
    def initial(cls, graph: WeightedGraph) -> "AnnotatedGraph":
        alpha = np.full(graph.n, AVAILABLE)
        alpha[0] = IN_TOUR
        return cls(graph, alpha)

    @classmethod
    def from_partial(cls, graph: WeightedGraph, partial: Sequence[int]) -> "AnnotatedGraph":
        alpha = np.full(graph.n, AVAILABLE)
        alpha[list(partial)] = IN_TOUR
        return cls(graph, alpha)

    @property
    def available(self) -> np.ndarray:
        return self.alpha != IN_TOUR

    def available_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.available)

    def visit(self, v: int) -> "AnnotatedGraph":
        if not self.available[v]:
            raise ValidationError(f"node {v} is already in the tour")
        alpha = self.alpha.copy()
        alpha[v] = IN_TOUR
        return AnnotatedGraph(self.graph, alpha)

    def permuted(self, sigma: Sequence[int]) -> "AnnotatedGraph":
        perm = as_permutation(sigma, self.graph.n)
        alpha = np.empty_like(self.alpha)
        alpha[perm] = self.alpha
        return AnnotatedGraph(self.graph.permuted(perm), alpha)


@dataclass(frozen=True)
class Tour:
    """Closed tour; ``order`` visits every node once and starts at node 0."""

    order: tuple[int, ...]

    def __post_init__(self) -> None:
        order = tuple(int(v) for v in self.order)
        if sorted(order) != list(range(len(order))):
            raise ValidationError(f"tour must visit each of {len(order)} nodes once: {order}")
        if not order or order[0] != 0:
            raise ValidationError(f"tour must start at node 0: {order}")
        object.__setattr__(self, "order", order)

    @classmethod
    def from_cycle(cls, cycle: Sequence[int]) -> "Tour":
        """Rotate any cyclic ordering so that it starts at node 0."""
        cyc = [int(v) for v in cycle]
        if 0 not in cyc:
            raise ValidationError(f"cycle does not contain node 0: {cyc}")
        k = cyc.index(0)
        return cls(tuple(cyc[k:] + cyc[:k]))

    def __len__(self) -> int:
        return len(self.order)

    def relabeled(self, sigma: Sequence[int]) -> "Tour":
        perm = as_permutation(sigma, len(self.order))
        return Tour.from_cycle([int(perm[v]) for v in self.order])


def _check_path(g: WeightedGraph, nodes: Sequence[int]) -> list[int]:
    path = [int(v) for v in nodes]
    if len(set(path)) != len(path):
        raise ValidationError(f"tour repeats a node: {path}")
    if any(not 0 <= v < g.n for v in path):
        raise ValidationError(f"tour node out of range for {g.n} nodes: {path}")
    return path


def tour_cost(g: WeightedGraph, t: Tour | Sequence[int], closed: bool | None = None) -> float:
    """Sum of consecutive edge weights. A ``Tour`` is closed, a plain sequence is a partial path."""
    if closed is None:
        closed = isinstance(t, Tour)
    path = _check_path(g, t.order if isinstance(t, Tour) else t)
    if len(path) < 2:
        raise ValidationError("a tour needs at least two nodes")
    idx = np.asarray(path)
    cost = float(g.weights[idx[:-1], idx[1:]].sum())
    if closed:
        cost += float(g.weights[idx[-1], idx[0]])
    return cost


def approximation_ratio(g: WeightedGraph, t: Tour, t_opt: Tour) -> float:
    return tour_cost(g, t) / tour_cost(g, t_opt)


def step_reward(g: WeightedGraph, partial: Sequence[int], v: int) -> float:
    """Negative added length of appending ``v``; the closing edge is charged when ``v`` completes the tour."""
    path = _check_path(g, partial)
    if not path:
        raise ValidationError("partial tour is empty")
    if v in path:
        raise ValidationError(f"node {v} is already in the tour")
    if not 0 <= v < g.n:
        raise ValidationError(f"node {v} out of range for {g.n} nodes")
    reward = -float(g.weights[path[-1], v])
    if len(path) + 1 == g.n:
        reward -= float(g.weights[v, path[0]])
    return reward
