# agents/baseline_agents.py

from __future__ import annotations

import itertools
import math
from typing import Iterable, Optional

import numpy as np

from agents.base_agent import BaseAgent
from utils.errors import CapacityError
from utils.instances import TspInstance
from utils.tsp_graph import Tour, WeightedGraph, approximation_ratio, tour_cost

MAX_EXACT_NODES = 20
MAX_ENUMERATION_NODES = 10
CHRISTOFIDES_FACTOR = 1.5
COST_TOL = 1e-9


def solve_exact(g: WeightedGraph) -> Tour:
    """Held-Karp over subsets of nodes 1..n-1, one popcount layer at a time."""
    n = g.n
    if n > MAX_EXACT_NODES:
        raise CapacityError(f"exact solver supports at most {MAX_EXACT_NODES} nodes, got {n}")
    if n <= 3:
        return Tour(tuple(range(n)))

    m = n - 1
    w = g.weights
    inner = w[1:, 1:]
    idx = np.arange(1 << m, dtype=np.int64)
    popcount = np.zeros(1 << m, dtype=np.int64)
    for b in range(m):
        popcount += (idx >> b) & 1

    # dp[S, j]: shortest path 0 -> ... -> j+1 visiting exactly the nodes in S
    dp = np.full((1 << m, m), np.inf)
    parent = np.full((1 << m, m), -1, dtype=np.int8)
    for j in range(m):
        dp[1 << j, j] = w[0, j + 1]

    for size in range(2, m + 1):
        layer = idx[popcount == size]
        for j in range(m):
            sel = layer[((layer >> j) & 1) == 1]
            cand = dp[sel ^ (1 << j)] + inner[:, j]
            best = np.argmin(cand, axis=1)
            dp[sel, j] = cand[np.arange(sel.size), best]
            parent[sel, j] = best

    full = (1 << m) - 1
    j = int(np.argmin(dp[full] + w[1:, 0]))
    order = []
    mask = full
    while j >= 0:
        order.append(j + 1)
        prev = int(parent[mask, j])
        mask ^= 1 << j
        j = prev
    return Tour(tuple([0] + order[::-1]))


def brute_force(g: WeightedGraph) -> tuple[Tour, int]:
    """Best tour by enumeration of the (n-1)!/2 distinct cycles; returns (tour, cycles examined)."""
    n = g.n
    if n > MAX_ENUMERATION_NODES:
        raise CapacityError(f"enumeration supports at most {MAX_ENUMERATION_NODES} nodes, got {n}")
    best, best_cost, seen = None, math.inf, 0
    for rest in itertools.permutations(range(1, n)):
        if n > 2 and rest[0] > rest[-1]:
            continue
        seen += 1
        t = Tour((0,) + rest)
        c = tour_cost(g, t)
        if c < best_cost:
            best, best_cost = t, c
    return best, seen


def nearest_neighbor(g: WeightedGraph, start: int = 0) -> Tour:
    n = g.n
    visited = np.zeros(n, dtype=bool)
    path = [int(start)]
    visited[start] = True
    for _ in range(n - 1):
        d = np.where(visited, np.inf, g.weights[path[-1]])
        nxt = int(np.argmin(d))
        path.append(nxt)
        visited[nxt] = True
    return Tour.from_cycle(path)


def random_tour(g: WeightedGraph, rng: np.random.Generator) -> Tour:
    return Tour(tuple([0] + (1 + rng.permutation(g.n - 1)).tolist()))


def christofides_bound(g: WeightedGraph, optimum: Optional[Tour] = None) -> float:
    return CHRISTOFIDES_FACTOR * tour_cost(g, optimum if optimum is not None else solve_exact(g))


class ExactSolverAgent(BaseAgent):
    def __init__(self):
        super().__init__("ExactSolverAgent")

    def run(self, graph: WeightedGraph) -> Tour:
        return solve_exact(graph)

    def attach(self, instances: Iterable[TspInstance]) -> list[TspInstance]:
        """Recompute optimal tours; a supplied tour costlier than the optimum is replaced with a warning."""
        out = []
        for inst in instances:
            best = solve_exact(inst.graph)
            if inst.tour is not None:
                given, exact = tour_cost(inst.graph, inst.tour), tour_cost(inst.graph, best)
                if given > exact + COST_TOL:
                    self.log.warning(
                        "Instance %d: supplied tour costs %.6f, optimum is %.6f; using the recomputed tour",
                        inst.index, given, exact,
                    )
                else:
                    best = inst.tour
            out.append(TspInstance(inst.graph, best, inst.index))
        return out


class NearestNeighborAgent(BaseAgent):
    def __init__(self, random_start: bool = False, rng: Optional[np.random.Generator] = None):
        super().__init__("NearestNeighborAgent")
        self.random_start = random_start
        self.rng = rng or np.random.default_rng(0)

    def run(self, graph: WeightedGraph) -> Tour:
        start = int(self.rng.integers(graph.n)) if self.random_start else 0
        return nearest_neighbor(graph, start)


class RandomTourAgent(BaseAgent):
    def __init__(self, rng: Optional[np.random.Generator] = None, samples: int = 1000):
        super().__init__("RandomTourAgent")
        self.rng = rng or np.random.default_rng(0)
        self.samples = samples

    def run(self, graph: WeightedGraph) -> Tour:
        return random_tour(graph, self.rng)

    def mean_ratio(self, graph: WeightedGraph, optimum: Tour) -> float:
        return float(np.mean([approximation_ratio(graph, self.run(graph), optimum) for _ in range(self.samples)]))
