# utils/qubo.py
"""
TSP as a QUBO on one-hot variables x[v, t] ("city v is visited at time t").

City 0 is pinned to time 0 and time n, so only cities 1..n-1 at times 1..n-1
carry variables: (n-1)**2 of them, with flat index (v-1)*(n-1) + (t-1).
Variable k is qubit k, i.e. bit k of a basis-state index.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from utils.errors import CapacityError, ValidationError
from utils.tsp_graph import Tour, WeightedGraph

# 2**n_vars cost entries are tabulated; beyond this the table is impractical
MAX_TABULATED_VARS = 24


@dataclass(eq=False)
class QuboProblem:
    """objective(x) = offset + linear . x + sum_{a<b} quadratic[a, b] x_a x_b (quadratic symmetric, zero diagonal)."""

    n_cities: int
    linear: np.ndarray
    quadratic: np.ndarray
    offset: float
    scale: float
    penalty: float = 1.0

    @property
    def n_vars(self) -> int:
        return (self.n_cities - 1) ** 2

    def var_index(self, city: int, time: int) -> int:
        m = self.n_cities - 1
        if not (1 <= city <= m and 1 <= time <= m):
            raise ValidationError(f"no variable for city {city} at time {time}")
        return (city - 1) * m + (time - 1)

    def objective(self, x: Sequence[int]) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_vars,):
            raise ValidationError(f"assignment needs {self.n_vars} bits, got {x.shape}")
        return float(self.offset + self.linear @ x + 0.5 * x @ self.quadratic @ x)

    @cached_property
    def cost_diagonal(self) -> np.ndarray:
        """Objective value of every basis state, indexed like the statevector."""
        if self.n_vars > MAX_TABULATED_VARS:
            raise CapacityError(f"cannot tabulate {self.n_vars} QUBO variables")
        idx = np.arange(1 << self.n_vars, dtype=np.int64)
        bits = ((idx[:, None] >> np.arange(self.n_vars)) & 1).astype(float)
        return self.offset + bits @ self.linear + 0.5 * np.einsum("ka,ab,kb->k", bits, self.quadratic, bits)


def build_qubo(g: WeightedGraph, penalty: float = 1.0) -> QuboProblem:
    n = g.n
    if n < 3:
        raise ValidationError(f"QUBO encoding needs at least 3 cities, got {n}")
    m = n - 1
    nv = m * m
    w_max = g.max_weight
    eps = g.weights / w_max
    lin = np.zeros(nv)
    quad = np.zeros((nv, nv))

    def ix(v: int, t: int) -> int:
        return (v - 1) * m + (t - 1)

    # distance: city 0 at time 0 and time n
    for v in range(1, n):
        lin[ix(v, 1)] += eps[0, v]
        lin[ix(v, m)] += eps[v, 0]
    for t in range(1, m):
        for i in range(1, n):
            for j in range(1, n):
                if i != j:
                    a, b = ix(i, t), ix(j, t + 1)
                    quad[a, b] += eps[i, j]
                    quad[b, a] += eps[i, j]

    # one-hot penalties, (1 - sum x)^2 = 1 - sum x + 2 sum_{a<b} x_a x_b for binary x
    groups = [[ix(v, t) for t in range(1, n)] for v in range(1, n)]
    groups += [[ix(v, t) for v in range(1, n)] for t in range(1, n)]
    offset = 0.0
    for grp in groups:
        offset += penalty
        for k, a in enumerate(grp):
            lin[a] -= penalty
            for b in grp[k + 1:]:
                quad[a, b] += 2.0 * penalty
                quad[b, a] += 2.0 * penalty

    return QuboProblem(n_cities=n, linear=lin, quadratic=quad, offset=offset, scale=w_max, penalty=penalty)


def encode(t: Tour, q: QuboProblem) -> np.ndarray:
    if len(t) != q.n_cities:
        raise ValidationError(f"tour has {len(t)} nodes, QUBO has {q.n_cities} cities")
    x = np.zeros(q.n_vars, dtype=np.int8)
    for time, city in enumerate(t.order[1:], start=1):
        x[q.var_index(city, time)] = 1
    return x


def bits_of(index: int, n_vars: int) -> np.ndarray:
    return ((int(index) >> np.arange(n_vars)) & 1).astype(np.int8)


def index_of(x: Sequence[int]) -> int:
    return int(sum(int(b) << k for k, b in enumerate(x)))


def decode(x: Sequence[int], q: QuboProblem) -> Tour | None:
    """Tour for a one-hot assignment, ``None`` if any city or time slot is not used exactly once."""
    m = q.n_cities - 1
    grid = np.asarray(x, dtype=np.int64).reshape(m, m)  # rows: city 1..m, cols: time 1..m
    if np.any(grid.sum(axis=0) != 1) or np.any(grid.sum(axis=1) != 1):
        return None
    order = [0] + [int(np.argmax(grid[:, t])) + 1 for t in range(m)]
    return Tour(tuple(order))
