# tools/analytic_oracle.py
"""
Closed-form <Z_last Z_v> for the depth-1 equivariant circuit.

With angles RZZ(2*gamma*eps_ij) and RX(alpha_i*beta), the edge-weighted
expectation of an available candidate v after last tour node u is

    eps_uv * sin(pi*beta) * sin(2*gamma*eps_uv) * prod_{k != u, v} cos(2*gamma*eps_vk)

The product runs over every other node, in the tour or not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from utils.errors import ValidationError
from utils.tsp_graph import AVAILABLE, AnnotatedGraph, Tour, WeightedGraph


@dataclass(frozen=True)
class AnalyticExpectation:
    value: float
    weight: float
    mixer: float
    coupling: float
    cos_product: float


def depth1_terms(g: AnnotatedGraph, last: int, v: int, beta: float, gamma: float) -> AnalyticExpectation:
    if not g.available[v]:
        raise ValidationError(f"node {v} is not available")
    if g.available[last]:
        raise ValidationError(f"node {last} is not in the partial tour")
    w = g.graph.weights
    weight = float(w[last, v])
    mixer = math.sin(g.alpha[v] * beta)
    coupling = math.sin(2.0 * gamma * weight)
    others = [k for k in range(g.graph.n) if k not in (last, v)]
    cos_product = float(np.prod(np.cos(2.0 * gamma * w[v, others])))
    return AnalyticExpectation(weight * mixer * coupling * cos_product, weight, mixer, coupling, cos_product)


def depth1_expectation(g: AnnotatedGraph, last: int, v: int, beta: float, gamma: float) -> float:
    return depth1_terms(g, last, v, beta, gamma).value


def depth1_beta_derivative(g: AnnotatedGraph, last: int, v: int, beta: float, gamma: float) -> float:
    t = depth1_terms(g, last, v, beta, gamma)
    return t.weight * AVAILABLE * math.cos(AVAILABLE * beta) * t.coupling * t.cos_product


def depth1_greedy_tour(g: WeightedGraph, beta: float, gamma: float) -> Tour:
    state = AnnotatedGraph.initial(g)
    path = [0]
    while len(path) < g.n - 1:
        cand = [int(v) for v in state.available_nodes()]
        scores = [depth1_expectation(state, path[-1], v, beta, gamma) for v in cand]
        v = cand[int(np.argmax(scores))]
        path.append(v)
        state = state.visit(v)
    path.extend(int(v) for v in state.available_nodes())
    return Tour(tuple(path))
