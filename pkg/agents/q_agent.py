# agents/q_agent.py

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from agents.base_agent import BaseAgent
from circuits.ansatz import AnsatzKind, AnsatzProgram, CircuitLayout, build
from sim_utils import zz_from_probs
from utils.errors import EpisodeCompleteError, ValidationError
from utils.tsp_graph import AnnotatedGraph, Tour, WeightedGraph, approximation_ratio, step_reward

MASK_VALUE = -10000.0

ProgramBuilder = Callable[[AnnotatedGraph], AnsatzProgram]


@dataclass(frozen=True, eq=False)
class QValues:
    values: np.ndarray
    mask: np.ndarray  # True where the node may be chosen

    def best(self) -> int:
        avail = np.flatnonzero(self.mask)
        if avail.size == 0:
            raise EpisodeCompleteError("no available node to choose")
        return int(avail[np.argmax(self.values[avail])])

    def margin(self) -> float:
        """Gap between the best and second-best unmasked value (inf with one candidate)."""
        vals = np.sort(self.values[self.mask])
        return float(vals[-1] - vals[-2]) if vals.size >= 2 else math.inf


@dataclass(frozen=True, eq=False)
class Transition:
    state: AnnotatedGraph
    last: int
    action: int
    reward: float
    next_state: AnnotatedGraph
    done: bool
    instance: int = -1


@dataclass(frozen=True, eq=False)
class EpisodeResult:
    tour: Tour
    rewards: tuple[float, ...]
    ratio: Optional[float] = None
    transitions: tuple[Transition, ...] = field(default=(), repr=False)
    margins: tuple[float, ...] = ()

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))


def program_builder(kind: AnsatzKind | str, p: int) -> ProgramBuilder:
    return partial(build, AnsatzKind.parse(kind), p=p)


def selection_mask(state: AnnotatedGraph) -> np.ndarray:
    mask = state.available.copy()
    mask[0] = False
    return mask


def zz_pairs(probs: np.ndarray, n: int, us: Sequence[int], vs: Sequence[int]) -> np.ndarray:
    """<Z_u Z_v> for row b of ``probs`` with (u, v) = (us[b], vs[b]); rows sharing a pair are reduced together."""
    pairs = np.stack([np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64)], axis=1)
    uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    out = np.empty(len(pairs))
    for k, (u, v) in enumerate(uniq):
        rows = np.flatnonzero(inv == k)
        out[rows] = zz_from_probs(probs[rows], n, int(u), int(v))
    return out


def masked_q(probs: np.ndarray, weights: np.ndarray, last: int, mask: np.ndarray) -> np.ndarray:
    """Q row from one state's probabilities: eps[last, v] <Z_last Z_v> on allowed v, MASK_VALUE elsewhere."""
    n = mask.size
    values = np.full(n, MASK_VALUE)
    for v in np.flatnonzero(mask):
        zz = zz_from_probs(probs.reshape(1, -1), n, last, int(v))[0]
        values[v] = weights[last, v] * zz
    return values


def q_table(layout: CircuitLayout, states: Sequence[AnnotatedGraph], lasts: Sequence[int],
            params: np.ndarray, threads: int = 1) -> list[QValues]:
    """Q-values for many states of equal size in one batched simulation."""
    coefs = np.stack([layout.coefficients(s) for s in states])
    probs = np.abs(layout.run(coefs, params, threads=threads)) ** 2
    out = []
    for row, (state, last) in enumerate(zip(states, lasts)):
        mask = selection_mask(state)
        out.append(QValues(masked_q(probs[row], state.graph.weights, int(last), mask), mask))
    return out


def q_values(program: AnsatzProgram, params: np.ndarray, state: AnnotatedGraph, last: int) -> QValues:
    mask = selection_mask(state)
    if not mask.any():
        raise EpisodeCompleteError("every node is already in the tour")
    if not 0 <= last < state.graph.n or mask[last]:
        raise ValidationError(f"node {last} is not part of the partial tour")
    coefs = program.coefs if program.graph is state else program.layout.coefficients(state)
    probs = np.abs(program.layout.run(coefs, params)[0]) ** 2
    return QValues(masked_q(probs, state.graph.weights, last, mask), mask)


def select_action(q: QValues, epsilon: float, rng: np.random.Generator) -> int:
    """epsilon-greedy over unmasked nodes; greedy ties go to the lowest index."""
    avail = np.flatnonzero(q.mask)
    if avail.size == 0:
        raise EpisodeCompleteError("no available node to choose")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.choice(avail))
    return int(avail[np.argmax(q.values[avail])])


def rollout(
    builder: ProgramBuilder,
    params: np.ndarray,
    g: WeightedGraph,
    epsilon: float,
    rng: np.random.Generator,
    optimum: Optional[Tour] = None,
    instance: int = -1,
    on_step: Optional[Callable[[Transition], None]] = None,
) -> EpisodeResult:
    """Build a tour from node 0 with n-2 selections; the last free node is appended automatically.

    ``params`` is read at every step, so ``on_step`` may update it in place.
    """
    n = g.n
    if n < 4:
        raise ValidationError(f"rollouts need at least 4 nodes, got {n}")
    state = AnnotatedGraph.initial(g)
    path = [0]
    rewards, transitions, margins = [], [], []
    for step in range(n - 2):
        last = path[-1]
        q = q_values(builder(state), params, state, last)
        v = select_action(q, epsilon, rng)
        margins.append(q.margin())
        reward = step_reward(g, path, v)
        path.append(v)
        next_state = state.visit(v)
        done = step == n - 3
        if done:
            u = int(next_state.available_nodes()[0])
            reward += step_reward(g, path, u)
            path.append(u)
            next_state = next_state.visit(u)
        t = Transition(state, last, v, reward, next_state, done, instance)
        transitions.append(t)
        rewards.append(reward)
        if on_step is not None:
            on_step(t)
        state = next_state

    tour = Tour(tuple(path))
    ratio = approximation_ratio(g, tour, optimum) if optimum is not None else None
    return EpisodeResult(tour, tuple(rewards), ratio, tuple(transitions), tuple(margins))


class QValueAgent(BaseAgent):
    """Greedy tour construction from a trained circuit."""

    def __init__(self, kind: AnsatzKind | str, depth: int, params: np.ndarray):
        super().__init__("QValueAgent")
        self.kind = AnsatzKind.parse(kind)
        self.depth = int(depth)
        self.params = np.asarray(params, dtype=float)
        self.builder = program_builder(self.kind, self.depth)

    def describe(self):
        return {"agent": self.name, "ansatz": self.kind.value, "depth": self.depth,
                "n_trainable": int(self.params.size)}

    def run(self, graph: WeightedGraph, optimum: Optional[Tour] = None) -> EpisodeResult:
        return rollout(self.builder, self.params, graph, 0.0, np.random.default_rng(0), optimum)
