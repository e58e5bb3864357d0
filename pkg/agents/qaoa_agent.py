# agents/qaoa_agent.py

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from agents.base_agent import BaseAgent
from sim_utils import CHUNK_AMPLITUDES, Statevector, apply_cost_phase, apply_rx
from utils.errors import CapacityError, InfeasibleRunError, ValidationError
from utils.qubo import QuboProblem, bits_of, build_qubo, decode
from utils.tsp_graph import Tour, WeightedGraph, approximation_ratio, tour_cost

MAX_QAOA_QUBITS = 16
DEFAULT_BUDGET = 500
MAX_EVALUATIONS = 500
DEFAULT_SAMPLES = 100
# outcomes below this probability are never measured
MIN_PROBABILITY = 1e-12


class QaoaOptimizer(str, Enum):
    NELDER_MEAD = "nelder-mead"
    COBYLA = "cobyla"


def _check_size(q: QuboProblem) -> None:
    if q.n_vars > MAX_QAOA_QUBITS:
        raise CapacityError(f"QAOA supports at most {MAX_QAOA_QUBITS} qubits, instance needs {q.n_vars}")


def _split_params(params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows of [gamma_1..gamma_p, beta_1..beta_p] -> (gammas, betas), each (B, p)."""
    params = np.atleast_2d(np.asarray(params, dtype=float))
    if params.shape[1] % 2:
        raise ValidationError(f"QAOA parameters come in (gamma, beta) pairs, got {params.shape[1]}")
    p = params.shape[1] // 2
    return params[:, :p], params[:, p:]


def _states_chunk(q: QuboProblem, params: np.ndarray) -> np.ndarray:
    n = q.n_vars
    gammas, betas = _split_params(params)
    amps = np.full((gammas.shape[0], 1 << n), 2.0 ** (-n / 2), dtype=np.complex128)
    for layer in range(gammas.shape[1]):
        apply_cost_phase(amps, gammas[:, layer], q.cost_diagonal)
        for qubit in range(n):
            apply_rx(amps, n, qubit, 2.0 * betas[:, layer])
    return amps


def qaoa_state(q: QuboProblem, params: np.ndarray) -> Statevector:
    _check_size(q)
    return Statevector(q.n_vars, _states_chunk(q, params)[0])


def expected_costs(q: QuboProblem, params: np.ndarray, threads: int = 1) -> np.ndarray:
    """<C> for every parameter row, simulated in memory-bounded chunks."""
    _check_size(q)
    params = np.atleast_2d(np.asarray(params, dtype=float))
    per_chunk = max(1, CHUNK_AMPLITUDES >> q.n_vars)
    bounds = [(lo, min(len(params), lo + per_chunk)) for lo in range(0, len(params), per_chunk)]

    def chunk(lo_hi: tuple[int, int]) -> np.ndarray:
        lo, hi = lo_hi
        return (np.abs(_states_chunk(q, params[lo:hi])) ** 2) @ q.cost_diagonal

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(chunk, bounds))
    else:
        parts = [chunk(b) for b in bounds]
    return np.concatenate(parts)


def best_feasible(g: WeightedGraph, q: QuboProblem, params: np.ndarray,
                  samples: int = DEFAULT_SAMPLES) -> tuple[Optional[Tour], Optional[int]]:
    """Cheapest feasible tour among the ``samples`` most probable outcomes."""
    probs = qaoa_state(q, params).probabilities()
    order = np.argsort(-probs, kind="stable")[:samples]
    best, best_idx, best_cost = None, None, math.inf
    for idx in order:
        if probs[idx] < MIN_PROBABILITY:
            break
        tour = decode(bits_of(int(idx), q.n_vars), q)
        if tour is None:
            continue
        c = tour_cost(g, tour)
        if c < best_cost:
            best, best_idx, best_cost = tour, int(idx), c
    return best, best_idx


def random_search(q: QuboProblem, budget: int, rng: np.random.Generator,
                  threads: int = 1) -> tuple[np.ndarray, float]:
    """Uniform search over (gamma, beta) in [0, 2pi]^2 for one layer."""
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    cands = rng.uniform(0.0, 2.0 * np.pi, size=(budget, 2))
    costs = expected_costs(q, cands, threads)
    k = int(np.argmin(costs))
    return cands[k].copy(), float(costs[k])


def extend_layer(params: np.ndarray) -> np.ndarray:
    gammas, betas = _split_params(params)
    return np.concatenate([gammas[0], [0.0], betas[0], [0.0]])


def refine(q: QuboProblem, x0: np.ndarray, optimizer: QaoaOptimizer | str = QaoaOptimizer.NELDER_MEAD,
           max_evaluations: int = MAX_EVALUATIONS) -> tuple[np.ndarray, float, int]:
    """Derivative-free local search on <C>; never returns a point worse than ``x0``."""
    optimizer = QaoaOptimizer(optimizer)
    best = {"x": np.asarray(x0, dtype=float).copy(), "f": math.inf, "n": 0}

    def fun(x: np.ndarray) -> float:
        f = float(expected_costs(q, x)[0])
        best["n"] += 1
        if f < best["f"]:
            best["x"], best["f"] = np.array(x, dtype=float), f
        return f

    fun(best["x"])
    if optimizer is QaoaOptimizer.NELDER_MEAD:
        minimize(fun, best["x"].copy(), method="Nelder-Mead", options={"maxfev": max_evaluations})
    else:
        minimize(fun, best["x"].copy(), method="COBYLA", options={"maxiter": max_evaluations})
    return best["x"], best["f"], best["n"]


@dataclass
class QaoaRun:
    depth: int
    params: np.ndarray
    expected_cost: float
    evaluations: int
    tour: Optional[Tour]
    ratio: Optional[float]
    mode: str = "optimized"

    @property
    def feasible(self) -> bool:
        return self.tour is not None

    def require_tour(self) -> Tour:
        if self.tour is None:
            raise InfeasibleRunError(f"depth {self.depth}: no feasible tour among the measured outcomes")
        return self.tour


def _finish(g: WeightedGraph, q: QuboProblem, depth: int, params: np.ndarray, cost: float, evals: int,
            optimum: Optional[Tour], samples: int, mode: str) -> QaoaRun:
    tour, _ = best_feasible(g, q, params, samples)
    ratio = approximation_ratio(g, tour, optimum) if tour is not None and optimum is not None else None
    return QaoaRun(depth, params, cost, evals, tour, ratio, mode)


def optimize_qaoa(g: WeightedGraph, q: QuboProblem, p: int, rng: np.random.Generator,
                  budget: int = DEFAULT_BUDGET, optimizer: QaoaOptimizer | str = QaoaOptimizer.NELDER_MEAD,
                  optimum: Optional[Tour] = None, samples: int = DEFAULT_SAMPLES,
                  threads: int = 1) -> list[QaoaRun]:
    """Random search at depth 1, then layerwise refinement up to depth ``p``; one run per depth."""
    _check_size(q)
    if p < 1:
        raise ValidationError(f"depth must be >= 1, got {p}")
    params, cost = random_search(q, budget, rng, threads)
    runs = [_finish(g, q, 1, params, cost, budget, optimum, samples, "optimized")]
    for depth in range(2, p + 1):
        params, cost, evals = refine(q, extend_layer(params), optimizer)
        runs.append(_finish(g, q, depth, params, cost, evals, optimum, samples, "optimized"))
    return runs


class QaoaAgent(BaseAgent):
    def __init__(self, depth: int = 3, budget: int = DEFAULT_BUDGET,
                 optimizer: QaoaOptimizer | str = QaoaOptimizer.NELDER_MEAD, samples: int = DEFAULT_SAMPLES,
                 penalty: float = 1.0, threads: int = 1, rng: Optional[np.random.Generator] = None):
        super().__init__("QaoaAgent")
        self.depth = depth
        self.budget = budget
        self.optimizer = QaoaOptimizer(optimizer)
        self.samples = samples
        self.penalty = penalty
        self.threads = threads
        self.rng = rng or np.random.default_rng(0)

    def run(self, graph: WeightedGraph, optimum: Optional[Tour] = None) -> list[QaoaRun]:
        q = build_qubo(graph, self.penalty)
        runs = optimize_qaoa(graph, q, self.depth, self.rng, self.budget, self.optimizer, optimum,
                             self.samples, self.threads)
        for run in runs:
            if not run.feasible:
                self.log.warning("depth %d: no feasible tour among the %d most likely outcomes", run.depth, self.samples)
        return runs

    def transfer(self, graph: WeightedGraph, params: np.ndarray, optimum: Optional[Tour] = None) -> QaoaRun:
        """Evaluate fixed parameters from another instance without optimizing."""
        q = build_qubo(graph, self.penalty)
        params = np.asarray(params, dtype=float)
        cost = float(expected_costs(q, params)[0])
        return _finish(graph, q, params.size // 2, params, cost, 1, optimum, self.samples, "transfer")
