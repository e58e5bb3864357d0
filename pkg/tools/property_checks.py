# tools/property_checks.py

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.spatial.distance import pdist

from agents.q_agent import masked_q, program_builder, q_values, rollout
from circuits.ansatz import AnsatzKind, build, evaluate, init_params, layout_for
from sim_utils import apply_permutation
from tools.analytic_oracle import depth1_expectation
from trainer.gradients import GradientMethod, q_gradients, relative_error
from utils.errors import ValidationError
from utils.permutations import random_permutation
from utils.tsp_graph import AnnotatedGraph, WeightedGraph

log = logging.getLogger(__name__)

EQUIVARIANCE_TOL = 1e-10
ANALYTIC_TOL = 1e-9
GRADIENT_TOL = 1e-5
# tours are only compared when every greedy choice wins by more than this
TIE_MARGIN = 1e-9


@dataclass
class CheckReport:
    name: str
    trials: int
    max_deviation: float
    tolerance: float
    elapsed: float = 0.0
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status} {self.name}: max deviation {self.max_deviation:.3e} "
                f"(tolerance {self.tolerance:.0e}, {self.trials} trials, {self.elapsed:.1f}s)")


def _random_graph(rng: np.random.Generator, n: int) -> WeightedGraph:
    # suites go down to 3 nodes, below the instance generator's minimum
    coords = rng.uniform(0.0, 1.0, size=(n, 2))
    while np.any(pdist(coords) == 0.0):
        coords = rng.uniform(0.0, 1.0, size=(n, 2))
    return WeightedGraph.from_coords(coords)


def _random_partial(rng: np.random.Generator, n: int, min_free: int = 1) -> list[int]:
    size = int(rng.integers(1, n - min_free + 1))
    return [0] + (1 + rng.permutation(n - 1))[: size - 1].tolist()


def _timed(name: str, trials: int, tol: float, body: Callable[[], tuple[float, dict]]) -> CheckReport:
    t0 = time.perf_counter()
    worst, details = body()
    report = CheckReport(name, trials, worst, tol, time.perf_counter() - t0, details)
    log.info(report.line())
    return report


def check_state_equivariance(trials: int, seed: int) -> CheckReport:
    """EQC state on a relabeled graph equals the qubit-permuted state on the original."""
    rng = np.random.default_rng(seed)

    def body():
        worst = 0.0
        for _ in range(trials):
            n, p = int(rng.integers(3, 9)), int(rng.integers(1, 4))
            g = AnnotatedGraph.from_partial(_random_graph(rng, n), _random_partial(rng, n))
            params = rng.uniform(-2 * np.pi, 2 * np.pi, size=2 * p)
            sigma = rng.permutation(n)
            lhs = evaluate(build(AnsatzKind.EQC, g.permuted(sigma), p), params)
            rhs = apply_permutation(evaluate(build(AnsatzKind.EQC, g, p), params), sigma)
            worst = max(worst, float(np.max(np.abs(lhs.amplitudes - rhs.amplitudes))))
        return worst, {}

    return _timed("state equivariance", trials, EQUIVARIANCE_TOL, body)


def check_q_equivariance(trials: int, seed: int) -> CheckReport:
    rng = np.random.default_rng(seed)

    def body():
        worst = 0.0
        for _ in range(trials):
            n, p = int(rng.integers(4, 9)), int(rng.integers(1, 4))
            partial = _random_partial(rng, n)
            g = AnnotatedGraph.from_partial(_random_graph(rng, n), partial)
            last = partial[-1]
            params = rng.uniform(-2 * np.pi, 2 * np.pi, size=2 * p)
            sigma = rng.permutation(n)
            gp = g.permuted(sigma)
            probs = evaluate(build(AnsatzKind.EQC, g, p), params).probabilities()
            probs_p = evaluate(build(AnsatzKind.EQC, gp, p), params).probabilities()
            q = masked_q(probs, g.graph.weights, last, g.available)
            qp = masked_q(probs_p, gp.graph.weights, int(sigma[last]), gp.available)
            worst = max(worst, float(np.max(np.abs(qp[sigma] - q))))
        return worst, {}

    return _timed("Q-value equivariance", trials, EQUIVARIANCE_TOL, body)


def check_tour_equivariance(trials: int, seed: int) -> CheckReport:
    """Greedy tours on relabeled instances are the relabeled tours (tie-free instances only)."""
    rng = np.random.default_rng(seed)
    builders: dict[int, Any] = {}

    def body():
        mismatches, compared = 0, 0
        for _ in range(trials):
            n, p = int(rng.integers(4, 9)), int(rng.integers(1, 4))
            builder = builders.setdefault(p, program_builder(AnsatzKind.EQC, p))
            g = _random_graph(rng, n)
            params = rng.uniform(-2 * np.pi, 2 * np.pi, size=2 * p)
            sigma = random_permutation(n, rng, fix_first=True)
            a = rollout(builder, params, g, 0.0, rng)
            b = rollout(builder, params, g.permuted(sigma), 0.0, rng)
            if min(a.margins + b.margins) <= TIE_MARGIN:
                continue
            compared += 1
            mismatches += int(b.tour != a.tour.relabeled(sigma))
        return float(mismatches), {"compared": compared, "skipped_ties": trials - compared}

    return _timed("tour equivariance", trials, 0.5, body)


def check_analytic(trials: int, seed: int) -> CheckReport:
    """Depth-1 EQC Q-values against the closed form."""
    rng = np.random.default_rng(seed)

    def body():
        worst = 0.0
        for _ in range(trials):
            n = int(rng.integers(3, 7))
            partial = _random_partial(rng, n)
            g = AnnotatedGraph.from_partial(_random_graph(rng, n), partial)
            beta, gamma = rng.uniform(-2 * np.pi, 2 * np.pi, size=2)
            q = q_values(build(AnsatzKind.EQC, g, 1), np.array([gamma, beta]), g, partial[-1])
            for v in np.flatnonzero(q.mask):
                exact = depth1_expectation(g, partial[-1], int(v), beta, gamma)
                worst = max(worst, abs(q.values[v] - exact))
        return worst, {}

    return _timed("analytic depth-1", trials, ANALYTIC_TOL, body)


def check_gradients(trials: int, seed: int, n: int = 4) -> CheckReport:
    """Parameter-shift against central differences for every circuit family at p = 1, 2."""
    rng = np.random.default_rng(seed)

    def body():
        worst, per_kind = 0.0, {}
        for kind in AnsatzKind:
            for p in (1, 2):
                layout = layout_for(kind, n, p)
                kind_worst = 0.0
                for _ in range(max(1, trials // 8)):
                    partial = _random_partial(rng, n)
                    g = AnnotatedGraph.from_partial(_random_graph(rng, n), partial)
                    last = partial[-1]
                    action = int(rng.choice(np.flatnonzero(g.available)))
                    params = init_params(kind, n, p, rng, scale=np.pi)
                    args = (layout, layout.coefficients(g)[None], params, [last], [action],
                            np.array([g.graph.weights[last, action]]))
                    shift = q_gradients(*args, method=GradientMethod.PARAMETER_SHIFT)
                    diff = q_gradients(*args, method=GradientMethod.CENTRAL_DIFFERENCE)
                    kind_worst = max(kind_worst, relative_error(shift, diff))
                per_kind[f"{kind.value}/p{p}"] = kind_worst
                worst = max(worst, kind_worst)
        return worst, per_kind

    return _timed("gradients", trials, GRADIENT_TOL, body)


SUITES: dict[str, list[Callable[[int, int], CheckReport]]] = {
    "equivariance": [check_state_equivariance, check_q_equivariance, check_tour_equivariance],
    "analytic": [check_analytic],
    "gradients": [check_gradients],
}


def run_suite(what: str, trials: int, seed: int) -> list[CheckReport]:
    if what not in SUITES:
        raise ValidationError(f"unknown check {what!r}; choose from {sorted(SUITES)}")
    return [check(trials, seed) for check in SUITES[what]]
