# orchestrator.py

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from agents.baseline_agents import ExactSolverAgent, NearestNeighborAgent, RandomTourAgent, christofides_bound
from agents.qaoa_agent import QaoaAgent, QaoaRun
from context import run_context
from trainer.reports import BASELINE_SUMMARY, QAOA_SUMMARY, summarize, write_json, write_table
from utils.errors import ValidationError
from utils.instances import TspInstance, generate_instances, read_instances
from utils.tsp_graph import approximation_ratio, tour_cost

log = logging.getLogger(__name__)

BASELINE_COLUMNS = ["instance", "optimal_cost", "nn_cost", "nn_ratio", "random_ratio",
                    "christofides_bound", "nn_within_bound"]
QAOA_COLUMNS = ["instance", "depth", "mode", "expected_cost", "ratio", "feasible", "evaluations",
                "christofides_bound", "params"]

# Initialize agents
exact = ExactSolverAgent()


def load_solved(path: Optional[str | Path] = None, cities: int = 5, count: int = 10,
                seed: int = 0) -> List[TspInstance]:
    """Instances from a file (or freshly generated) with exact optimal tours attached."""
    if path is not None:
        instances = read_instances(path)
    else:
        instances = [TspInstance(g, None, k) for k, g in enumerate(generate_instances(cities, count, seed))]
    return exact.attach(instances)


def run_baseline(instances: Sequence[TspInstance], seed: int = 0, random_samples: int = 1000,
                 random_start: bool = False) -> tuple[list[dict[str, Any]], dict[str, Any]]:
    rng = np.random.default_rng(seed)
    nearest = NearestNeighborAgent(random_start=random_start, rng=rng)
    randomizer = RandomTourAgent(rng=rng, samples=random_samples)
    rows = []
    for inst in instances:
        g, opt = inst.graph, inst.tour
        nn = nearest.run(g)
        bound = christofides_bound(g, opt)
        nn_cost = tour_cost(g, nn)
        rows.append({
            "instance": inst.index,
            "optimal_cost": tour_cost(g, opt),
            "nn_cost": nn_cost,
            "nn_ratio": approximation_ratio(g, nn, opt),
            "random_ratio": randomizer.mean_ratio(g, opt),
            "christofides_bound": bound,
            "nn_within_bound": nn_cost <= bound,
        })
    summary = {
        "nearest_neighbor": summarize(r["nn_ratio"] for r in rows),
        "random": summarize(r["random_ratio"] for r in rows),
        "random_samples": random_samples,
        "random_start": random_start,
    }
    log.info("Baselines on %d instances: NN mean %.4f, random mean %.4f",
             len(rows), summary["nearest_neighbor"].get("mean", float("nan")),
             summary["random"].get("mean", float("nan")))
    return rows, summary


def write_baseline_report(out: str | Path, rows: list[dict[str, Any]], summary: dict[str, Any],
                          config: Dict[str, Any]) -> list[Path]:
    out = Path(out)
    summary = dict(summary, run=run_context.build("baseline", config, config.get("seed")))
    return [write_table(out, rows, BASELINE_COLUMNS), write_json(out.with_suffix(".json"), summary, BASELINE_SUMMARY)]


def _qaoa_row(inst: TspInstance, run: QaoaRun) -> dict[str, Any]:
    return {
        "instance": inst.index,
        "depth": run.depth,
        "mode": run.mode,
        "expected_cost": run.expected_cost,
        "ratio": run.ratio if run.ratio is not None else float("nan"),
        "feasible": run.feasible,
        "evaluations": run.evaluations,
        "christofides_bound": christofides_bound(inst.graph, inst.tour),
        "params": " ".join(repr(float(x)) for x in run.params),
    }


def read_params_file(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"parameter file not found: {path}")
    data = json.loads(path.read_text())
    if "params_hex" in data:
        return np.array([float.fromhex(v) for v in data["params_hex"]])
    if "params" in data:
        return np.asarray(data["params"], dtype=float)
    raise ValidationError(f"{path}: no 'params' entry")


def best_params(results: list[tuple[TspInstance, list[QaoaRun]]], depth: int) -> Optional[tuple[int, QaoaRun]]:
    """Deepest-layer run with the lowest ratio (ties: lowest expected cost)."""
    cands = [(inst.index, runs[depth - 1]) for inst, runs in results
             if len(runs) >= depth and runs[depth - 1].ratio is not None]
    if not cands:
        return None
    return min(cands, key=lambda c: (c[1].ratio, c[1].expected_cost))


def run_qaoa(instances: Sequence[TspInstance], depth: int = 3, budget: int = 500, optimizer: str = "nelder-mead",
             samples: int = 100, penalty: float = 1.0, seed: int = 0, threads: int = 1,
             transfer_params: Optional[np.ndarray] = None,
             save_params: Optional[str | Path] = None) -> tuple[list[dict[str, Any]], dict[str, Any]]:
    agent = QaoaAgent(depth=depth, budget=budget, optimizer=optimizer, samples=samples, penalty=penalty,
                      threads=threads, rng=np.random.default_rng(seed))
    rows, results = [], []
    for inst in instances:
        runs = agent.run(inst.graph, inst.tour)
        results.append((inst, runs))
        rows.extend(_qaoa_row(inst, r) for r in runs)
        if transfer_params is not None:
            rows.append(_qaoa_row(inst, agent.transfer(inst.graph, transfer_params, inst.tour)))
        log.info("QAOA instance %d: ratios by depth %s", inst.index,
                 [None if r.ratio is None else round(r.ratio, 4) for r in runs])

    summary: dict[str, Any] = {"depth": depth, "budget": budget, "optimizer": optimizer, "samples": samples}
    for mode in ("optimized", "transfer"):
        for d in range(1, depth + 1):
            ratios = [r["ratio"] for r in rows if r["mode"] == mode and r["depth"] == d]
            if ratios:
                summary[f"{mode}_p{d}"] = dict(
                    summarize(ratios), infeasible=sum(1 for r in rows if r["mode"] == mode
                                                      and r["depth"] == d and not r["feasible"]))

    if save_params is not None:
        best = best_params(results, depth)
        if best is None:
            log.warning("No feasible depth-%d run; parameter file not written", depth)
        else:
            index, run = best
            write_json(save_params, {"depth": run.depth, "instance": index, "ratio": run.ratio,
                                     "params": [float(x) for x in run.params],
                                     "params_hex": [float(x).hex() for x in run.params]})
            summary["saved_params"] = str(save_params)
    return rows, summary


def write_qaoa_report(out: str | Path, rows: list[dict[str, Any]], summary: dict[str, Any],
                      config: Dict[str, Any]) -> list[Path]:
    out = Path(out)
    summary = dict(summary, run=run_context.build("qaoa", config, config.get("seed")))
    return [write_table(out, rows, QAOA_COLUMNS), write_json(out.with_suffix(".json"), summary, QAOA_SUMMARY)]
