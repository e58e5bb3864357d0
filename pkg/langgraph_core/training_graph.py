# langgraph_core/training_graph.py

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, TypedDict

from langgraph.graph import END, StateGraph

from agents.audit_agent import AuditAgent
from agents.baseline_agents import ExactSolverAgent, NearestNeighborAgent
from context import run_context
from trainer.config import TrainerConfig
from trainer.dqn import DqnTrainer, EvaluationResult, TrainResult, evaluate, training_summary
from trainer.reports import (
    TRAIN_SUMMARY,
    load_checkpoint,
    save_checkpoint,
    summarize,
    write_episode_csv,
    write_json,
    write_table,
)
from utils.instances import TspInstance, read_instances
from utils.tsp_graph import approximation_ratio

log = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.json"
EPISODES_FILE = "episodes.csv"
VALIDATION_FILE = "validation.csv"
SUMMARY_FILE = "summary.json"


class State(TypedDict, total=False):
    config: TrainerConfig
    ansatz: str
    depth: int
    train_path: str
    val_path: Optional[str]
    resume_path: Optional[str]
    out_dir: str
    instances: List[TspInstance]
    validation: List[TspInstance]
    result: TrainResult
    evaluation: Optional[EvaluationResult]
    nn_validation: Dict[str, Any]
    summary: Dict[str, Any]
    artifacts: List[str]
    audit: Dict[str, Any]


exact = ExactSolverAgent()
nearest = NearestNeighborAgent()
audit = AuditAgent()


def _with_optimal_tours(instances: List[TspInstance]) -> List[TspInstance]:
    if all(inst.tour is not None for inst in instances):
        return instances
    return [inst if inst.tour is not None else TspInstance(inst.graph, exact.run(inst.graph), inst.index)
            for inst in instances]


def n_load(s: State) -> State:
    s["instances"] = read_instances(s["train_path"])
    s["validation"] = _with_optimal_tours(read_instances(s["val_path"])) if s.get("val_path") else []
    return s


def n_train(s: State) -> State:
    resume = load_checkpoint(s["resume_path"]) if s.get("resume_path") else None
    trainer = DqnTrainer(s["config"], s["ansatz"], s["depth"], resume)
    s["result"] = trainer.train(s["instances"])
    return s


def n_evaluate(s: State) -> State:
    res = s["result"]
    s["evaluation"] = evaluate(res.params, res.kind, res.depth, s["validation"])
    nn_ratios = [approximation_ratio(inst.graph, nearest.run(inst.graph), inst.tour) for inst in s["validation"]]
    s["nn_validation"] = summarize(nn_ratios)
    log.info("Validation mean ratio %.4f (nearest neighbour %.4f)",
             s["evaluation"].summary["mean"], s["nn_validation"]["mean"])
    return s


def n_skip(s: State) -> State:
    s.update(evaluation=None, nn_validation={})
    return s


def n_export(s: State) -> State:
    out = Path(s["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    res, cfg = s["result"], s["config"]

    summary = training_summary(res, cfg)
    summary["run"] = run_context.build("train", cfg.to_dict(), cfg.seed)
    summary["config"] = cfg.to_dict()
    artifacts = [
        save_checkpoint(out / CHECKPOINT_FILE, res.checkpoint()),
        write_episode_csv(out / EPISODES_FILE, res.history),
    ]
    evaluation = s.get("evaluation")
    if evaluation is not None:
        artifacts.append(write_table(out / VALIDATION_FILE, evaluation.rows(s["validation"]),
                                     ["instance", "ratio", "tour"]))
        summary["validation"] = evaluation.summary
        summary["nearest_neighbor_validation"] = s.get("nn_validation", {})
    summary["artifacts"] = [p.name for p in artifacts] + [SUMMARY_FILE]
    artifacts.append(write_json(out / SUMMARY_FILE, summary, TRAIN_SUMMARY))

    s["summary"] = summary
    s["artifacts"] = [str(p) for p in artifacts]
    return s


def n_audit(s: State) -> State:
    s["audit"] = audit.log_event(s["summary"], s["artifacts"])
    return s


def build_training_graph():
    g = StateGraph(State)
    g.add_node("load", n_load)
    g.add_node("train", n_train)
    g.add_node("evaluate", n_evaluate)
    g.add_node("skip", n_skip)
    g.add_node("export", n_export)
    g.add_node("audit", n_audit)

    g.set_entry_point("load")
    g.add_edge("load", "train")
    g.add_conditional_edges(
        "train",
        lambda s: "evaluate" if s.get("validation") else "skip",
        {"evaluate": "evaluate", "skip": "skip"},
    )
    g.add_edge("evaluate", "export")
    g.add_edge("skip", "export")
    g.add_edge("export", "audit")
    g.add_edge("audit", END)

    return g.compile()


def run_training(**inputs: Any) -> State:
    """Run the training pipeline; ``inputs`` are the initial State fields."""
    return build_training_graph().invoke(State(**inputs))
