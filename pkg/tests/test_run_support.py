import json
import logging

import numpy as np
import pytest

from agents import audit_agent
from agents.audit_agent import AuditAgent
from agents.base_agent import jsonable
from context import run_context
from langgraph_core.training_graph import run_training
from trainer.config import TrainerConfig
from utils import log_setup
from utils.errors import (
    EXIT_CAPACITY,
    EXIT_FAILURE,
    EXIT_USAGE,
    CapacityError,
    ConfigError,
    TrainingDivergedError,
    ValidationError,
    exit_code_for,
)
from utils.instances import TspInstance, write_instances


def test_exit_codes():
    assert exit_code_for(CapacityError("x")) == EXIT_CAPACITY
    assert exit_code_for(ConfigError("x")) == EXIT_USAGE
    assert exit_code_for(FileNotFoundError("x")) == EXIT_USAGE
    assert exit_code_for(ValidationError("x")) == EXIT_FAILURE
    assert exit_code_for(TrainingDivergedError("x")) == EXIT_FAILURE


def test_run_context():
    cfg = TrainerConfig().to_dict()
    ctx = run_context.build("train", cfg, 3)
    assert ctx["command"] == "train" and ctx["seed"] == 3
    assert ctx["config_digest"] == run_context.config_digest(cfg)
    assert ctx["run_id"].startswith("train-" + ctx["config_digest"][:12])
    assert run_context.config_digest(TrainerConfig(seed=1).to_dict()) != ctx["config_digest"]
    assert {"python", "numpy", "scipy"} <= set(ctx["versions"])


def test_jsonable_converts_numpy():
    out = jsonable({"a": np.float64(1.5), "b": np.arange(3), "c": [np.int64(2), (np.bool_(True),)]})
    assert json.dumps(out) == '{"a": 1.5, "b": [0, 1, 2], "c": [2, [true]]}'


def test_audit_without_destinations_is_local_only(monkeypatch):
    for var in (audit_agent.ENV_BQ_PROJECT, audit_agent.ENV_GCS_BUCKET):
        monkeypatch.delenv(var, raising=False)
    agent = AuditAgent()
    assert agent.log_event({"ansatz": "eqc"}, []) == {"bigquery": False, "gcs": False}
    agent.flush()


def test_audit_row():
    row = AuditAgent.build_row({
        "ansatz": "eqc", "depth": 1, "n_qubits": 5, "n_trainable": 2, "episodes": 10, "solved": False,
        "validation": {"mean": 1.07}, "run": {"run_id": "train-abc"}, "params": np.zeros(2),
    })
    assert row["run_id"] == "train-abc"
    assert row["validation_mean"] == 1.07
    assert json.loads(row["summary_json"])["params"] == [0.0, 0.0]


def test_audit_upload_failures_are_logged(monkeypatch, tmp_path, caplog):
    class Broken:
        def bucket(self, name):
            raise RuntimeError("no credentials")

    monkeypatch.setattr(audit_agent.storage, "Client", lambda: Broken())
    agent = AuditAgent(project="", bucket="some-bucket")
    with caplog.at_level(logging.WARNING):
        attempted = agent.log_event({"run": {"run_id": "r1"}}, [tmp_path / "a.json"])
        agent.flush()
    assert attempted == {"bigquery": False, "gcs": True}
    assert "GCS upload failed" in caplog.text


def test_cloud_logging_falls_back(monkeypatch, caplog):
    def refuse():
        raise RuntimeError("no credentials")

    monkeypatch.setattr(log_setup, "_configured", False)
    monkeypatch.setattr(log_setup.google.cloud.logging, "Client", refuse)
    with caplog.at_level(logging.WARNING):
        log_setup.configure_logging("INFO", cloud=True)
    assert "Cloud logging unavailable" in caplog.text
    assert log_setup._configured


def test_training_graph_without_validation(tmp_path, solved_instances):
    train = tmp_path / "train.txt"
    write_instances(train, solved_instances)
    state = run_training(config=TrainerConfig(episodes_max=2), ansatz="hwe", depth=1,
                         train_path=str(train), out_dir=str(tmp_path / "out"))
    assert state["evaluation"] is None
    assert state["summary"]["n_trainable"] == 5
    assert sorted(p.rsplit("/", 1)[-1] for p in state["artifacts"]) == [
        "checkpoint.json", "episodes.csv", "summary.json",
    ]
    assert state["audit"] == {"bigquery": False, "gcs": False}


def test_training_graph_fills_validation_tours(tmp_path, solved_instances):
    train, val = tmp_path / "train.txt", tmp_path / "val.txt"
    write_instances(train, solved_instances)
    write_instances(val, [TspInstance(i.graph, None, i.index) for i in solved_instances[:2]])
    state = run_training(config=TrainerConfig(episodes_max=1), ansatz="eqc", depth=1, train_path=str(train),
                         val_path=str(val), out_dir=str(tmp_path / "out"))
    assert all(inst.tour is not None for inst in state["validation"])
    assert state["summary"]["validation"]["count"] == 2
    assert "mean" in state["summary"]["nearest_neighbor_validation"]


@pytest.mark.parametrize("ansatz", ["eqc", "neqc", "hwete", "hwe"])
def test_every_ansatz_trains(tmp_path, solved_instances, ansatz):
    train = tmp_path / "train.txt"
    write_instances(train, solved_instances)
    cfg = TrainerConfig(episodes_max=2, warmup=0, batch_size=2, memory_capacity=10)
    state = run_training(config=cfg, ansatz=ansatz, depth=1, train_path=str(train), out_dir=str(tmp_path / "out"))
    assert state["result"].steps == 6
