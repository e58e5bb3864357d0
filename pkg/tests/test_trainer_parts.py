import math

import numpy as np
import pytest

from agents.q_agent import program_builder, rollout
from circuits.ansatz import AnsatzKind
from trainer.config import TrainerConfig, load_config
from trainer.optim import AdamOptimizer
from trainer.replay import ReplayMemory
from trainer.reports import (
    QAOA_SUMMARY,
    TRAIN_SUMMARY,
    Checkpoint,
    compare_ratios,
    load_checkpoint,
    read_ratio_column,
    running_mean,
    save_checkpoint,
    summarize,
    write_json,
    write_table,
)
from utils.errors import ConfigError, ValidationError


# ---------------------------------------------------------------- config


def test_config_defaults():
    cfg = TrainerConfig()
    assert (cfg.episodes_max, cfg.solve_window, cfg.solve_threshold) == (5000, 100, 1.05)
    assert (cfg.batch_size, cfg.memory_capacity, cfg.target_update_interval) == (32, 10_000, 30)
    assert (cfg.gamma, cfg.epsilon_start, cfg.epsilon_end, cfg.epsilon_decay) == (0.9, 1.0, 0.01, 0.99)
    assert cfg.warmup == 1000
    assert cfg.learning_rate_for("eqc") == 1e-2
    assert cfg.learning_rate_for(AnsatzKind.NEQC) == 1e-3
    assert TrainerConfig(learning_rate=0.2).learning_rate_for("eqc") == 0.2


def test_config_file_and_overrides(test_data_dir):
    cfg = load_config(test_data_dir / "trainer_config.env")
    assert cfg.episodes_max == 3
    assert cfg.batch_size == 4
    assert cfg.warmup == 0
    assert cfg.gamma == 0.5
    assert cfg.learning_rate == 0.05
    cfg = load_config(test_data_dir / "trainer_config.env", {"gamma": 0.7, "seed": None})
    assert cfg.gamma == 0.7
    assert cfg.seed == 0


@pytest.mark.parametrize(
    "overrides",
    [{"no_such_key": "1"}, {"batch_size": "many"}, {"gamma": "2"}, {"epsilon_end": "0.5", "epsilon_start": "0.1"},
     {"gradient_method": "adjoint"}, {"memory_capacity": "8", "batch_size": "16"}],
)
def test_bad_config(overrides):
    with pytest.raises(ConfigError):
        TrainerConfig().with_overrides(overrides)


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "missing.env")


def test_canonical_json_is_stable():
    assert TrainerConfig().canonical_json() == TrainerConfig().canonical_json()
    assert TrainerConfig().canonical_json() != TrainerConfig(seed=1).canonical_json()


# ---------------------------------------------------------------- replay


def _transitions(count: int, rng):
    from utils.instances import generate_instances

    g = generate_instances(5, 1, 1)[0]
    out = []
    builder = program_builder("eqc", 1)
    while len(out) < count:
        out.extend(rollout(builder, np.zeros(2), g, 1.0, rng).transitions)
    return out[:count]


def test_replay_is_fifo(rng):
    items = _transitions(5, rng)
    memory = ReplayMemory(3, rng)
    for t in items:
        memory.push(t)
    assert len(memory) == 3
    assert {id(t) for t in memory.sample(3)} == {id(t) for t in items[2:]}


def test_replay_samples_without_replacement(rng):
    memory = ReplayMemory(100, rng)
    for t in _transitions(12, rng):
        memory.push(t)
    batch = memory.sample(12)
    assert len({id(t) for t in batch}) == 12
    with pytest.raises(ValidationError):
        memory.sample(13)


# ---------------------------------------------------------------- adam


def test_first_adam_step():
    theta, g, lr = np.array([0.5, -1.0]), np.array([0.2, -3.0]), 0.01
    opt = AdamOptimizer(theta, lr)
    new = opt.step(g)
    # bias-corrected moments of one step are g and g**2
    assert np.allclose(new, theta - lr * g / (np.abs(g) + 1e-8), rtol=0, atol=1e-12)
    assert opt.state()["step"] == 1


def test_adam_state_restores():
    a = AdamOptimizer(np.array([0.1, 0.2, 0.3]), 0.05)
    a.step(np.array([1.0, -2.0, 0.5]))
    st = a.state()
    b = AdamOptimizer(a.params, 0.05)
    b.load_state(st["step"], st["exp_avg"], st["exp_avg_sq"])
    g = np.array([0.3, 0.1, -0.7])
    assert np.allclose(a.step(g), b.step(g), rtol=0, atol=1e-15)


def test_fresh_adam_state_is_zero():
    st = AdamOptimizer(np.zeros(4), 0.1).state()
    assert st["step"] == 0
    assert not st["exp_avg"].any()


# ---------------------------------------------------------------- reports


def test_summarize():
    s = summarize([1.0, 2.0, 3.0, 4.0, math.nan])
    assert s["count"] == 4
    assert s["mean"] == 2.5
    assert s["median"] == 2.5
    assert s["q1"] == 1.75 and s["q3"] == 3.25
    assert s["sem"] == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2)
    assert summarize([]) == {"count": 0}


def test_running_mean():
    assert running_mean([1.0, 2.0, 3.0], 2) == [1.0, 1.5, 2.5]


def test_compare_ratios(tmp_path):
    a = write_table(tmp_path / "a.csv", [{"ratio": r} for r in (1.0, 1.1, 1.2)])
    b = write_table(tmp_path / "b.csv", [{"ratio": r} for r in (1.3, 1.4, 1.5)])
    res = compare_ratios(read_ratio_column(a), read_ratio_column(b))
    assert res["t_statistic"] < 0
    assert res["p_value"] < 0.05
    with pytest.raises(ValidationError):
        compare_ratios(np.array([1.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValidationError):
        read_ratio_column(a, "nn_ratio")


def test_checkpoint_round_trip(tmp_path, rng):
    params = rng.uniform(-1, 1, size=15)
    ckpt = Checkpoint(AnsatzKind.NEQC, 5, 1, params, episode=7, epsilon=0.93206534790699,
                      optimizer={"step": 3, "exp_avg": rng.normal(size=15), "exp_avg_sq": rng.random(15)})
    path = save_checkpoint(tmp_path / "ckpt.json", ckpt)
    back = load_checkpoint(path)
    assert back.kind is AnsatzKind.NEQC
    assert (back.n_qubits, back.depth, back.episode) == (5, 1, 7)
    assert np.array_equal(back.params, params)
    assert back.epsilon == ckpt.epsilon
    assert np.array_equal(back.optimizer["exp_avg"], ckpt.optimizer["exp_avg"])


def test_checkpoint_rejections(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(tmp_path / "none.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"format": "other", "version": 1}')
    with pytest.raises(ValidationError):
        load_checkpoint(bad)
    wrong = save_checkpoint(tmp_path / "wrong.json", Checkpoint(AnsatzKind.EQC, 5, 2, np.zeros(3)))
    with pytest.raises(ValidationError):
        load_checkpoint(wrong)


def _train_summary():
    return {
        "ansatz": "eqc", "depth": 1, "n_qubits": 5, "n_trainable": 2, "episodes": 3, "steps": 9,
        "optimizer_steps": 0, "solved": False, "train_final_window": {"count": 3}, "train_running_mean_10": 1.1,
        "run": {}, "config": {}, "artifacts": ["summary.json"],
    }


def test_summary_schema_accepts_documented_keys(tmp_path):
    summary = _train_summary()
    TRAIN_SUMMARY.validate(summary)
    TRAIN_SUMMARY.validate(dict(summary, train_running_mean_10=None, validation={"count": 0}))
    path = write_json(tmp_path / "summary.json", dict(summary, depth=np.int64(2)), TRAIN_SUMMARY)
    assert path.is_file()


@pytest.mark.parametrize("change", [
    {"solved": "no"},
    {"episodes": 2.5},
    {"extra": 1},
])
def test_summary_schema_rejects_bad_summaries(tmp_path, change):
    with pytest.raises(ValidationError):
        write_json(tmp_path / "summary.json", dict(_train_summary(), **change), TRAIN_SUMMARY)
    assert not (tmp_path / "summary.json").exists()


def test_summary_schema_requires_every_key():
    summary = _train_summary()
    del summary["steps"]
    with pytest.raises(ValidationError, match="missing 'steps'"):
        TRAIN_SUMMARY.validate(summary)


def test_qaoa_schema_admits_per_depth_statistics():
    base = {"depth": 2, "budget": 20, "optimizer": "nelder-mead", "samples": 100, "run": {}}
    QAOA_SUMMARY.validate(dict(base, optimized_p1={"count": 1}, transfer_p2={"count": 1}))
    with pytest.raises(ValidationError):
        QAOA_SUMMARY.validate(dict(base, optimized_p1=1.0))
    with pytest.raises(ValidationError):
        QAOA_SUMMARY.validate(dict(base, sampled_p1={"count": 1}))
