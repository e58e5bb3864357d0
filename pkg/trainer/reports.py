# trainer/reports.py

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from agents.base_agent import jsonable
from circuits.ansatz import AnsatzKind, n_trainable
from utils.errors import ValidationError

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "eqc-tsp-checkpoint"
CHECKPOINT_VERSION = 1
EPISODE_COLUMNS = ["episode", "ratio", "loss", "epsilon"]


# ╭──────────────────────────────── summary schemas ────────────────────────╮

_OPT_NUM = (int, float, type(None))


@dataclass(frozen=True)
class SummarySchema:
    """Keys and JSON types of a summary file.

    ``pattern`` admits extra keys matching the regex; their values must be objects
    (the per-depth QAOA statistics).
    """

    name: str
    required: Mapping[str, tuple[type, ...]]
    optional: Mapping[str, tuple[type, ...]] = field(default_factory=dict)
    pattern: Optional[str] = None

    def validate(self, payload: Mapping[str, Any]) -> None:
        problems = []
        for key, types in self.required.items():
            if key not in payload:
                problems.append(f"missing {key!r}")
        for key, value in payload.items():
            types = self.required.get(key) or self.optional.get(key)
            if types is None:
                if self.pattern and re.fullmatch(self.pattern, key):
                    types = (dict,)
                else:
                    problems.append(f"unexpected key {key!r}")
                    continue
            if not isinstance(value, types):
                problems.append(f"{key!r} is {type(value).__name__}")
        if problems:
            raise ValidationError(f"{self.name} summary does not match its schema: " + "; ".join(problems))


TRAIN_SUMMARY = SummarySchema(
    "train",
    required={
        "ansatz": (str,),
        "depth": (int,),
        "n_qubits": (int,),
        "n_trainable": (int,),
        "episodes": (int,),
        "steps": (int,),
        "optimizer_steps": (int,),
        "solved": (bool,),
        "train_final_window": (dict,),
        "train_running_mean_10": _OPT_NUM,
        "run": (dict,),
        "config": (dict,),
        "artifacts": (list,),
    },
    optional={"validation": (dict,), "nearest_neighbor_validation": (dict,)},
)

BASELINE_SUMMARY = SummarySchema(
    "baseline",
    required={
        "nearest_neighbor": (dict,),
        "random": (dict,),
        "random_samples": (int,),
        "random_start": (bool,),
        "run": (dict,),
    },
)

QAOA_SUMMARY = SummarySchema(
    "qaoa",
    required={
        "depth": (int,),
        "budget": (int,),
        "optimizer": (str,),
        "samples": (int,),
        "run": (dict,),
    },
    optional={"saved_params": (str,)},
    pattern=r"(optimized|transfer)_p\d+",
)


def summarize(values: Iterable[float]) -> dict[str, float]:
    """Mean, SEM, median, quartiles and range of a sample (NaNs dropped)."""
    arr = np.asarray([v for v in values if v is not None and not math.isnan(v)], dtype=float)
    if arr.size == 0:
        return {"count": 0}
    q1, median, q3 = np.percentile(arr, [25, 50, 75])
    return {
        "count": int(arr.size),
        "mean": float(arr.mean()),
        "sem": float(stats.sem(arr)) if arr.size > 1 else 0.0,
        "median": float(median),
        "q1": float(q1),
        "q3": float(q3),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def running_mean(values: Sequence[float], window: int) -> list[float]:
    return pd.Series(values, dtype=float).rolling(window, min_periods=1).mean().tolist()


def write_episode_csv(path: str | Path, rows: Sequence[dict[str, Any]]) -> Path:
    path = Path(path)
    pd.DataFrame(list(rows), columns=EPISODE_COLUMNS).to_csv(path, index=False, float_format="%.10g")
    return path


def write_table(path: str | Path, rows: Sequence[dict[str, Any]], columns: Sequence[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows), columns=columns).to_csv(path, index=False, float_format="%.10g")
    return path


def write_json(path: str | Path, payload: dict[str, Any], schema: Optional[SummarySchema] = None) -> Path:
    data = jsonable(payload)
    if schema is not None:
        schema.validate(data)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return path


# ╭──────────────────────────────── checkpoint ─────────────────────────────╮

@dataclass
class Checkpoint:
    kind: AnsatzKind
    n_qubits: int
    depth: int
    params: np.ndarray
    episode: int = 0
    epsilon: float = 1.0
    optimizer: dict[str, Any] = field(default_factory=dict)
    # numpy Generator.bit_generator.state at the end of the run
    rng_state: Optional[dict[str, Any]] = None


def _hex(values: Iterable[float]) -> list[str]:
    return [float(v).hex() for v in values]


def _unhex(values: Iterable[str]) -> np.ndarray:
    return np.array([float.fromhex(v) for v in values], dtype=float)


def save_checkpoint(path: str | Path, ckpt: Checkpoint) -> Path:
    opt = ckpt.optimizer or {}
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "ansatz": ckpt.kind.value,
        "n_qubits": ckpt.n_qubits,
        "depth": ckpt.depth,
        "n_trainable": int(ckpt.params.size),
        "episode": ckpt.episode,
        "epsilon": ckpt.epsilon,
        "epsilon_hex": float(ckpt.epsilon).hex(),
        "params": [float(v) for v in ckpt.params],
        "params_hex": _hex(ckpt.params),
        "optimizer": {
            "step": int(opt.get("step", 0)),
            "exp_avg_hex": _hex(opt.get("exp_avg", [])),
            "exp_avg_sq_hex": _hex(opt.get("exp_avg_sq", [])),
        },
        "rng_state": ckpt.rng_state,
    }
    return write_json(path, payload)


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not a JSON checkpoint ({exc})") from exc
    if data.get("format") != CHECKPOINT_FORMAT or data.get("version") != CHECKPOINT_VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint format {data.get('format')!r} v{data.get('version')}")

    kind = AnsatzKind.parse(data["ansatz"])
    n, p = int(data["n_qubits"]), int(data["depth"])
    params = _unhex(data["params_hex"]) if "params_hex" in data else np.asarray(data["params"], dtype=float)
    if params.size != n_trainable(kind, n, p):
        raise ValidationError(f"{path}: {params.size} parameters do not fit {kind.value} n={n} p={p}")
    opt = data.get("optimizer", {})
    epsilon = float.fromhex(data["epsilon_hex"]) if "epsilon_hex" in data else float(data.get("epsilon", 1.0))
    return Checkpoint(
        kind=kind,
        n_qubits=n,
        depth=p,
        params=params,
        episode=int(data.get("episode", 0)),
        epsilon=epsilon,
        optimizer={
            "step": int(opt.get("step", 0)),
            "exp_avg": _unhex(opt.get("exp_avg_hex", [])),
            "exp_avg_sq": _unhex(opt.get("exp_avg_sq_hex", [])),
        },
        rng_state=data.get("rng_state"),
    )


# ╭──────────────────────────────── comparison ─────────────────────────────╮

def read_ratio_column(path: str | Path, column: str = "ratio") -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"ratio file not found: {path}")
    df = pd.read_csv(path)
    if column not in df.columns:
        raise ValidationError(f"{path}: no {column!r} column (have {list(df.columns)})")
    return df[column].dropna().to_numpy(dtype=float)


def compare_ratios(a: np.ndarray, b: np.ndarray) -> dict[str, Any]:
    """Welch two-sample t-test on two ratio samples."""
    if a.size < 2 or b.size < 2:
        raise ValidationError("each sample needs at least two ratios")
    res = stats.ttest_ind(a, b, equal_var=False)
    return {
        "a": summarize(a),
        "b": summarize(b),
        "t_statistic": float(res.statistic),
        "p_value": float(res.pvalue),
    }
