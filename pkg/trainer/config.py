# trainer/config.py

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional

from dotenv import dotenv_values

from circuits.ansatz import AnsatzKind
from trainer.gradients import GradientMethod
from utils.errors import ConfigError

EQC_LEARNING_RATE = 1e-2
DEFAULT_LEARNING_RATE = 1e-3


@dataclass(frozen=True)
class TrainerConfig:
    episodes_max: int = 5000
    solve_window: int = 100
    solve_threshold: float = 1.05
    batch_size: int = 32
    memory_capacity: int = 10_000
    target_update_interval: int = 30
    gamma: float = 0.9
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay: float = 0.99
    warmup: int = 1000
    learning_rate: Optional[float] = None  # None: 1e-2 for EQC, 1e-3 otherwise
    init_range: float = 0.1
    gradient_method: str = GradientMethod.PARAMETER_SHIFT.value
    seed: int = 0
    threads: int = 1
    log_every: int = 100
    running_window: int = 10

    def __post_init__(self) -> None:
        problems = []
        if self.episodes_max < 1:
            problems.append("episodes_max must be >= 1")
        if self.solve_window < 1:
            problems.append("solve_window must be >= 1")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if self.memory_capacity < self.batch_size:
            problems.append("memory_capacity must be >= batch_size")
        if self.target_update_interval < 1:
            problems.append("target_update_interval must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            problems.append("gamma must lie in [0, 1]")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            problems.append("need 0 <= epsilon_end <= epsilon_start <= 1")
        if not 0.0 < self.epsilon_decay <= 1.0:
            problems.append("epsilon_decay must lie in (0, 1]")
        if self.warmup < 0:
            problems.append("warmup must be >= 0")
        if self.learning_rate is not None and self.learning_rate <= 0.0:
            problems.append("learning_rate must be positive")
        if self.threads < 1:
            problems.append("threads must be >= 1")
        if self.log_every < 1 or self.running_window < 1:
            problems.append("log_every and running_window must be >= 1")
        try:
            GradientMethod.parse(self.gradient_method)
        except ValueError as exc:
            problems.append(str(exc))
        if problems:
            raise ConfigError("invalid trainer config: " + "; ".join(problems))

    def learning_rate_for(self, kind: AnsatzKind | str) -> float:
        if self.learning_rate is not None:
            return self.learning_rate
        return EQC_LEARNING_RATE if AnsatzKind.parse(kind) is AnsatzKind.EQC else DEFAULT_LEARNING_RATE

    def with_overrides(self, overrides: Mapping[str, Any]) -> "TrainerConfig":
        """Apply raw string or typed values; ``None`` values are ignored."""
        known = {f.name: f for f in fields(self)}
        changes = {}
        for key, raw in overrides.items():
            name = key.strip().lower()
            if name not in known:
                raise ConfigError(f"unknown config key {key!r}")
            if raw is None:
                continue
            changes[name] = _coerce(name, getattr(TrainerConfig, name), raw)
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def _coerce(name: str, default: Any, raw: Any) -> Any:
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if name == "learning_rate":
            return None if text.lower() in {"", "none", "auto"} else float(text)
        if isinstance(default, bool):
            return text.lower() in {"1", "true", "yes", "on"}
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return text


def load_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> TrainerConfig:
    """Defaults, then the KEY=value file, then explicit overrides (CLI flags)."""
    cfg = TrainerConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        cfg = cfg.with_overrides(dotenv_values(path))
    if overrides:
        cfg = cfg.with_overrides(overrides)
    return cfg
