# trainer/dqn.py

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from agents.q_agent import QValueAgent, Transition, program_builder, q_table, rollout
from circuits.ansatz import AnsatzKind, CircuitLayout, init_params, layout_for
from trainer.config import TrainerConfig
from trainer.gradients import GradientMethod, q_gradients, q_sa
from trainer.optim import AdamOptimizer
from trainer.replay import ReplayMemory
from trainer.reports import Checkpoint, running_mean, summarize
from utils.errors import TrainingDivergedError, ValidationError
from utils.instances import TspInstance

log = logging.getLogger(__name__)


def _common_size(instances: Sequence[TspInstance]) -> int:
    if not instances:
        raise ValidationError("no instances given")
    sizes = {inst.n for inst in instances}
    if len(sizes) != 1:
        raise ValidationError(f"all instances must have the same number of cities, got {sorted(sizes)}")
    return sizes.pop()


def td_targets(layout: CircuitLayout, batch: Sequence[Transition], target_params: np.ndarray,
               gamma: float, threads: int = 1) -> np.ndarray:
    """r + gamma * max_a' Qhat(s', a') with last' = a; just r for terminal transitions."""
    y = np.array([t.reward for t in batch], dtype=float)
    live = [k for k, t in enumerate(batch) if not t.done]
    if live and gamma != 0.0:
        qs = q_table(layout, [batch[k].next_state for k in live], [batch[k].action for k in live],
                     target_params, threads=threads)
        for k, q in zip(live, qs):
            y[k] += gamma * float(np.max(q.values[q.mask]))
    return y


def td_target(t: Transition, target_params: np.ndarray, kind: AnsatzKind | str, depth: int, gamma: float) -> float:
    layout = layout_for(AnsatzKind.parse(kind), t.state.graph.n, depth)
    return float(td_targets(layout, [t], target_params, gamma)[0])


def _batch_arrays(layout: CircuitLayout, batch: Sequence[Transition]):
    coefs = np.stack([layout.coefficients(t.state) for t in batch])
    lasts = np.array([t.last for t in batch], dtype=np.int64)
    actions = np.array([t.action for t in batch], dtype=np.int64)
    weights = np.array([t.state.graph.weights[t.last, t.action] for t in batch])
    return coefs, lasts, actions, weights


def loss(layout: CircuitLayout, batch: Sequence[Transition], params: np.ndarray, target_params: np.ndarray,
         gamma: float, threads: int = 1) -> float:
    """Mean squared TD error."""
    coefs, lasts, actions, weights = _batch_arrays(layout, batch)
    q = q_sa(layout, coefs, params, lasts, actions, weights, threads)
    y = td_targets(layout, batch, target_params, gamma, threads)
    return float(np.mean((q - y) ** 2))


def loss_and_gradient(layout: CircuitLayout, batch: Sequence[Transition], params: np.ndarray,
                      target_params: np.ndarray, gamma: float,
                      method: GradientMethod | str = GradientMethod.PARAMETER_SHIFT,
                      threads: int = 1) -> tuple[float, np.ndarray]:
    coefs, lasts, actions, weights = _batch_arrays(layout, batch)
    q = q_sa(layout, coefs, params, lasts, actions, weights, threads)
    y = td_targets(layout, batch, target_params, gamma, threads)
    dq = q_gradients(layout, coefs, params, lasts, actions, weights, method, threads)
    residual = q - y
    return float(np.mean(residual ** 2)), np.mean(2.0 * residual[:, None] * dq, axis=0)


@dataclass
class TrainResult:
    kind: AnsatzKind
    depth: int
    n_qubits: int
    params: np.ndarray
    history: list[dict[str, Any]]
    solved: bool
    episodes: int
    steps: int
    epsilon: float
    optimizer_state: dict[str, Any] = field(default_factory=dict)
    rng_state: Optional[dict[str, Any]] = None

    @property
    def n_trainable(self) -> int:
        return int(self.params.size)

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(self.kind, self.n_qubits, self.depth, self.params.copy(), self.episodes,
                          self.epsilon, self.optimizer_state, self.rng_state)

    def ratios(self) -> list[float]:
        return [row["ratio"] for row in self.history]


class DqnTrainer:
    def __init__(self, config: TrainerConfig, kind: AnsatzKind | str, depth: int,
                 resume: Optional[Checkpoint] = None):
        self.config = config
        self.kind = AnsatzKind.parse(kind)
        self.depth = int(depth)
        self.method = GradientMethod.parse(config.gradient_method)
        self.resume = resume
        self.steps = 0
        self.updates = 0

    def _check_finite(self, episode: int, value: float, grad: np.ndarray) -> None:
        if not math.isfinite(value) or not np.all(np.isfinite(grad)):
            bad = np.flatnonzero(~np.isfinite(grad)).tolist()
            raise TrainingDivergedError(
                f"non-finite loss/gradient at episode {episode}, step {self.steps}: loss={value}, "
                f"bad gradient entries={bad}"
            )

    def train(self, instances: Sequence[TspInstance]) -> TrainResult:
        cfg = self.config
        n = _common_size(instances)
        layout = layout_for(self.kind, n, self.depth)
        builder = program_builder(self.kind, self.depth)
        rng = np.random.default_rng(cfg.seed)

        params = init_params(self.kind, n, self.depth, rng, cfg.init_range)
        epsilon, start = cfg.epsilon_start, 0
        if self.resume is not None:
            if (self.resume.kind, self.resume.n_qubits, self.resume.depth) != (self.kind, n, self.depth):
                raise ValidationError("checkpoint does not match ansatz, size and depth of this run")
            params = self.resume.params.copy()
            epsilon, start = self.resume.epsilon, self.resume.episode
            if self.resume.rng_state:
                rng.bit_generator.state = self.resume.rng_state
        target = params.copy()
        opt = AdamOptimizer(params, cfg.learning_rate_for(self.kind))
        if self.resume is not None and self.resume.optimizer:
            opt.load_state(**self.resume.optimizer)
            self.updates = int(self.resume.optimizer.get("step", 0))
        memory = ReplayMemory(cfg.memory_capacity, rng)
        ready = max(cfg.warmup, cfg.batch_size)
        can_solve = all(inst.tour is not None for inst in instances)

        log.info("Training %s p=%d on %d instances of %d cities: %d parameters, lr=%g",
                 self.kind.value, self.depth, len(instances), n, params.size, opt.lr)

        history: list[dict[str, Any]] = []
        solved = False
        episode = start
        for episode in range(start, cfg.episodes_max):
            inst = instances[episode % len(instances)]
            losses: list[float] = []

            def on_step(t: Transition) -> None:
                memory.push(t)
                self.steps += 1
                if len(memory) >= ready:
                    batch = memory.sample(cfg.batch_size)
                    value, grad = loss_and_gradient(layout, batch, params, target, cfg.gamma, self.method, cfg.threads)
                    self._check_finite(episode, value, grad)
                    params[:] = opt.step(grad)
                    losses.append(value)
                    self.updates += 1
                    if self.updates % cfg.target_update_interval == 0:
                        target[:] = params

            result = rollout(builder, params, inst.graph, epsilon, rng, inst.tour, inst.index, on_step)
            ratio = result.ratio if result.ratio is not None else math.nan
            history.append({
                "episode": episode,
                "ratio": ratio,
                "loss": float(np.mean(losses)) if losses else math.nan,
                "epsilon": epsilon,
            })
            epsilon = max(cfg.epsilon_end, epsilon * cfg.epsilon_decay)

            recent = [row["ratio"] for row in history[-cfg.solve_window:]]
            if (episode + 1) % cfg.log_every == 0:
                log.info("episode %d: mean ratio (last %d) %.4f, loss %.3g, epsilon %.3f",
                         episode + 1, cfg.running_window, np.nanmean(recent[-cfg.running_window:]),
                         history[-1]["loss"], history[-1]["epsilon"])
            if can_solve and len(recent) >= cfg.solve_window and float(np.mean(recent)) < cfg.solve_threshold:
                solved = True
                log.info("Solved after %d episodes: mean ratio of last %d is %.4f",
                         episode + 1, cfg.solve_window, float(np.mean(recent)))
                break

        return TrainResult(
            kind=self.kind,
            depth=self.depth,
            n_qubits=n,
            params=params.copy(),
            history=history,
            solved=solved,
            episodes=episode + 1 if history else start,
            steps=self.steps,
            epsilon=epsilon,
            optimizer_state=opt.state(),
            rng_state=rng.bit_generator.state,
        )


def train(config: TrainerConfig, instances: Sequence[TspInstance], kind: AnsatzKind | str, depth: int,
          resume: Optional[Checkpoint] = None) -> TrainResult:
    return DqnTrainer(config, kind, depth, resume).train(instances)


@dataclass
class EvaluationResult:
    ratios: list[float]
    tours: list[tuple[int, ...]]
    summary: dict[str, float]

    def rows(self, instances: Sequence[TspInstance]) -> list[dict[str, Any]]:
        return [
            {"instance": inst.index, "ratio": r, "tour": " ".join(map(str, t))}
            for inst, r, t in zip(instances, self.ratios, self.tours)
        ]


def evaluate(params: np.ndarray, kind: AnsatzKind | str, depth: int,
             instances: Sequence[TspInstance]) -> EvaluationResult:
    """Greedy rollouts with the given (final) parameters."""
    agent = QValueAgent(kind, depth, params)
    ratios, tours = [], []
    for inst in instances:
        if inst.tour is None:
            raise ValidationError(f"validation instance {inst.index} has no optimal tour")
        res = agent.run(inst.graph, inst.tour)
        ratios.append(float(res.ratio))
        tours.append(res.tour.order)
    return EvaluationResult(ratios, tours, summarize(ratios))


def training_summary(result: TrainResult, config: TrainerConfig) -> dict[str, Any]:
    ratios = result.ratios()
    window = ratios[-config.solve_window:]
    running = running_mean(ratios, config.running_window) if ratios else []
    return {
        "ansatz": result.kind.value,
        "depth": result.depth,
        "n_qubits": result.n_qubits,
        "n_trainable": result.n_trainable,
        "episodes": result.episodes,
        "steps": result.steps,
        "optimizer_steps": int(result.optimizer_state.get("step", 0)),
        "solved": result.solved,
        "train_final_window": summarize(window),
        "train_running_mean_10": running[-1] if running else None,
    }
