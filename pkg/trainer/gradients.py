# trainer/gradients.py
"""
Gradients of edge-weighted Q(s, a) = eps[last, a] <Z_last Z_a> with respect to circuit parameters.

Every trainable gate angle is c_k * theta with a Pauli-word generator, so the
per-gate shift rule is exact:

    dQ/dtheta = sum_k c_k / 2 * (Q(angle_k + pi/2) - Q(angle_k - pi/2))

All shifted circuits of a batch are simulated together.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Sequence

import numpy as np

from agents.q_agent import zz_pairs
from circuits.ansatz import CircuitLayout
from sim_utils import simulate
from utils.errors import ValidationError

SHIFT = math.pi / 2
FD_STEP = 1e-5
RELATIVE_FLOOR = 1e-3


class GradientMethod(str, Enum):
    PARAMETER_SHIFT = "parameter-shift"
    CENTRAL_DIFFERENCE = "central-difference"

    @classmethod
    def parse(cls, value: "str | GradientMethod") -> "GradientMethod":
        try:
            return cls(value)
        except ValueError:
            raise ValidationError(f"unknown gradient method {value!r}; choose from {[m.value for m in cls]}") from None


def _q_from_angles(layout: CircuitLayout, angles: np.ndarray, lasts: np.ndarray, actions: np.ndarray,
                   weights: np.ndarray, threads: int) -> np.ndarray:
    amps = simulate(layout.n_qubits, layout.kinds, layout.targets, angles, threads=threads)
    return weights * zz_pairs(np.abs(amps) ** 2, layout.n_qubits, lasts, actions)


def q_sa(layout: CircuitLayout, coefs: np.ndarray, params: np.ndarray, lasts: Sequence[int],
         actions: Sequence[int], weights: np.ndarray, threads: int = 1) -> np.ndarray:
    """Q(s_b, a_b) for every row; ``coefs`` is (B, G), ``weights`` holds eps[last_b, a_b]."""
    angles = layout.angles(coefs, params)
    return _q_from_angles(layout, angles, np.asarray(lasts), np.asarray(actions), np.asarray(weights), threads)


def _parameter_shift(layout, coefs, params, lasts, actions, weights, threads) -> np.ndarray:
    base = layout.angles(coefs, params)
    rows, gates = base.shape
    trainable = layout.param_index >= 0
    # (row, gate) pairs that actually depend on a parameter
    rr, gg = np.nonzero(trainable[None, :] & (coefs != 0.0))
    grad = np.zeros((rows, layout.n_trainable))
    if rr.size == 0:
        return grad
    shifted = np.concatenate([base[rr], base[rr]])
    k = np.arange(rr.size)
    shifted[k, gg] += SHIFT
    shifted[rr.size + k, gg] -= SHIFT
    lasts2, actions2, weights2 = (np.concatenate([a[rr], a[rr]]) for a in (lasts, actions, weights))
    q = _q_from_angles(layout, shifted, lasts2, actions2, weights2, threads)
    contrib = 0.5 * coefs[rr, gg] * (q[:rr.size] - q[rr.size:])
    np.add.at(grad, (rr, layout.param_index[gg]), contrib)
    return grad


def _central_difference(layout, coefs, params, lasts, actions, weights, threads) -> np.ndarray:
    rows, n_par = coefs.shape[0], layout.n_trainable
    p = np.broadcast_to(np.asarray(params, dtype=float), (rows, n_par))
    eye = np.eye(n_par) * FD_STEP
    plus = (p[:, None, :] + eye[None]).reshape(-1, n_par)
    minus = (p[:, None, :] - eye[None]).reshape(-1, n_par)
    c = np.repeat(coefs, n_par, axis=0)
    rep = [np.repeat(a, n_par) for a in (lasts, actions, weights)]
    q = q_sa(layout, np.concatenate([c, c]), np.concatenate([plus, minus]),
             np.concatenate([rep[0], rep[0]]), np.concatenate([rep[1], rep[1]]),
             np.concatenate([rep[2], rep[2]]), threads)
    half = rows * n_par
    return ((q[:half] - q[half:]) / (2.0 * FD_STEP)).reshape(rows, n_par)


def q_gradients(layout: CircuitLayout, coefs: np.ndarray, params: np.ndarray, lasts: Sequence[int],
                actions: Sequence[int], weights: np.ndarray,
                method: GradientMethod | str = GradientMethod.PARAMETER_SHIFT, threads: int = 1) -> np.ndarray:
    """dQ(s_b, a_b)/dtheta per row, shape (B, n_trainable)."""
    coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
    lasts = np.asarray(lasts, dtype=np.int64)
    actions = np.asarray(actions, dtype=np.int64)
    weights = np.asarray(weights, dtype=float)
    if GradientMethod.parse(method) is GradientMethod.PARAMETER_SHIFT:
        return _parameter_shift(layout, coefs, params, lasts, actions, weights, threads)
    return _central_difference(layout, coefs, params, lasts, actions, weights, threads)


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = RELATIVE_FLOOR) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor), initial=0.0))
