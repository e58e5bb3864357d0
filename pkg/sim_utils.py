"""
Centralised helpers for dense statevector simulation.

Qubit ``i`` is bit ``i`` of the basis-state index (little-endian), so the
basis state |x> has index x = sum_i b_i * 2**i. Every kernel works in place on
amplitude arrays with a leading batch axis, shape ``(B, 2**n)``, so one pass
can run many parameter settings of the same gate skeleton.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from utils.errors import CapacityError, QubitIndexError, ValidationError
from utils.permutations import as_permutation, inverse

log = logging.getLogger(__name__)

MAX_QUBITS = 24
NORM_TOL = 1e-10
# amplitudes per simulation chunk (64 MB of complex128)
CHUNK_AMPLITUDES = 1 << 22

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class GateKind(str, Enum):
    H = "H"
    RX = "RX"
    RY = "RY"
    RZZ = "RZZ"
    CZ = "CZ"

    @property
    def arity(self) -> int:
        return 2 if self in (GateKind.RZZ, GateKind.CZ) else 1

    @property
    def parametric(self) -> bool:
        return self in (GateKind.RX, GateKind.RY, GateKind.RZZ)


@dataclass(frozen=True)
class Gate:
    """One gate with a concrete angle. RX(t) = exp(-i t/2 X), RZZ(t) = exp(-i t/2 Z(x)Z)."""

    kind: GateKind
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if len(self.targets) != self.kind.arity:
            raise ValidationError(f"{self.kind.value} takes {self.kind.arity} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValidationError(f"{self.kind.value} targets must be distinct, got {self.targets}")
        if self.kind.parametric and self.angle is None:
            raise ValidationError(f"{self.kind.value} needs an angle")


def check_capacity(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise CapacityError(f"{n_qubits} qubits outside the supported range 1..{MAX_QUBITS}")


def _check_targets(n_qubits: int, targets: Sequence[int]) -> None:
    for q in targets:
        if not 0 <= q < n_qubits:
            raise QubitIndexError(f"qubit {q} out of range for a {n_qubits}-qubit state")


# ╭──────────────────────────── batched kernels ────────────────────────────╮

def _split1(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    return amps.reshape(amps.shape[0], 1 << (n - 1 - q), 2, 1 << q)


def _split2(amps: np.ndarray, n: int, i: int, j: int) -> np.ndarray:
    lo, hi = (i, j) if i < j else (j, i)
    return amps.reshape(amps.shape[0], 1 << (n - 1 - hi), 2, 1 << (hi - lo - 1), 2, 1 << lo)


def apply_h(amps: np.ndarray, n: int, q: int) -> None:
    v = _split1(amps, n, q)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :].copy()
    v[:, :, 0, :] = (a0 + a1) * _INV_SQRT2
    v[:, :, 1, :] = (a0 - a1) * _INV_SQRT2


def apply_rx(amps: np.ndarray, n: int, q: int, theta: np.ndarray) -> None:
    half = 0.5 * np.asarray(theta, dtype=float).reshape(-1, 1, 1)
    c, s = np.cos(half), np.sin(half)
    v = _split1(amps, n, q)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :].copy()
    v[:, :, 0, :] = c * a0 - 1j * s * a1
    v[:, :, 1, :] = c * a1 - 1j * s * a0


def apply_ry(amps: np.ndarray, n: int, q: int, theta: np.ndarray) -> None:
    half = 0.5 * np.asarray(theta, dtype=float).reshape(-1, 1, 1)
    c, s = np.cos(half), np.sin(half)
    v = _split1(amps, n, q)
    a0 = v[:, :, 0, :].copy()
    a1 = v[:, :, 1, :].copy()
    v[:, :, 0, :] = c * a0 - s * a1
    v[:, :, 1, :] = s * a0 + c * a1


def apply_rzz(amps: np.ndarray, n: int, i: int, j: int, theta: np.ndarray) -> None:
    # diagonal: e^{-i t/2} where bits i, j agree, e^{+i t/2} where they differ
    phase = np.exp(-0.5j * np.asarray(theta, dtype=float)).reshape(-1, 1, 1, 1)
    v = _split2(amps, n, i, j)
    v[:, :, 0, :, 0, :] *= phase
    v[:, :, 1, :, 1, :] *= phase
    v[:, :, 0, :, 1, :] *= phase.conj()
    v[:, :, 1, :, 0, :] *= phase.conj()


def apply_cz(amps: np.ndarray, n: int, i: int, j: int) -> None:
    v = _split2(amps, n, i, j)
    v[:, :, 1, :, 1, :] *= -1.0


def apply_cost_phase(amps: np.ndarray, gamma: np.ndarray, cost: np.ndarray) -> None:
    """Multiply by exp(-i gamma C(x)) for a diagonal cost C, one gamma per batch row."""
    amps *= np.exp(-1j * np.outer(np.asarray(gamma, dtype=float), cost))


def zz_from_probs(probs: np.ndarray, n: int, i: int, j: int) -> np.ndarray:
    """<Z_i Z_j> per batch row from basis-state probabilities of shape (B, 2**n)."""
    if i == j:
        raise ValidationError("<Z_i Z_j> needs two distinct qubits")
    _check_targets(n, (i, j))
    v = _split2(probs, n, i, j)
    same = v[:, :, 0, :, 0, :].sum(axis=(1, 2, 3)) + v[:, :, 1, :, 1, :].sum(axis=(1, 2, 3))
    diff = v[:, :, 0, :, 1, :].sum(axis=(1, 2, 3)) + v[:, :, 1, :, 0, :].sum(axis=(1, 2, 3))
    return same - diff


def _apply_column(amps: np.ndarray, n: int, kind: GateKind, targets: tuple[int, ...], theta: np.ndarray) -> None:
    if kind is GateKind.H:
        apply_h(amps, n, targets[0])
    elif kind is GateKind.RX:
        apply_rx(amps, n, targets[0], theta)
    elif kind is GateKind.RY:
        apply_ry(amps, n, targets[0], theta)
    elif kind is GateKind.RZZ:
        apply_rzz(amps, n, targets[0], targets[1], theta)
    elif kind is GateKind.CZ:
        apply_cz(amps, n, targets[0], targets[1])
    else:  # pragma: no cover
        raise ValidationError(f"unsupported gate {kind}")


def _run_chunk(n: int, kinds: Sequence[GateKind], targets: Sequence[tuple[int, ...]],
               angles: np.ndarray, initial: np.ndarray) -> np.ndarray:
    amps = np.empty((angles.shape[0], 1 << n), dtype=np.complex128)
    amps[:] = initial
    for g, (kind, tgt) in enumerate(zip(kinds, targets)):
        _apply_column(amps, n, kind, tgt, angles[:, g])
    return amps


def simulate(
    n_qubits: int,
    kinds: Sequence[GateKind],
    targets: Sequence[tuple[int, ...]],
    angles: np.ndarray,
    initial: np.ndarray | None = None,
    threads: int = 1,
) -> np.ndarray:
    """Run one gate skeleton for every row of ``angles`` (shape (B, G)).

    Returns amplitudes of shape (B, 2**n). Rows start from ``initial``
    (default |0...0>). Rows are processed in chunks; with ``threads > 1`` the
    chunks run on a thread pool.
    """
    check_capacity(n_qubits)
    for tgt in targets:
        _check_targets(n_qubits, tgt)
    angles = np.atleast_2d(np.asarray(angles, dtype=float))
    if angles.shape[1] != len(kinds):
        raise ValidationError(f"angle matrix has {angles.shape[1]} columns for {len(kinds)} gates")
    if initial is None:
        initial = np.zeros(1 << n_qubits, dtype=np.complex128)
        initial[0] = 1.0

    rows = angles.shape[0]
    per_chunk = max(1, CHUNK_AMPLITUDES >> n_qubits)
    if threads > 1:
        per_chunk = max(1, min(per_chunk, math.ceil(rows / threads)))
    bounds = [(lo, min(rows, lo + per_chunk)) for lo in range(0, rows, per_chunk)]
    if len(bounds) == 1:
        return _run_chunk(n_qubits, kinds, targets, angles, initial)

    out = np.empty((rows, 1 << n_qubits), dtype=np.complex128)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            futures = {lo: ex.submit(_run_chunk, n_qubits, kinds, targets, angles[lo:hi], initial)
                       for lo, hi in bounds}
            for lo, hi in bounds:
                out[lo:hi] = futures[lo].result()
    else:
        for lo, hi in bounds:
            out[lo:hi] = _run_chunk(n_qubits, kinds, targets, angles[lo:hi], initial)
    return out


# ╭──────────────────────────── single-state API ───────────────────────────╮

@dataclass
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        check_capacity(self.n_qubits)
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValidationError(
                f"{self.n_qubits} qubits need {1 << self.n_qubits} amplitudes, got {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        check_capacity(n_qubits)
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def basis(cls, n_qubits: int, index: int) -> "Statevector":
        check_capacity(n_qubits)
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(n_qubits, amps)

    def norm(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm() - 1.0) < tol

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amplitudes.copy())


def prepare_uniform(n: int) -> Statevector:
    check_capacity(n)
    return Statevector(n, np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128))


def apply_gate(state: Statevector, g: Gate) -> Statevector:
    _check_targets(state.n_qubits, g.targets)
    amps = state.amplitudes.copy().reshape(1, -1)
    theta = np.array([g.angle if g.angle is not None else 0.0])
    _apply_column(amps, state.n_qubits, g.kind, g.targets, theta)
    return Statevector(state.n_qubits, amps.reshape(-1))


def run_gates(state: Statevector, gates: Sequence[Gate]) -> Statevector:
    for g in gates:
        state = apply_gate(state, g)
    return state


def expectation_zz(state: Statevector, i: int, j: int) -> float:
    probs = state.probabilities().reshape(1, -1)
    return float(zz_from_probs(probs, state.n_qubits, i, j)[0])


def apply_permutation(state: Statevector, sigma: Sequence[int]) -> Statevector:
    """Relabel qubits: bit ``i`` of every basis index moves to bit ``sigma[i]``."""
    n = state.n_qubits
    perm = as_permutation(sigma, n)
    inv = inverse(perm)
    # tensor axis a holds qubit n-1-a
    axes = [n - 1 - int(inv[n - 1 - k]) for k in range(n)]
    tensor = state.amplitudes.reshape((2,) * n)
    return Statevector(n, np.transpose(tensor, axes).reshape(-1))
