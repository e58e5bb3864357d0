# circuits/ansatz.py
"""
Circuit families for node selection on an annotated graph.

A ``CircuitLayout`` is the graph-independent skeleton of one family at a
given (n, p): gate kinds, targets, which trainable parameter drives each
gate and where the gate's coefficient comes from. An ``AnsatzProgram`` pairs
a layout with the coefficients of one annotated graph. Every gate angle is

    coefficient * params[param_index]   if the gate is trainable
    coefficient * 1                     if it is a fixed encoding gate

with coefficients 2*eps_ij for RZZ, alpha_i for RX, 1 for RY and 0 for H/CZ.
Graphs of equal size share one layout, so their circuits can be simulated in
a single batch.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from sim_utils import Gate, GateKind, Statevector, check_capacity, simulate
from utils.errors import ValidationError
from utils.tsp_graph import AnnotatedGraph

log = logging.getLogger(__name__)

INIT_RANGE = 0.1
# fixed encoding angles are coefficient * ENCODING_SCALE
ENCODING_SCALE = 1.0

_NONE, _EDGE, _NODE, _UNIT = 0, 1, 2, 3


class AnsatzKind(str, Enum):
    EQC = "eqc"
    NEQC = "neqc"
    HWETE = "hwete"
    HWE = "hwe"

    @classmethod
    def parse(cls, value: "str | AnsatzKind") -> "AnsatzKind":
        try:
            return cls(str(value.value if isinstance(value, cls) else value).lower())
        except ValueError:
            raise ValidationError(f"unknown ansatz {value!r}; choose from {[k.value for k in cls]}") from None


def n_trainable(kind: AnsatzKind, n: int, p: int) -> int:
    kind = AnsatzKind.parse(kind)
    edges = n * (n - 1) // 2
    return {
        AnsatzKind.EQC: 2 * p,
        AnsatzKind.NEQC: p * (edges + n),
        AnsatzKind.HWETE: p * (edges + 2 * n),
        AnsatzKind.HWE: p * n,
    }[kind]


@dataclass(frozen=True, eq=False)
class CircuitLayout:
    kind: AnsatzKind
    n_qubits: int
    depth: int
    kinds: tuple[GateKind, ...]
    targets: tuple[tuple[int, ...], ...]
    param_index: np.ndarray  # -1 for fixed gates
    source: np.ndarray
    n_trainable: int

    @property
    def n_gates(self) -> int:
        return len(self.kinds)

    def coefficients(self, g: AnnotatedGraph) -> np.ndarray:
        if g.graph.n != self.n_qubits:
            raise ValidationError(f"graph has {g.graph.n} nodes, circuit has {self.n_qubits} qubits")
        coef = np.zeros(self.n_gates)
        edge = self.source == _EDGE
        node = self.source == _NODE
        pairs = np.array([self.targets[k] for k in np.flatnonzero(edge)], dtype=np.int64).reshape(-1, 2)
        coef[edge] = 2.0 * g.graph.weights[pairs[:, 0], pairs[:, 1]]
        coef[node] = g.alpha[[self.targets[k][0] for k in np.flatnonzero(node)]]
        coef[self.source == _UNIT] = 1.0
        return coef

    def angles(self, coefs: np.ndarray, params: np.ndarray) -> np.ndarray:
        """Gate angles for every row; ``coefs`` is (G,) or (B, G), ``params`` is (P,) or (B, P)."""
        params = np.asarray(params, dtype=float)
        if params.shape[-1] != self.n_trainable:
            raise ValidationError(
                f"{self.kind.value} circuit expects {self.n_trainable} parameters, got {params.shape[-1]}"
            )
        trainable = self.param_index >= 0
        picked = np.where(trainable, params[..., np.maximum(self.param_index, 0)], ENCODING_SCALE)
        return np.atleast_2d(coefs * picked)

    def run(self, coefs: np.ndarray, params: np.ndarray, threads: int = 1) -> np.ndarray:
        """Batched amplitudes (B, 2**n) for matching rows of coefficients and parameters."""
        return simulate(self.n_qubits, self.kinds, self.targets, self.angles(coefs, params), threads=threads)


class _Builder:
    def __init__(self) -> None:
        self.kinds: list[GateKind] = []
        self.targets: list[tuple[int, ...]] = []
        self.index: list[int] = []
        self.source: list[int] = []

    def add(self, kind: GateKind, targets: tuple[int, ...], index: int = -1, source: int = _NONE) -> None:
        self.kinds.append(kind)
        self.targets.append(targets)
        self.index.append(index)
        self.source.append(source)


@lru_cache(maxsize=64)
def layout_for(kind: AnsatzKind, n: int, p: int) -> CircuitLayout:
    kind = AnsatzKind.parse(kind)
    check_capacity(n)
    if p < 1:
        raise ValidationError(f"depth must be >= 1, got {p}")
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    b = _Builder()

    if kind in (AnsatzKind.EQC, AnsatzKind.NEQC):
        for q in range(n):
            b.add(GateKind.H, (q,))
        for layer in range(p):
            base = layer * (len(edges) + n)
            for e, (i, j) in enumerate(edges):
                idx = 2 * layer if kind is AnsatzKind.EQC else base + e
                b.add(GateKind.RZZ, (i, j), idx, _EDGE)
            for q in range(n):
                idx = 2 * layer + 1 if kind is AnsatzKind.EQC else base + len(edges) + q
                b.add(GateKind.RX, (q,), idx, _NODE)
    else:
        trained_encoding = kind is AnsatzKind.HWETE
        per_layer = len(edges) + 2 * n if trained_encoding else n
        for layer in range(p):
            base = layer * per_layer
            for q in range(n):
                b.add(GateKind.RX, (q,), base + q if trained_encoding else -1, _NODE)
            for e, (i, j) in enumerate(edges):
                b.add(GateKind.RZZ, (i, j), base + n + e if trained_encoding else -1, _EDGE)
            ry_base = base + n + len(edges) if trained_encoding else base
            for q in range(n):
                b.add(GateKind.RY, (q,), ry_base + q, _UNIT)
            for q in range(n - 1):
                b.add(GateKind.CZ, (q, q + 1))

    layout = CircuitLayout(
        kind=kind,
        n_qubits=n,
        depth=p,
        kinds=tuple(b.kinds),
        targets=tuple(b.targets),
        param_index=np.asarray(b.index, dtype=np.int64),
        source=np.asarray(b.source, dtype=np.int64),
        n_trainable=n_trainable(kind, n, p),
    )
    log.debug("Built %s layout n=%d p=%d: %d gates, %d parameters", kind.value, n, p, layout.n_gates, layout.n_trainable)
    return layout


@dataclass(frozen=True, eq=False)
class AnsatzProgram:
    layout: CircuitLayout
    graph: AnnotatedGraph
    coefs: np.ndarray

    @property
    def kind(self) -> AnsatzKind:
        return self.layout.kind

    @property
    def n_qubits(self) -> int:
        return self.layout.n_qubits

    @property
    def depth(self) -> int:
        return self.layout.depth

    @property
    def n_trainable(self) -> int:
        return self.layout.n_trainable

    @property
    def binding(self) -> dict[int, list[tuple[int, float]]]:
        """Trainable parameter index -> [(gate index, coefficient), ...]."""
        out: dict[int, list[tuple[int, float]]] = {k: [] for k in range(self.n_trainable)}
        for gate, idx in enumerate(self.layout.param_index):
            if idx >= 0:
                out[int(idx)].append((gate, float(self.coefs[gate])))
        return out

    def bind(self, params: np.ndarray) -> list[Gate]:
        angles = self.layout.angles(self.coefs, params)[0]
        return [
            Gate(kind, tgt, float(a) if kind.parametric else None)
            for kind, tgt, a in zip(self.layout.kinds, self.layout.targets, angles)
        ]


def build(kind: AnsatzKind | str, g: AnnotatedGraph, p: int) -> AnsatzProgram:
    layout = layout_for(AnsatzKind.parse(kind), g.graph.n, int(p))
    return AnsatzProgram(layout, g, layout.coefficients(g))


def build_eqc(g: AnnotatedGraph, p: int) -> AnsatzProgram:
    return build(AnsatzKind.EQC, g, p)


def build_neqc(g: AnnotatedGraph, p: int) -> AnsatzProgram:
    return build(AnsatzKind.NEQC, g, p)


def build_hwete(g: AnnotatedGraph, p: int) -> AnsatzProgram:
    return build(AnsatzKind.HWETE, g, p)


def build_hwe(g: AnnotatedGraph, p: int) -> AnsatzProgram:
    return build(AnsatzKind.HWE, g, p)


def evaluate(program: AnsatzProgram, params: np.ndarray) -> Statevector:
    params = np.asarray(params, dtype=float)
    if params.shape != (program.n_trainable,):
        raise ValidationError(f"expected {program.n_trainable} parameters, got shape {params.shape}")
    amps = program.layout.run(program.coefs, params)
    return Statevector(program.n_qubits, amps[0])


def init_params(kind: AnsatzKind | str, n: int, p: int, rng: np.random.Generator,
                scale: float = INIT_RANGE) -> np.ndarray:
    return rng.uniform(-scale, scale, size=n_trainable(AnsatzKind.parse(kind), n, p))


def neqc_from_eqc(eqc_params: np.ndarray, n: int) -> np.ndarray:
    """Per-gate NEQC parameters that tie every layer to its shared (gamma, beta) pair."""
    eqc_params = np.asarray(eqc_params, dtype=float)
    edges = n * (n - 1) // 2
    layers = [
        np.concatenate([np.full(edges, gamma), np.full(n, beta)])
        for gamma, beta in eqc_params.reshape(-1, 2)
    ]
    return np.concatenate(layers)
