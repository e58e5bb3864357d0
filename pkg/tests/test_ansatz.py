import numpy as np
import pytest

from circuits.ansatz import (
    AnsatzKind,
    build,
    build_eqc,
    build_hwe,
    build_hwete,
    build_neqc,
    evaluate,
    init_params,
    layout_for,
    n_trainable,
    neqc_from_eqc,
)
from sim_utils import GateKind, Statevector, apply_permutation, expectation_zz, prepare_uniform, run_gates
from utils.errors import CapacityError, ValidationError
from utils.instances import generate_instances
from utils.tsp_graph import AnnotatedGraph


def _graph(n: int, seed: int, partial=(0,)) -> AnnotatedGraph:
    return AnnotatedGraph.from_partial(generate_instances(n, 1, seed)[0], list(partial))


@pytest.mark.parametrize(
    "kind, n, p, expected",
    [
        (AnsatzKind.EQC, 10, 4, 8),
        (AnsatzKind.NEQC, 20, 4, 840),
        (AnsatzKind.NEQC, 5, 1, 15),
        (AnsatzKind.HWETE, 5, 1, 20),
        (AnsatzKind.HWE, 10, 4, 40),
        (AnsatzKind.HWE, 5, 1, 5),
    ],
)
def test_parameter_counts(kind, n, p, expected):
    assert n_trainable(kind, n, p) == expected
    assert layout_for(kind, n, p).n_trainable == expected


def test_parameter_count_formulas():
    for n in range(4, 21):
        e = n * (n - 1) // 2
        for p in range(1, 5):
            assert layout_for(AnsatzKind.EQC, n, p).n_trainable == 2 * p
            assert layout_for(AnsatzKind.NEQC, n, p).n_trainable == p * (e + n)
            assert layout_for(AnsatzKind.HWETE, n, p).n_trainable == p * (e + 2 * n)
            assert layout_for(AnsatzKind.HWE, n, p).n_trainable == p * n


def test_every_parameter_drives_a_gate():
    for kind in AnsatzKind:
        layout = layout_for(kind, 5, 2)
        used = set(layout.param_index[layout.param_index >= 0].tolist())
        assert used == set(range(layout.n_trainable))


def test_eqc_gate_counts():
    prog = build_eqc(_graph(5, 0), 1)
    kinds = [g.kind for g in prog.bind(np.zeros(2))]
    assert kinds.count(GateKind.H) == 5
    assert kinds.count(GateKind.RZZ) == 10
    assert kinds.count(GateKind.RX) == 5
    assert len(kinds) == 20


def test_kind_parsing():
    assert AnsatzKind.parse("EQC") is AnsatzKind.EQC
    with pytest.raises(ValidationError):
        AnsatzKind.parse("qcnn")


def test_layout_limits():
    with pytest.raises(ValidationError):
        layout_for(AnsatzKind.EQC, 5, 0)
    with pytest.raises(CapacityError):
        layout_for(AnsatzKind.EQC, 25, 1)


def test_eqc_zero_parameters_give_uniform_state():
    s = evaluate(build_eqc(_graph(6, 1), 2), np.zeros(4))
    assert np.allclose(s.amplitudes, prepare_uniform(6).amplitudes, atol=1e-12)


def test_rx_on_tour_nodes_is_identity():
    g = _graph(5, 2, partial=(0, 3))
    gates = build_eqc(g, 1).bind(np.array([0.4, 0.9]))
    rx = {gate.targets[0]: gate.angle for gate in gates if gate.kind is GateKind.RX}
    assert rx[0] == 0.0 and rx[3] == 0.0
    assert rx[1] == pytest.approx(np.pi * 0.9)


def test_rzz_angles_use_edge_weights():
    g = _graph(4, 3)
    prog = build_eqc(g, 1)
    gamma = 0.3
    for gate in prog.bind(np.array([gamma, 0.1])):
        if gate.kind is GateKind.RZZ:
            i, j = gate.targets
            assert gate.angle == pytest.approx(2 * gamma * g.graph.weights[i, j])


def test_binding_of_shared_parameters():
    g = _graph(5, 4)
    binding = build_eqc(g, 1).binding
    assert len(binding[0]) == 10  # every RZZ
    assert len(binding[1]) == 5  # every RX
    gate, coef = binding[0][0]
    assert coef == pytest.approx(2 * g.graph.weights[0, 1])


def test_rzz_order_within_a_layer_does_not_matter(rng):
    g = _graph(5, 5, partial=(0, 2))
    params = rng.uniform(-np.pi, np.pi, size=2)
    prog = build_eqc(g, 1)
    gates = prog.bind(params)
    rzz = [k for k, gate in enumerate(gates) if gate.kind is GateKind.RZZ]
    shuffled = list(gates)
    for k, src in zip(rzz, rng.permutation(rzz)):
        shuffled[k] = gates[src]
    a = run_gates(Statevector.zero(5), shuffled)
    b = evaluate(prog, params)
    assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-12


def test_eqc_is_equivariant(rng):
    for trial in range(20):
        n, p = int(rng.integers(4, 8)), int(rng.integers(1, 4))
        partial = [0] + (1 + rng.permutation(n - 1))[: int(rng.integers(0, n - 1))].tolist()
        g = _graph(n, 100 + trial, partial)
        params = rng.uniform(-2 * np.pi, 2 * np.pi, size=2 * p)
        sigma = rng.permutation(n)
        lhs = evaluate(build_eqc(g.permuted(sigma), p), params)
        rhs = apply_permutation(evaluate(build_eqc(g, p), params), sigma)
        assert np.max(np.abs(lhs.amplitudes - rhs.amplitudes)) < 1e-10


def test_neqc_with_tied_parameters_matches_eqc(rng):
    g = _graph(5, 6, partial=(0, 4))
    eqc = rng.uniform(-np.pi, np.pi, size=4)
    a = evaluate(build_eqc(g, 2), eqc)
    b = evaluate(build_neqc(g, 2), neqc_from_eqc(eqc, 5))
    assert np.max(np.abs(a.amplitudes - b.amplitudes)) < 1e-12


def test_neqc_breaks_equivariance(rng):
    n, p = 5, 1
    g = _graph(n, 7)
    params = init_params(AnsatzKind.NEQC, n, p, rng, scale=np.pi)
    base = evaluate(build_neqc(g, p), params)
    worst = 0.0
    for _ in range(20):
        sigma = rng.permutation(n)
        lhs = evaluate(build_neqc(g.permuted(sigma), p), params)
        worst = max(worst, float(np.max(np.abs(lhs.amplitudes - apply_permutation(base, sigma).amplitudes))))
    assert worst > 1e-6


def test_hwete_zero_parameters_stay_in_zero_state():
    g = _graph(5, 8)
    s = evaluate(build_hwete(g, 2), np.zeros(n_trainable(AnsatzKind.HWETE, 5, 2)))
    assert abs(s.amplitudes[0]) == pytest.approx(1.0)
    assert expectation_zz(s, 0, 3) == pytest.approx(1.0)


def test_hwete_layer_order():
    kinds = layout_for(AnsatzKind.HWETE, 4, 1).kinds
    assert kinds == (GateKind.RX,) * 4 + (GateKind.RZZ,) * 6 + (GateKind.RY,) * 4 + (GateKind.CZ,) * 3


def test_hwe_encoding_is_fixed_but_graph_dependent(rng):
    params = rng.uniform(-np.pi, np.pi, size=n_trainable(AnsatzKind.HWE, 5, 2))
    a = evaluate(build_hwe(_graph(5, 9), 2), params)
    b = evaluate(build_hwe(_graph(5, 10), 2), params)
    assert a.is_normalized() and b.is_normalized()
    assert not np.allclose(a.amplitudes, b.amplitudes)
    layout = layout_for(AnsatzKind.HWE, 5, 2)
    trained = {layout.kinds[k] for k in np.flatnonzero(layout.param_index >= 0)}
    assert trained == {GateKind.RY}


def test_wrong_parameter_count():
    prog = build(AnsatzKind.EQC, _graph(4, 11), 1)
    with pytest.raises(ValidationError):
        evaluate(prog, np.zeros(3))


def test_graph_size_must_match_layout():
    layout = layout_for(AnsatzKind.EQC, 5, 1)
    with pytest.raises(ValidationError):
        layout.coefficients(_graph(4, 12))


def test_init_params_range(rng):
    params = init_params("neqc", 6, 2, rng)
    assert params.shape == (42,)
    assert np.all(np.abs(params) <= 0.1)
