import math

import numpy as np
import pytest

from agents.q_agent import program_builder, q_values, rollout
from circuits.ansatz import build_eqc
from tools.analytic_oracle import (
    depth1_beta_derivative,
    depth1_expectation,
    depth1_greedy_tour,
    depth1_terms,
)
from utils.errors import ValidationError
from utils.instances import generate_instances
from utils.tsp_graph import AnnotatedGraph


def test_vanishes_without_mixing_or_phase(triangle):
    assert depth1_expectation(triangle, 0, 1, 0.0, 0.7) == 0.0
    assert depth1_expectation(triangle, 0, 1, 0.3, 0.0) == 0.0


def test_three_node_formula_by_hand(triangle):
    w = triangle.graph.weights
    beta, gamma = 0.37, 1.1
    expected = w[0, 1] * math.sin(math.pi * beta) * math.sin(2 * gamma * w[0, 1]) * math.cos(2 * gamma * w[1, 2])
    assert depth1_expectation(triangle, 0, 1, beta, gamma) == pytest.approx(expected, rel=1e-12)
    terms = depth1_terms(triangle, 0, 1, beta, gamma)
    assert terms.cos_product == pytest.approx(math.cos(2 * gamma * w[1, 2]))


def test_three_node_matches_simulation(triangle):
    beta, gamma = 0.61, -0.83
    q = q_values(build_eqc(triangle, 1), np.array([gamma, beta]), triangle, 0)
    for v in (1, 2):
        assert q.values[v] == pytest.approx(depth1_expectation(triangle, 0, v, beta, gamma), abs=1e-12)


def test_candidate_must_be_available(triangle):
    with pytest.raises(ValidationError):
        depth1_expectation(triangle, 0, 0, 0.1, 0.1)
    with pytest.raises(ValidationError):
        depth1_expectation(triangle, 1, 2, 0.1, 0.1)


def test_random_sweep_matches_simulation(rng):
    for trial in range(50):
        n = int(rng.integers(4, 7))
        g = generate_instances(n, 1, 300 + trial)[0]
        k = int(rng.integers(1, n - 1))
        partial = [0] + (1 + rng.permutation(n - 1))[: k - 1].tolist()
        state = AnnotatedGraph.from_partial(g, partial)
        beta, gamma = rng.uniform(-2 * np.pi, 2 * np.pi, size=2)
        q = q_values(build_eqc(state, 1), np.array([gamma, beta]), state, partial[-1])
        for v in np.flatnonzero(q.mask):
            assert abs(q.values[v] - depth1_expectation(state, partial[-1], int(v), beta, gamma)) < 1e-9


def test_beta_derivative_matches_difference_quotient(triangle):
    beta, gamma, h = 0.2, 0.9, 1e-6
    fd = (depth1_expectation(triangle, 0, 2, beta + h, gamma) - depth1_expectation(triangle, 0, 2, beta - h, gamma)) / (2 * h)
    assert depth1_beta_derivative(triangle, 0, 2, beta, gamma) == pytest.approx(fd, abs=1e-8)


def test_greedy_tours_agree_with_simulated_rollouts(rng):
    builder = program_builder("eqc", 1)
    compared = 0
    for seed in range(50):
        g = generate_instances(5, 1, 400 + seed)[0]
        beta, gamma = rng.uniform(-np.pi, np.pi, size=2)
        res = rollout(builder, np.array([gamma, beta]), g, 0.0, rng)
        if min(res.margins) <= 1e-9:
            continue
        compared += 1
        assert depth1_greedy_tour(g, beta, gamma) == res.tour
    assert compared > 40
