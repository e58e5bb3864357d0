import math

import numpy as np
import pytest

from utils.errors import ValidationError
from utils.permutations import random_permutation
from utils.tsp_graph import (
    AVAILABLE,
    IN_TOUR,
    AnnotatedGraph,
    Tour,
    WeightedGraph,
    approximation_ratio,
    step_reward,
    tour_cost,
)


def test_weights_are_euclidean(square):
    w = square.weights
    assert np.array_equal(w, w.T)
    assert np.all(np.diag(w) == 0.0)
    assert w[0, 2] == pytest.approx(math.sqrt(2))
    assert square.max_weight == pytest.approx(math.sqrt(2))
    assert len(square.edges()) == 6


def test_duplicate_points_rejected():
    with pytest.raises(ValidationError):
        WeightedGraph.from_coords([[0, 0], [1, 1], [0, 0]])


def test_graph_is_read_only(square):
    with pytest.raises(ValueError):
        square.weights[0, 1] = 5.0


def test_tour_costs(square, square_case):
    assert tour_cost(square, Tour(tuple(square_case["perimeter"]))) == pytest.approx(square_case["perimeter_cost"])
    assert tour_cost(square, Tour(tuple(square_case["crossing"]))) == pytest.approx(2 + 2 * math.sqrt(2))
    assert tour_cost(square, [0, 1]) == pytest.approx(1.0)
    assert tour_cost(square, [0, 1], closed=True) == pytest.approx(2.0)


def test_tour_cost_rejects_repeats(square):
    with pytest.raises(ValidationError):
        tour_cost(square, [0, 1, 1])
    with pytest.raises(ValidationError):
        tour_cost(square, [0])


@pytest.mark.parametrize("order", [(1, 0, 2, 3), (0, 0, 1, 2), (0, 1, 2, 4), ()])
def test_invalid_tours(order):
    with pytest.raises(ValidationError):
        Tour(order)


def test_tour_from_cycle():
    assert Tour.from_cycle([2, 3, 0, 1]).order == (0, 1, 2, 3)


def test_approximation_ratio(square, square_case, square_opt):
    crossing = Tour(tuple(square_case["crossing"]))
    assert approximation_ratio(square, square_opt, square_opt) == 1.0
    assert approximation_ratio(square, crossing, square_opt) == pytest.approx(square_case["crossing_ratio"])


def test_step_reward(square):
    assert step_reward(square, [0], 1) == pytest.approx(-1.0)
    assert step_reward(square, [0], 1) > step_reward(square, [0], 2)
    # completing node pays for the closing edge too
    assert step_reward(square, [0, 1, 2], 3) == pytest.approx(-2.0)


def test_step_reward_rejects_visited(square):
    with pytest.raises(ValidationError):
        step_reward(square, [0, 1], 1)


def test_annotations(square):
    g = AnnotatedGraph.initial(square)
    assert g.alpha.tolist() == [IN_TOUR, AVAILABLE, AVAILABLE, AVAILABLE]
    g2 = g.visit(2)
    assert g2.available_nodes().tolist() == [1, 3]
    assert g.available_nodes().tolist() == [1, 2, 3]
    with pytest.raises(ValidationError):
        g2.visit(2)
    with pytest.raises(ValidationError):
        AnnotatedGraph(square, np.array([0.0, 1.0, np.pi, np.pi]))


def test_permuted_graph(square):
    sigma = [2, 0, 3, 1]
    g = AnnotatedGraph.from_partial(square, [0, 3])
    gp = g.permuted(sigma)
    for i in range(4):
        assert gp.alpha[sigma[i]] == g.alpha[i]
        for j in range(4):
            assert gp.graph.weights[sigma[i], sigma[j]] == pytest.approx(g.graph.weights[i, j], abs=1e-15)


def test_cost_invariant_under_relabeling(rng):
    n = 7
    coords = rng.uniform(size=(n, 2))
    g = WeightedGraph.from_coords(coords)
    t = Tour(tuple([0] + (1 + rng.permutation(n - 1)).tolist()))
    for _ in range(10):
        sigma = random_permutation(n, rng)
        assert tour_cost(g.permuted(sigma), t.relabeled(sigma)) == pytest.approx(tour_cost(g, t), abs=1e-12)
