import numpy as np
import pytest

from agents.baseline_agents import solve_exact
from agents.qaoa_agent import (
    QaoaAgent,
    QaoaOptimizer,
    QaoaRun,
    best_feasible,
    expected_costs,
    extend_layer,
    optimize_qaoa,
    qaoa_state,
    random_search,
    refine,
)
from utils.errors import CapacityError, InfeasibleRunError, ValidationError
from utils.instances import generate_instances
from utils.qubo import build_qubo, encode, index_of
from utils.tsp_graph import tour_cost


@pytest.fixture
def four_city():
    g = generate_instances(4, 1, 42)[0]
    return g, build_qubo(g), solve_exact(g)


def test_zero_parameters_give_uniform_state(four_city):
    _, q, _ = four_city
    s = qaoa_state(q, np.zeros(2))
    assert np.allclose(s.probabilities(), 1 / 512)
    assert expected_costs(q, np.zeros(2))[0] == pytest.approx(q.cost_diagonal.mean())


def test_states_are_normalized(four_city, rng):
    _, q, _ = four_city
    for params in rng.uniform(0, 2 * np.pi, size=(5, 4)):
        assert qaoa_state(q, params).is_normalized()


def test_mixer_period(four_city):
    _, q, _ = four_city
    a = expected_costs(q, np.array([0.7, 0.3]))[0]
    b = expected_costs(q, np.array([0.7, 0.3 + np.pi]))[0]
    assert a == pytest.approx(b, abs=1e-10)


def test_extension_with_zero_layer_keeps_state(four_city):
    _, q, _ = four_city
    params = np.array([0.4, 1.3])
    ext = extend_layer(params)
    assert ext.tolist() == [0.4, 0.0, 1.3, 0.0]
    assert np.allclose(qaoa_state(q, params).amplitudes, qaoa_state(q, ext).amplitudes, atol=1e-12)


def test_batched_costs_match_single_rows(four_city, rng):
    _, q, _ = four_city
    rows = rng.uniform(0, 2 * np.pi, size=(7, 2))
    batch = expected_costs(q, rows, threads=2)
    for k, row in enumerate(rows):
        assert batch[k] == pytest.approx(expected_costs(q, row)[0], abs=1e-12)


def test_random_search_picks_the_best_candidate(four_city):
    _, q, _ = four_city
    params, cost = random_search(q, 50, np.random.default_rng(3))
    cands = np.random.default_rng(3).uniform(0.0, 2 * np.pi, size=(50, 2))
    assert cost == pytest.approx(expected_costs(q, cands).min())
    assert params.shape == (2,)
    with pytest.raises(ValidationError):
        random_search(q, 0, np.random.default_rng(3))


@pytest.mark.parametrize("optimizer", list(QaoaOptimizer))
def test_refinement_never_worsens(four_city, optimizer):
    _, q, _ = four_city
    x0 = extend_layer(np.array([0.5, 0.4]))
    start = expected_costs(q, x0)[0]
    x, f, evals = refine(q, x0, optimizer, max_evaluations=60)
    assert f <= start + 1e-12
    assert f == pytest.approx(expected_costs(q, x)[0], abs=1e-12)
    assert evals >= 1


def test_best_feasible_decodes_a_cheap_tour(four_city):
    g, q, opt = four_city
    tour, idx = best_feasible(g, q, np.zeros(2), samples=512)
    # uniform distribution: every feasible outcome is measured
    assert tour_cost(g, tour) == pytest.approx(tour_cost(g, opt), abs=1e-12)
    assert q.cost_diagonal[idx] == pytest.approx(tour_cost(g, tour) / g.max_weight, abs=1e-9)


def test_pipeline_runs_per_depth(four_city):
    g, q, opt = four_city
    runs = optimize_qaoa(g, q, 2, np.random.default_rng(0), budget=40, optimum=opt)
    assert [r.depth for r in runs] == [1, 2]
    assert runs[1].params.shape == (4,)
    assert runs[1].expected_cost <= runs[0].expected_cost + 1e-12
    for r in runs:
        if r.feasible:
            assert r.ratio >= 1.0 - 1e-12
            assert r.require_tour() is r.tour


def test_capacity(rng):
    g = generate_instances(6, 1, 0)[0]
    q = build_qubo(g)
    with pytest.raises(CapacityError):
        qaoa_state(q, np.zeros(2))
    with pytest.raises(CapacityError):
        optimize_qaoa(g, q, 1, rng)


def test_infeasible_run_raises_on_demand():
    run = QaoaRun(depth=1, params=np.zeros(2), expected_cost=3.0, evaluations=1, tour=None, ratio=None)
    assert not run.feasible
    with pytest.raises(InfeasibleRunError):
        run.require_tour()


def test_parameter_transfer(four_city):
    g, _, opt = four_city
    agent = QaoaAgent(depth=1, budget=30, rng=np.random.default_rng(1))
    runs = agent.run(g, opt)
    other = generate_instances(4, 1, 43)[0]
    moved = agent.transfer(other, runs[0].params, solve_exact(other))
    assert moved.mode == "transfer" and moved.depth == 1
    assert moved.evaluations == 1


@pytest.mark.slow
def test_depth_three_not_worse_than_depth_one():
    graphs = generate_instances(4, 10, seed=0)
    agent = QaoaAgent(depth=3, budget=500, rng=np.random.default_rng(0))
    p1, p3 = [], []
    for g in graphs:
        opt = solve_exact(g)
        q = build_qubo(g)
        runs = agent.run(g, opt)
        for r in runs:
            if r.feasible:
                x = index_of(encode(r.tour, q))
                assert q.cost_diagonal[x] == pytest.approx(tour_cost(g, r.tour) / g.max_weight, abs=1e-9)
        p1.append(runs[0].ratio if runs[0].feasible else np.inf)
        p3.append(runs[2].ratio if runs[2].feasible else np.inf)
    assert np.median(p3) <= np.median(p1)
