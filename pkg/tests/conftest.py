import json
from pathlib import Path

import numpy as np
import pytest

from agents.baseline_agents import solve_exact
from utils.instances import TspInstance, generate_instances
from utils.tsp_graph import AnnotatedGraph, Tour, WeightedGraph

TEST_DATA = Path(__file__).resolve().parent.parent / "test_data"


def load_case(name: str) -> dict:
    with open(TEST_DATA / "tsp_cases.json") as fh:
        return json.load(fh)[name]


@pytest.fixture
def square_case() -> dict:
    return load_case("unit_square")


@pytest.fixture
def square(square_case) -> WeightedGraph:
    return WeightedGraph.from_coords(square_case["coords"])


@pytest.fixture
def square_opt(square_case) -> Tour:
    return Tour(tuple(square_case["perimeter"]))


@pytest.fixture
def triangle() -> AnnotatedGraph:
    return AnnotatedGraph.initial(WeightedGraph.from_coords(load_case("three_nodes")["coords"]))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def solved_instances():
    """Five solved 5-city instances."""
    graphs = generate_instances(5, 5, seed=3)
    return [TspInstance(g, solve_exact(g), k) for k, g in enumerate(graphs)]


@pytest.fixture
def test_data_dir() -> Path:
    return TEST_DATA
