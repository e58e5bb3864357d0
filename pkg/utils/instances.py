# utils/instances.py

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.spatial.distance import pdist

from utils.errors import ValidationError
from utils.tsp_graph import Tour, WeightedGraph

log = logging.getLogger(__name__)

MIN_CITIES = 4


@dataclass(frozen=True, eq=False)
class TspInstance:
    graph: WeightedGraph
    tour: Tour | None = None
    index: int = 0

    @property
    def n(self) -> int:
        return self.graph.n


def generate_instances(n: int, count: int, seed: int) -> list[WeightedGraph]:
    """Uniform i.i.d. points in the unit square; a draw with coincident points is redrawn."""
    if n < MIN_CITIES:
        raise ValidationError(f"instances need at least {MIN_CITIES} cities, got {n}")
    if count < 0:
        raise ValidationError(f"count must be non-negative, got {count}")
    rng = np.random.default_rng(seed)
    graphs = []
    for _ in range(count):
        coords = rng.uniform(0.0, 1.0, size=(n, 2))
        while np.any(pdist(coords) == 0.0):
            coords = rng.uniform(0.0, 1.0, size=(n, 2))
        graphs.append(WeightedGraph.from_coords(coords))
    return graphs


def format_instance(inst: TspInstance) -> str:
    parts = [repr(float(x)) for x in inst.graph.coords.reshape(-1)]
    if inst.tour is not None:
        parts.append("|")
        parts.extend(str(v) for v in inst.tour.order)
    return " ".join(parts)


def parse_instance(line: str, index: int = 0, where: str = "") -> TspInstance:
    """Parse ``x1 y1 ... xn yn [| i1 ... in]`` or the pointer-network ``... output i1 ... in i1`` form."""
    tokens = line.split()
    tour_tokens: list[str] | None = None
    one_based = False
    if "|" in tokens:
        k = tokens.index("|")
        tokens, tour_tokens = tokens[:k], tokens[k + 1:]
    elif "output" in tokens:
        k = tokens.index("output")
        tokens, tour_tokens = tokens[:k], tokens[k + 1:]
        one_based = True

    try:
        values = [float(t) for t in tokens]
    except ValueError as exc:
        raise ValidationError(f"{where}bad coordinate: {exc}") from exc
    if len(values) % 2 or len(values) < 2 * 3:
        raise ValidationError(f"{where}expected an even number (>= 6) of coordinates, got {len(values)}")
    graph = WeightedGraph.from_coords(np.asarray(values).reshape(-1, 2))

    tour = None
    if tour_tokens:
        try:
            order = [int(t) - (1 if one_based else 0) for t in tour_tokens]
        except ValueError as exc:
            raise ValidationError(f"{where}bad tour index: {exc}") from exc
        if len(order) == graph.n + 1 and order[0] == order[-1]:
            order = order[:-1]
        if len(order) != graph.n:
            raise ValidationError(f"{where}tour has {len(order)} nodes for {graph.n} cities")
        tour = Tour.from_cycle(order)
    return TspInstance(graph, tour, index)


def read_instances(path: str | Path) -> list[TspInstance]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"instance file not found: {path}")
    out = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            out.append(parse_instance(line, index=len(out), where=f"{path}:{lineno}: "))
    log.info("Read %d instances from %s", len(out), path)
    return out


def write_instances(path: str | Path, instances: Iterable[TspInstance]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [format_instance(inst) for inst in instances]
    path.write_text("".join(line + "\n" for line in lines))
    log.info("Wrote %d instances to %s", len(lines), path)
    return len(lines)
