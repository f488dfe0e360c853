import json
from pathlib import Path

import numpy as np
import pytest

from countloop.graph import ObjectNode, PlanningGraph, make_node_id
from countloop.layout import InstanceBox, Layout

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text()


def load_fixture_json(name: str) -> dict:
    return json.loads(load_fixture_text(name))


def make_layout(boxes, resolution=1024) -> Layout:
    """boxes: list of (category, x0, y0, x1, y1) or (category, bbox tuple);
    ids/z assigned automatically, depth descending with z."""
    per_cat = {}
    out = []
    n = len(boxes)
    for z, item in enumerate(boxes):
        if len(item) == 2:
            cat, bbox = item
        else:
            cat, bbox = item[0], tuple(item[1:])
        per_cat[cat] = per_cat.get(cat, 0) + 1
        out.append(InstanceBox(
            id=make_node_id(cat, per_cat[cat]),
            category=cat,
            bbox=tuple(int(v) for v in bbox),
            depth=1.0 - (z + 1) / (n + 1),
            z=z,
        ))
    return Layout(resolution=resolution, boxes=tuple(out))


def lattice_layout(rows=3, cols=3, pitch=120, box=60, origin=100,
                   category="cup", resolution=1024) -> Layout:
    boxes = []
    for r in range(rows):
        for c in range(cols):
            x0 = origin + c * pitch
            y0 = origin + r * pitch
            boxes.append((category, x0, y0, x0 + box, y0 + box))
    return make_layout(boxes, resolution=resolution)


def random_separated_layout(rng: np.random.Generator, n: int, resolution=1024,
                            min_gap=10, categories=("cat", "cup", "dog")) -> Layout:
    """Random disjoint layout via rejection sampling on a coarse grid."""
    cells = int(np.ceil(np.sqrt(n)))
    pitch = resolution // cells
    idx = rng.permutation(cells * cells)[:n]
    boxes = []
    for k, cell in enumerate(idx):
        r, c = divmod(int(cell), cells)
        max_side = max(pitch - min_gap - 2, 8)
        side = int(rng.integers(8, max(max_side, 9)))
        x0 = c * pitch + int(rng.integers(0, max(pitch - side - min_gap, 1)))
        y0 = r * pitch + int(rng.integers(0, max(pitch - side - min_gap, 1)))
        cat = categories[int(rng.integers(len(categories)))]
        boxes.append((cat, x0, y0, min(x0 + side, resolution - 1),
                      min(y0 + side, resolution - 1)))
    return make_layout(boxes, resolution=resolution)


def simple_graph(counts: dict[str, int], size=(0.08, 0.08),
                 positions=None, context="") -> PlanningGraph:
    nodes = []
    k = 0
    for cat, n in counts.items():
        for i in range(1, n + 1):
            if positions is not None:
                pos = positions[k]
            else:
                pos = (0.1 + 0.13 * (k % 7), 0.1 + 0.13 * (k // 7))
            nodes.append(ObjectNode(
                id=make_node_id(cat, i), category=cat, pos=pos,
                depth=0.5, size=size,
            ))
            k += 1
    return PlanningGraph(objects=tuple(nodes), relations=(), context=context)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
