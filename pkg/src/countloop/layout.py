"""Pixel-aligned layout synthesis: graph -> integer boxes, overlap
relaxation, anti-grid jitter, and grid-regularity measurement.

A box gap is the larger of the two per-axis edge separations (negative when
boxes overlap); layouts are "separated" when every pairwise gap >= min_sep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import CapacityError
from .graph import PACK_LIMIT, PlanningGraph, split_node_id

MIN_SEP_DEFAULT = 8          # pixels at 1024 resolution
MIN_HALF_EXTENT = 2          # keeps box area >= 16 px^2
CV_REF = 0.25                # grid_score normalization
RELAX_DAMPING = 0.7
RELAX_TOL = 0.5              # pixels, fixed-point movement tolerance
RELAX_SLACK = 1.01           # float-stage margin so integer rounding keeps min_sep


@dataclass(frozen=True)
class InstanceBox:
    id: str
    category: str
    bbox: tuple[int, int, int, int]   # x0, y0, x1, y1 with x0 < x1, y0 < y1
    depth: float
    z: int

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bbox
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)

    @property
    def width(self) -> int:
        return self.bbox[2] - self.bbox[0]

    @property
    def height(self) -> int:
        return self.bbox[3] - self.bbox[1]


@dataclass(frozen=True)
class Layout:
    resolution: int
    boxes: tuple[InstanceBox, ...]

    def category_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for box in self.boxes:
            counts[box.category] = counts.get(box.category, 0) + 1
        return counts

    def to_dict(self) -> dict:
        return {
            "resolution": self.resolution,
            "boxes": [
                {"id": b.id, "category": b.category, "bbox": list(b.bbox),
                 "depth": b.depth, "z": b.z}
                for b in self.boxes
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Layout":
        boxes = []
        for item in data["boxes"]:
            x0, y0, x1, y1 = (int(v) for v in item["bbox"])
            boxes.append(InstanceBox(
                id=str(item["id"]),
                category=str(item["category"]),
                bbox=(x0, y0, x1, y1),
                depth=float(item["depth"]),
                z=int(item["z"]),
            ))
        return cls(resolution=int(data["resolution"]), boxes=tuple(boxes))


def _paint_key(node) -> tuple:
    _, index = split_node_id(node.id)
    return (-node.depth, node.category, index if index is not None else 0, node.id)


def realize_layout(g: PlanningGraph, resolution: int) -> Layout:
    """Map each node to an integer box centered at round(pos * res) with
    half extents round(size * res) // 2, clamped to the canvas; paint order
    z runs far-to-near by depth with ties broken by id."""
    if resolution < 64:
        raise ValueError(f"resolution {resolution} < 64")
    boxes = []
    total_area = 0
    for node in g.objects:
        cx = round(node.pos[0] * resolution)
        cy = round(node.pos[1] * resolution)
        hw = max(round(node.size[0] * resolution) // 2, MIN_HALF_EXTENT)
        hh = max(round(node.size[1] * resolution) // 2, MIN_HALF_EXTENT)
        # clamp by shifting, preserving extent (and the min-area bound)
        # unless the box itself exceeds the canvas
        w = min(2 * hw, resolution - 1)
        h = min(2 * hh, resolution - 1)
        x0 = min(max(cx - hw, 0), resolution - 1 - w)
        y0 = min(max(cy - hh, 0), resolution - 1 - h)
        x1, y1 = x0 + w, y0 + h
        total_area += w * h
        boxes.append((node, (x0, y0, x1, y1)))
    # the pack limit guards multi-instance separability; a lone box may
    # legitimately cover the whole canvas
    if len(boxes) >= 2 and total_area > PACK_LIMIT * resolution * resolution:
        raise CapacityError(
            f"total box area {total_area} exceeds {PACK_LIMIT:.2f} of the canvas"
        )
    ordered = sorted(boxes, key=lambda nb: _paint_key(nb[0]))
    out = [
        InstanceBox(id=node.id, category=node.category, bbox=bbox,
                    depth=node.depth, z=z)
        for z, (node, bbox) in enumerate(ordered)
    ]
    return Layout(resolution=resolution, boxes=tuple(out))


def _box_arrays(layout: Layout):
    n = len(layout.boxes)
    cx = np.empty(n)
    cy = np.empty(n)
    hw = np.empty(n)
    hh = np.empty(n)
    for i, b in enumerate(layout.boxes):
        x0, y0, x1, y1 = b.bbox
        cx[i] = (x0 + x1) / 2.0
        cy[i] = (y0 + y1) / 2.0
        hw[i] = (x1 - x0) / 2.0
        hh[i] = (y1 - y0) / 2.0
    return cx, cy, hw, hh


def gap_violations(layout: Layout, min_sep: float) -> list[tuple[str, str]]:
    """Box id pairs with gap < min_sep, in canonical id order."""
    if len(layout.boxes) < 2:
        return []
    cx, cy, hw, hh = _box_arrays(layout)
    pairs = kernels.violating_pairs(cx, cy, hw, hh, float(min_sep))
    out = []
    for i, j in pairs:
        a, b = layout.boxes[int(i)].id, layout.boxes[int(j)].id
        out.append((min(a, b), max(a, b)))
    return sorted(out)


def relax_overlaps(layout: Layout, min_sep: float = MIN_SEP_DEFAULT,
                   max_steps: int = 200) -> Layout:
    """Damped pairwise repulsion until every box gap >= min_sep or max_steps.

    Box dimensions, ids, and counts never change; boxes stay on canvas.
    Already-feasible layouts are returned unchanged (fixed point). Residual
    overlaps, if any, are observable via gap_violations().
    """
    if min_sep < 0:
        raise ValueError("min_sep must be >= 0")
    if len(layout.boxes) < 2 or not gap_violations(layout, min_sep):
        return layout
    cx, cy, hw, hh = _box_arrays(layout)
    res = layout.resolution
    cx, cy, _steps, _ok = kernels.relax_boxes(
        cx, cy, hw, hh, float(min_sep) + RELAX_SLACK, RELAX_DAMPING,
        RELAX_TOL, int(max_steps), 0.0, float(res - 1),
    )
    new_boxes = []
    for i, b in enumerate(layout.boxes):
        w, h = b.width, b.height
        x0 = round(cx[i] - w / 2.0)
        y0 = round(cy[i] - h / 2.0)
        x0 = min(max(x0, 0), res - 1 - w)
        y0 = min(max(y0, 0), res - 1 - h)
        new_boxes.append(replace(b, bbox=(x0, y0, x0 + w, y0 + h)))
    return Layout(resolution=res, boxes=tuple(new_boxes))


def grid_score(layout: Layout) -> float:
    """Regularity in [0, 1]: 1 for a perfect lattice, 0 for irregular
    spreads. Based on the coefficient of variation of nearest-neighbor
    center distances; fewer than 4 boxes scores 0."""
    if len(layout.boxes) < 4:
        return 0.0
    cx, cy, _, _ = _box_arrays(layout)
    nn = kernels.nn_distances(cx, cy)
    mean = float(nn.mean())
    if mean <= 0.0:
        return 1.0
    cv = float(nn.std()) / mean
    return 1.0 - min(max(cv / CV_REF, 0.0), 1.0)


def jitter(layout: Layout, seed: int, pos_range: float,
           angle_range: float = 0.0) -> Layout:
    """Perturb each box center by up to pos_range pixels in a random
    direction (plus +-angle_range degrees of angular dither), deterministic
    per seed. Sizes, ids, and counts are preserved; boxes stay on canvas."""
    if pos_range < 0 or angle_range < 0:
        raise ValueError("jitter ranges must be >= 0")
    if pos_range == 0 or not layout.boxes:
        return layout
    rng = np.random.default_rng(seed)
    res = layout.resolution
    new_boxes = []
    for b in layout.boxes:
        r = rng.uniform(0.0, pos_range)
        theta = math.radians(rng.uniform(0.0, 360.0)
                             + rng.uniform(-angle_range, angle_range))
        cx, cy = b.center
        w, h = b.width, b.height
        x0 = round(cx + r * math.cos(theta) - w / 2.0)
        y0 = round(cy + r * math.sin(theta) - h / 2.0)
        x0 = min(max(x0, 0), res - 1 - w)
        y0 = min(max(y0, 0), res - 1 - h)
        new_boxes.append(replace(b, bbox=(x0, y0, x0 + w, y0 + h)))
    return Layout(resolution=res, boxes=tuple(new_boxes))


def iou_pairs(layout: Layout, threshold: float) -> list[tuple[int, int]]:
    """Box index pairs (i < j) whose IoU >= threshold."""
    n = len(layout.boxes)
    if n < 2:
        return []
    x0 = np.array([b.bbox[0] for b in layout.boxes], dtype=np.float64)
    y0 = np.array([b.bbox[1] for b in layout.boxes], dtype=np.float64)
    x1 = np.array([b.bbox[2] for b in layout.boxes], dtype=np.float64)
    y1 = np.array([b.bbox[3] for b in layout.boxes], dtype=np.float64)
    iou = kernels.iou_matrix(x0, y0, x1, y1)
    ii, jj = np.nonzero(np.triu(iou >= threshold, k=1))
    return [(int(i), int(j)) for i, j in zip(ii, jj)]
