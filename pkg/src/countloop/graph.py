"""Planning graph: object nodes, relation edges, scene context.

Covers construction from a parsed prompt (deterministic fallback planner),
validation, the canonical text rendering fed to a layout-designer LLM, the
JSON codec, and in-order application of refinement edits.

Coordinates are normalized to [0, 1]^2 with y growing downward (image
convention), so "below" means larger y. Depth is in [0, 1] with 0 nearest.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .errors import CapacityError, EditError
from .prompting import PromptSpec

RELATIONS = frozenset({"above", "below", "left-of", "right-of", "near", "on"})
DIRECTIONAL = frozenset({"above", "below", "left-of", "right-of"})
EPS_DIR = 0.02

PACK_LIMIT = 0.55          # realize-time hard cap on total box area
TARGET_FILL = 0.35         # planner shrinks sizes toward this fill fraction
MIN_SIZE_NORM = 4.0 / 1024  # smallest box side the planner will emit
NOMINAL_RES = 1024
_ELEVATED_WORDS = ("sky", "air", "flying", "floating")

_SIZE_TABLE: dict[str, list[float]] = json.loads(
    resources.files("countloop.data").joinpath("category_sizes.json").read_text()
)


def default_size(category: str) -> tuple[float, float]:
    entry = _SIZE_TABLE.get(category, _SIZE_TABLE["default"])
    return (float(entry[0]), float(entry[1]))


def make_node_id(category: str, index: int) -> str:
    return f"{category.replace(' ', '_')}_{index}"


def split_node_id(node_id: str) -> tuple[str, int | None]:
    """('cat_3') -> ('cat', 3); ids without a numeric suffix get index None."""
    m = re.match(r"^(.*?)[\s_]+(\d+)$", node_id)
    if not m:
        return node_id.replace("_", " "), None
    return m.group(1).replace("_", " "), int(m.group(2))


@dataclass(frozen=True)
class ObjectNode:
    id: str
    category: str
    pos: tuple[float, float]
    depth: float
    size: tuple[float, float]
    color: str | None = None
    attributes: tuple[str, ...] = ()


@dataclass(frozen=True)
class RelationEdge:
    source: str
    target: str
    relation: str
    dist: float | None = None
    angle: float | None = None


@dataclass(frozen=True)
class PlanningGraph:
    objects: tuple[ObjectNode, ...]
    relations: tuple[RelationEdge, ...]
    context: str = ""

    def node_by_id(self, node_id: str) -> ObjectNode | None:
        for node in self.objects:
            if node.id == node_id:
                return node
        return None

    def category_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for node in self.objects:
            counts[node.category] = counts.get(node.category, 0) + 1
        return counts


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    subject: tuple[str, ...] = ()


# --- refinement edits -------------------------------------------------------

@dataclass(frozen=True)
class AddNodes:
    category: str
    count: int
    positions: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True)
class RemoveNodes:
    ids: tuple[str, ...]


@dataclass(frozen=True)
class Separate:
    id_a: str
    id_b: str
    min_separation: float  # pixels at canvas resolution


@dataclass(frozen=True)
class MoveNode:
    id: str
    pos: tuple[float, float]


@dataclass(frozen=True)
class JitterSpacing:
    dist_range: tuple[float, float]    # pixels
    angle_range: tuple[float, float]   # degrees
    seed: int = 0

    def __post_init__(self):
        if not self.dist_range[0] < self.dist_range[1]:
            raise ValueError("degenerate distance range")
        if not self.angle_range[0] < self.angle_range[1]:
            raise ValueError("degenerate angle range")


@dataclass(frozen=True)
class SetContext:
    text: str


GraphEdit = AddNodes | RemoveNodes | Separate | MoveNode | JitterSpacing | SetContext


# --- construction -----------------------------------------------------------

def _is_elevated(category: str, spec: PromptSpec) -> bool:
    phrases = spec.attributes.get(category, [])
    return any(any(w in p for w in _ELEVATED_WORDS) for p in phrases)


def _shrunk_sizes(spec: PromptSpec, bands: dict[str, tuple[float, float]],
                  band_area: dict[str, float]) -> dict[str, tuple[float, float]]:
    """Per-category sizes scaled down so each placement band stays under
    TARGET_FILL of its area; raises CapacityError when even minimum-size
    boxes plus separation cannot fit."""
    sizes = {c: default_size(c) for c in spec.targets}
    fill: dict[str, float] = {}
    for cat, n in spec.targets.items():
        band = bands[cat]
        w, h = sizes[cat]
        fill[band] = fill.get(band, 0.0) + n * w * h
    scale = 1.0
    for band, used in fill.items():
        budget = TARGET_FILL * band_area[band]
        if used > budget:
            scale = min(scale, math.sqrt(budget / used))
    if scale < 1.0:
        sizes = {
            c: (max(w * scale, MIN_SIZE_NORM), max(h * scale, MIN_SIZE_NORM))
            for c, (w, h) in sizes.items()
        }
    sep = 8.0 / NOMINAL_RES
    padded = sum(
        n * (sizes[c][0] + sep) * (sizes[c][1] + sep)
        for c, n in spec.targets.items()
    )
    if padded > PACK_LIMIT:
        raise CapacityError(
            f"{spec.total()} instances cannot fit at minimum size "
            f"(padded fill {padded:.2f} > {PACK_LIMIT})"
        )
    return sizes


def _stratified_positions(n: int, rect: tuple[float, float, float, float],
                          rng: np.random.Generator) -> list[tuple[float, float]]:
    """n jittered-grid positions inside rect (x0, y0, x1, y1); natural,
    non-grid spread with no coincident centers."""
    x0, y0, x1, y1 = rect
    bw, bh = x1 - x0, y1 - y0
    cols = max(1, round(math.sqrt(n * bw / bh))) if bh > 0 else n
    rows = max(1, math.ceil(n / cols))
    while rows * cols < n:
        cols += 1
    cw, ch = bw / cols, bh / rows
    cells = [(r, c) for r in range(rows) for c in range(cols)]
    chosen = [cells[i] for i in rng.permutation(len(cells))[:n]]
    out = []
    for r, c in chosen:
        jx, jy = rng.uniform(-0.4, 0.4, size=2)
        out.append((x0 + (c + 0.5 + jx) * cw, y0 + (r + 0.5 + jy) * ch))
    return out


def _clamp_pos(pos: tuple[float, float], size: tuple[float, float]) -> tuple[float, float]:
    hx, hy = size[0] / 2, size[1] / 2
    x = min(max(pos[0], min(hx, 0.5)), max(1 - hx, 0.5))
    y = min(max(pos[1], min(hy, 0.5)), max(1 - hy, 0.5))
    return (float(x), float(y))


def _edge_hint(src: ObjectNode, dst: ObjectNode) -> tuple[float, float]:
    """Advisory pixel distance and angle (90 = straight up) for an edge."""
    dx = (dst.pos[0] - src.pos[0]) * NOMINAL_RES
    dy = (dst.pos[1] - src.pos[1]) * NOMINAL_RES
    dist = round(math.hypot(dx, dy))
    angle = round(math.degrees(math.atan2(-dy, dx)))
    return float(dist), float(angle)


def build_graph(spec: PromptSpec, seed: int = 42, policy: str = "stratified") -> PlanningGraph:
    """Deterministic fallback planner: one node per requested instance.

    Elevated categories (attribute mentions sky/air/flying) land in an upper
    band and gain "below" edges from every grounded node; everything else is
    stratified-jitter placed so centers never coincide and the layout is not
    grid-like.
    """
    if not spec.targets:
        raise CapacityError("empty targets")
    if policy != "stratified":
        raise ValueError(f"unknown placement policy: {policy}")
    rng = np.random.default_rng(seed)

    elevated = {c for c in spec.targets if _is_elevated(c, spec)}
    grounded = [c for c in spec.targets if c not in elevated]
    if elevated and grounded:
        bands = {c: ("upper" if c in elevated else "lower") for c in spec.targets}
        rects = {"upper": (0.08, 0.08, 0.92, 0.35), "lower": (0.08, 0.45, 0.92, 0.92)}
    else:
        bands = {c: "full" for c in spec.targets}
        rects = {"full": (0.08, 0.08, 0.92, 0.92)}
    areas = {name: (r[2] - r[0]) * (r[3] - r[1]) for name, r in rects.items()}
    sizes = _shrunk_sizes(spec, bands, areas)

    band_members: dict[str, list[str]] = {}
    for cat in spec.targets:
        band_members.setdefault(bands[cat], []).append(cat)

    nodes: list[ObjectNode] = []
    for band_name in rects:
        members = band_members.get(band_name, [])
        total = sum(spec.targets[c] for c in members)
        if total == 0:
            continue
        if total == 1 and len(rects) == 1:
            cat = members[0]
            jitter = rng.uniform(-0.08, 0.08, size=2)
            positions = [(0.5 + jitter[0], 0.5 + jitter[1])]
        else:
            positions = _stratified_positions(total, rects[band_name], rng)
        k = 0
        for cat in members:
            base_depth = 0.2 if cat in elevated else 0.4
            for idx in range(1, spec.targets[cat] + 1):
                depth = float(np.clip(base_depth + rng.uniform(-0.05, 0.05), 0.0, 1.0))
                pos = _clamp_pos(positions[k], sizes[cat])
                nodes.append(ObjectNode(
                    id=make_node_id(cat, idx),
                    category=cat,
                    pos=pos,
                    depth=depth,
                    size=sizes[cat],
                    attributes=tuple(spec.attributes.get(cat, [])),
                ))
                k += 1

    edges: list[RelationEdge] = []
    if elevated and grounded:
        node_map = {n.id: n for n in nodes}
        for g_node in nodes:
            if g_node.category in elevated:
                continue
            for e_node in nodes:
                if e_node.category not in elevated:
                    continue
                dist, angle = _edge_hint(node_map[g_node.id], node_map[e_node.id])
                edges.append(RelationEdge(
                    source=g_node.id, target=e_node.id, relation="below",
                    dist=dist, angle=angle,
                ))

    return PlanningGraph(
        objects=tuple(nodes),
        relations=tuple(_sorted_edges(edges)),
        context=spec.context or "",
    )


# --- validation -------------------------------------------------------------

def _direction_violation(relation: str, src: ObjectNode, dst: ObjectNode) -> bool:
    sx, sy = src.pos
    tx, ty = dst.pos
    if relation == "below":
        return not sy >= ty + EPS_DIR
    if relation == "above":
        return not sy <= ty - EPS_DIR
    if relation == "left-of":
        return not sx <= tx - EPS_DIR
    if relation == "right-of":
        return not sx >= tx + EPS_DIR
    return False


def validate_graph(g: PlanningGraph) -> list[Violation]:
    """Empty list iff all node/edge invariants hold, including positional
    consistency of directional edges."""
    out: list[Violation] = []
    seen: dict[str, ObjectNode] = {}
    per_cat: dict[str, list[int]] = {}
    for node in g.objects:
        if node.id in seen:
            out.append(Violation("duplicate-id", f"duplicate node id {node.id}", (node.id,)))
        seen[node.id] = node
        prefix, index = split_node_id(node.id)
        if prefix != node.category or index is None:
            out.append(Violation(
                "id-prefix", f"id {node.id} does not match category {node.category!r}",
                (node.id,),
            ))
        elif index is not None:
            per_cat.setdefault(node.category, []).append(index)
        if not (0.0 <= node.pos[0] <= 1.0 and 0.0 <= node.pos[1] <= 1.0):
            out.append(Violation("pos-range", f"{node.id} pos {node.pos} outside [0,1]^2", (node.id,)))
        if not 0.0 <= node.depth <= 1.0:
            out.append(Violation("depth-range", f"{node.id} depth {node.depth} outside [0,1]", (node.id,)))
        if not (0.0 < node.size[0] <= 1.0 and 0.0 < node.size[1] <= 1.0):
            out.append(Violation("size-range", f"{node.id} size {node.size} outside (0,1]^2", (node.id,)))
    for cat, indices in per_cat.items():
        if sorted(indices) != list(range(1, len(indices) + 1)):
            out.append(Violation(
                "index-gap", f"category {cat} indices {sorted(indices)} do not form 1..k",
                (cat,),
            ))
    for edge in g.relations:
        if edge.source == edge.target:
            out.append(Violation("edge-self", f"self edge on {edge.source}", (edge.source,)))
            continue
        if edge.source not in seen or edge.target not in seen:
            out.append(Violation(
                "edge-endpoint", f"edge {edge.source}->{edge.target} has missing endpoint",
                (edge.source, edge.target),
            ))
            continue
        if edge.relation not in RELATIONS:
            out.append(Violation(
                "edge-vocab", f"unknown relation {edge.relation!r}",
                (edge.source, edge.target),
            ))
            continue
        if edge.relation in DIRECTIONAL and _direction_violation(
                edge.relation, seen[edge.source], seen[edge.target]):
            out.append(Violation(
                "edge-direction",
                f"{edge.source} {edge.relation} {edge.target} contradicts positions",
                (edge.source, edge.target),
            ))
    return out


# --- canonical text rendering ----------------------------------------------

def _node_sort_key(node: ObjectNode):
    _, index = split_node_id(node.id)
    return (node.category, index if index is not None else 0, node.id)


def _sorted_edges(edges) -> list[RelationEdge]:
    return sorted(edges, key=lambda e: (e.source, e.target, e.relation))


def canonicalize(g: PlanningGraph) -> PlanningGraph:
    return PlanningGraph(
        objects=tuple(sorted(g.objects, key=_node_sort_key)),
        relations=tuple(_sorted_edges(g.relations)),
        context=g.context,
    )


def graph_to_prompt(g: PlanningGraph) -> str:
    """Canonical textual rendering with [Object] / [Relation] / [Context]
    sections; byte-identical for identical graphs and injective on
    canonicalized graphs (every field is rendered via repr)."""
    g = canonicalize(g)
    lines = ["[Object]"]
    for n in g.objects:
        parts = [
            f"{n.id}: category={n.category}",
            f"pos=[{n.pos[0]!r}, {n.pos[1]!r}]",
            f"depth={n.depth!r}",
            f"size=[{n.size[0]!r}, {n.size[1]!r}]",
        ]
        if n.color is not None:
            parts.append(f"color={n.color}")
        if n.attributes:
            parts.append("attributes=" + "; ".join(n.attributes))
        lines.append(", ".join(parts))
    lines.append("[Relation]")
    for e in g.relations:
        hint = ""
        if e.dist is not None or e.angle is not None:
            hint = f" (dist={e.dist!r}, angle={e.angle!r})"
        lines.append(f"{e.source} {e.relation} {e.target}{hint}")
    lines.append("[Context]")
    lines.append(g.context)
    return "\n".join(lines)


# --- JSON codec --------------------------------------------------------------

def _norm_relation(token: str) -> str:
    return str(token).strip().lower().replace(" ", "-").replace("_", "-")


def _norm_id(raw: str) -> str:
    return re.sub(r"\s+", "_", str(raw).strip())


def encode_graph(g: PlanningGraph) -> dict:
    objects = []
    for n in g.objects:
        item: dict = {
            "id": n.id,
            "pos": [n.pos[0], n.pos[1]],
            "d": n.depth,
            "size": [n.size[0], n.size[1]],
        }
        if n.color is not None:
            item["color"] = n.color
        if n.attributes:
            item["attributes"] = list(n.attributes)
        objects.append(item)
    relations = []
    for e in g.relations:
        item = {"from": e.source, "to": e.target, "relation": e.relation}
        if e.dist is not None:
            item["dist"] = e.dist
        if e.angle is not None:
            item["angle"] = e.angle
        relations.append(item)
    return {"objects": objects, "relations": relations, "context": g.context}


def decode_graph(data: dict) -> PlanningGraph:
    """Decode the planner JSON schema; tolerant of 'from'/'to' vs
    'source'/'target', 'r' vs 'relation', spaces in ids, and missing
    depth/size/color fields."""
    nodes = []
    for item in data.get("objects", []):
        node_id = _norm_id(item["id"])
        category = item.get("category")
        if not category:
            category, _ = split_node_id(node_id)
        category = str(category).strip().lower()
        pos = item["pos"]
        size = item.get("size")
        if size is None:
            size = default_size(category)
        attrs = tuple(str(a) for a in item.get("attributes", []) or ())
        nodes.append(ObjectNode(
            id=node_id,
            category=category,
            pos=(float(pos[0]), float(pos[1])),
            depth=float(item.get("d", item.get("depth", 0.5))),
            size=(float(size[0]), float(size[1])),
            color=item.get("color"),
            attributes=attrs,
        ))
    edges = []
    for item in data.get("relations", []):
        source = item.get("from", item.get("source"))
        target = item.get("to", item.get("target"))
        relation = item.get("relation", item.get("r"))
        if source is None or target is None or relation is None:
            continue
        dist = item.get("dist")
        angle = item.get("angle")
        edges.append(RelationEdge(
            source=_norm_id(source),
            target=_norm_id(target),
            relation=_norm_relation(relation),
            dist=None if dist is None else float(dist),
            angle=None if angle is None else float(angle),
        ))
    return PlanningGraph(
        objects=tuple(nodes),
        relations=tuple(edges),
        context=str(data.get("context", "") or ""),
    )


# --- edit application ---------------------------------------------------------

def largest_empty_spots(existing: list[tuple[float, float]], n_new: int,
                        margin: float = 0.05, grid: int = 24) -> list[tuple[float, float]]:
    """Greedy largest-empty-circle placement over a candidate grid."""
    centers = list(existing)
    out = []
    lo, hi = margin, 1.0 - margin
    candidates = [
        (lo + (hi - lo) * (i + 0.5) / grid, lo + (hi - lo) * (j + 0.5) / grid)
        for j in range(grid) for i in range(grid)
    ]
    for _ in range(n_new):
        best, best_score = candidates[0], -1.0
        for cand in candidates:
            border = min(cand[0], cand[1], 1 - cand[0], 1 - cand[1])
            if centers:
                nearest = min(math.hypot(cand[0] - c[0], cand[1] - c[1]) for c in centers)
            else:
                nearest = 2.0
            score = min(nearest, 2.0 * border)
            if score > best_score + 1e-12:
                best, best_score = cand, score
        out.append(best)
        centers.append(best)
    return out


def _renumber_category(nodes: list[ObjectNode], edges: list[RelationEdge],
                       category: str) -> tuple[list[ObjectNode], list[RelationEdge]]:
    members = [n for n in nodes if n.category == category]
    members.sort(key=_node_sort_key)
    mapping = {}
    for new_idx, node in enumerate(members, start=1):
        new_id = make_node_id(category, new_idx)
        if node.id != new_id:
            mapping[node.id] = new_id
    if not mapping:
        return nodes, edges
    nodes = [replace(n, id=mapping.get(n.id, n.id)) for n in nodes]
    edges = [
        replace(e, source=mapping.get(e.source, e.source),
                target=mapping.get(e.target, e.target))
        for e in edges
    ]
    return nodes, edges


def apply_edits(g: PlanningGraph, edits: list[GraphEdit],
                resolution: int = NOMINAL_RES) -> PlanningGraph:
    """Apply refinement edits in order and return a new, re-validated graph.

    AddNodes continues the category numbering; RemoveNodes renumbers the
    affected category back to 1..k; directional edges whose endpoints were
    moved into contradiction are dropped. Raises EditError on a dangling id.
    """
    nodes = list(g.objects)
    edges = list(g.relations)
    context = g.context
    moved: set[str] = set()

    def index_of(node_id: str) -> int:
        for i, node in enumerate(nodes):
            if node.id == node_id:
                return i
        raise EditError(f"edit references unknown node id {node_id!r}")

    for edit in edits:
        if isinstance(edit, AddNodes):
            existing = [n for n in nodes if n.category == edit.category]
            start = max((split_node_id(n.id)[1] or 0 for n in existing), default=0)
            exemplar = min(existing, key=_node_sort_key) if existing else None
            size = exemplar.size if exemplar else default_size(edit.category)
            depth = exemplar.depth if exemplar else 0.4
            color = exemplar.color if exemplar else None
            attrs = exemplar.attributes if exemplar else ()
            if edit.positions is not None and len(edit.positions) >= edit.count:
                spots = [tuple(p) for p in edit.positions[:edit.count]]
            else:
                spots = largest_empty_spots([n.pos for n in nodes], edit.count)
            for k in range(edit.count):
                nodes.append(ObjectNode(
                    id=make_node_id(edit.category, start + k + 1),
                    category=edit.category,
                    pos=_clamp_pos(spots[k], size),
                    depth=depth, size=size, color=color, attributes=attrs,
                ))
        elif isinstance(edit, RemoveNodes):
            for node_id in edit.ids:
                index_of(node_id)
            doomed = set(edit.ids)
            categories = {n.category for n in nodes if n.id in doomed}
            nodes = [n for n in nodes if n.id not in doomed]
            edges = [e for e in edges if e.source not in doomed and e.target not in doomed]
            for cat in sorted(categories):
                nodes, edges = _renumber_category(nodes, edges, cat)
        elif isinstance(edit, Separate):
            ia, ib = index_of(edit.id_a), index_of(edit.id_b)
            a, b = nodes[ia], nodes[ib]
            target = edit.min_separation / resolution
            dx, dy = b.pos[0] - a.pos[0], b.pos[1] - a.pos[1]
            dist = math.hypot(dx, dy)
            if dist >= target:
                continue
            if dist < 1e-9:
                ux, uy = 1.0, 0.0
            else:
                ux, uy = dx / dist, dy / dist
            shift = (target - dist) / 2
            new_a = _clamp_pos((a.pos[0] - ux * shift, a.pos[1] - uy * shift), a.size)
            # compensate for any clamping of a by pushing b the remaining way
            got = math.hypot(new_a[0] - b.pos[0], new_a[1] - b.pos[1])
            need = max(target - got, 0.0)
            new_b = _clamp_pos((b.pos[0] + ux * need, b.pos[1] + uy * need), b.size)
            nodes[ia] = replace(a, pos=new_a)
            nodes[ib] = replace(b, pos=new_b)
            moved.update((a.id, b.id))
        elif isinstance(edit, MoveNode):
            i = index_of(edit.id)
            nodes[i] = replace(nodes[i], pos=_clamp_pos(tuple(edit.pos), nodes[i].size))
            moved.add(edit.id)
        elif isinstance(edit, JitterSpacing):
            rng = np.random.default_rng(edit.seed)
            order = sorted(range(len(nodes)), key=lambda k: _node_sort_key(nodes[k]))
            for k in order:
                r = rng.uniform(*edit.dist_range) / resolution
                theta = math.radians(rng.uniform(0.0, 360.0) + rng.uniform(*edit.angle_range))
                n = nodes[k]
                new_pos = _clamp_pos(
                    (n.pos[0] + r * math.cos(theta), n.pos[1] + r * math.sin(theta)),
                    n.size,
                )
                nodes[k] = replace(n, pos=new_pos)
                moved.add(n.id)
        elif isinstance(edit, SetContext):
            context = edit.text
        else:
            raise EditError(f"unknown edit type {type(edit).__name__}")

    if moved:
        node_map = {n.id: n for n in nodes}
        kept = []
        for e in edges:
            if (e.relation in DIRECTIONAL
                    and (e.source in moved or e.target in moved)
                    and _direction_violation(e.relation, node_map[e.source], node_map[e.target])):
                continue
            kept.append(e)
        edges = kept

    return PlanningGraph(objects=tuple(nodes), relations=tuple(edges), context=context)


# --- edit codec ---------------------------------------------------------------

def encode_edit(edit: GraphEdit) -> dict:
    if isinstance(edit, AddNodes):
        out = {"type": "add_nodes", "category": edit.category, "count": edit.count}
        if edit.positions is not None:
            out["positions"] = [[p[0], p[1]] for p in edit.positions]
        return out
    if isinstance(edit, RemoveNodes):
        return {"type": "remove_nodes", "ids": list(edit.ids)}
    if isinstance(edit, Separate):
        return {"type": "separate", "id_a": edit.id_a, "id_b": edit.id_b,
                "min_separation": edit.min_separation}
    if isinstance(edit, MoveNode):
        return {"type": "move_node", "id": edit.id, "pos": [edit.pos[0], edit.pos[1]]}
    if isinstance(edit, JitterSpacing):
        return {"type": "jitter_spacing", "dist_range": list(edit.dist_range),
                "angle_range": list(edit.angle_range), "seed": edit.seed}
    if isinstance(edit, SetContext):
        return {"type": "set_context", "text": edit.text}
    raise EditError(f"unknown edit type {type(edit).__name__}")


def decode_edit(data: dict) -> GraphEdit:
    kind = data["type"]
    if kind == "add_nodes":
        positions = data.get("positions")
        return AddNodes(
            category=data["category"], count=int(data["count"]),
            positions=None if positions is None else tuple((float(p[0]), float(p[1])) for p in positions),
        )
    if kind == "remove_nodes":
        return RemoveNodes(ids=tuple(data["ids"]))
    if kind == "separate":
        return Separate(id_a=data["id_a"], id_b=data["id_b"],
                        min_separation=float(data["min_separation"]))
    if kind == "move_node":
        return MoveNode(id=data["id"], pos=(float(data["pos"][0]), float(data["pos"][1])))
    if kind == "jitter_spacing":
        return JitterSpacing(
            dist_range=tuple(float(v) for v in data["dist_range"]),
            angle_range=tuple(float(v) for v in data["angle_range"]),
            seed=int(data.get("seed", 0)),
        )
    if kind == "set_context":
        return SetContext(text=data["text"])
    raise EditError(f"unknown edit type {kind!r}")
