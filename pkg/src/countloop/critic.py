"""Structured critic feedback and its translation into graph edits.

The programmatic critic inspects detections and layout geometry directly;
parse_critic_json ingests the same schema from an LLM reply. Both produce a
CriticReport whose issues carry enough structure for the edit translator,
falling back to parsing the paper-style free-text descriptions ("cup_7 is
overlapping with cup_3", "Add watches 13-15 at [0.72,0.41] ...") when only
text is available.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field, replace

from .errors import JsonError, SchemaError
from .graph import (
    AddNodes, GraphEdit, JitterSpacing, PlanningGraph, RemoveNodes, Separate,
)
from .layout import Layout, gap_violations, grid_score, iou_pairs
from .prompting import iter_json_objects, pluralize_phrase, singularize_phrase
from .scoring import DetectionReport, THRESHOLD_DEFAULT, termination_check

log = logging.getLogger(__name__)

GRID_FLAG_THRESHOLD = 0.9
JITTER_DIST_RANGE = (42.0, 48.0)    # px, the standard anti-grid fix
JITTER_ANGLE_RANGE = (-3.0, 10.0)   # degrees

ISSUE_TYPES = ("count", "spatial", "attribute")
SEVERITIES = ("critical", "major", "minor")

_OVERLAP_RE = re.compile(r"(\S+)\s+is\s+overlapping\s+with\s+(\S+)", re.IGNORECASE)
_POSITION_RE = re.compile(r"\[\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\]")
_COUNT_TEXT_RE = re.compile(
    r"only\s+(\d+)\s+(.+?)\s+detected\s+but\s+target\s+is\s+(\d+)", re.IGNORECASE)
_EXTRA_TEXT_RE = re.compile(
    r"(\d+)\s+extra\s+(.+?)\s+detected\s+\(target\s+(\d+)\)", re.IGNORECASE)
_REMOVE_TEXT_RE = re.compile(r"remove\s+([\w\s,_]+)", re.IGNORECASE)


@dataclass(frozen=True)
class Issue:
    type: str
    severity: str
    description: str
    suggested_fix: str = ""
    category: str | None = None
    detected: int | None = None
    target: int | None = None
    pair: tuple[str, str] | None = None
    grid: bool = False
    positions: tuple[tuple[float, float], ...] | None = None
    remove_ids: tuple[str, ...] | None = None

    def actionable(self) -> bool:
        return self.severity in ("critical", "major")


@dataclass
class CriticReport:
    detected: dict[str, int]
    target: dict[str, int]
    spatial_quality: float
    issues: list[Issue] = field(default_factory=list)
    continue_refinement: bool = True
    reason: str = ""

    def to_dict(self) -> dict:
        return {
            "evaluation": {
                "count_accuracy": {
                    "detected": dict(self.detected),
                    "target": dict(self.target),
                },
                "spatial_quality": self.spatial_quality,
            },
            "issues": [_encode_issue(i) for i in self.issues],
            "decision": {
                "continue_refinement": self.continue_refinement,
                "reason": self.reason,
            },
        }


def _encode_issue(issue: Issue) -> dict:
    out: dict = {
        "type": issue.type,
        "severity": issue.severity,
        "description": issue.description,
        "suggested_fix": issue.suggested_fix,
    }
    if issue.category is not None:
        out["category"] = issue.category
    if issue.detected is not None:
        out["detected"] = issue.detected
    if issue.target is not None:
        out["target"] = issue.target
    if issue.pair is not None:
        out["pair"] = list(issue.pair)
    if issue.grid:
        out["grid"] = True
    if issue.positions is not None:
        out["positions"] = [[p[0], p[1]] for p in issue.positions]
    if issue.remove_ids is not None:
        out["remove_ids"] = list(issue.remove_ids)
    return out


def _decode_issue(data: dict) -> Issue:
    kind = str(data.get("type", "attribute")).strip().lower()
    if kind not in ISSUE_TYPES:
        kind = "attribute"
    severity = str(data.get("severity", "minor")).strip().lower()
    if severity not in SEVERITIES:
        severity = "minor"
    description = str(data.get("description", ""))
    fix = str(data.get("suggested_fix", ""))

    category = data.get("category")
    detected = data.get("detected")
    target = data.get("target")
    pair = tuple(data["pair"]) if data.get("pair") else None
    grid = bool(data.get("grid", False))
    positions = None
    if data.get("positions"):
        positions = tuple((float(p[0]), float(p[1])) for p in data["positions"])
    remove_ids = tuple(data["remove_ids"]) if data.get("remove_ids") else None

    # fall back to the textual formats when structure is absent
    if kind == "count" and (category is None or detected is None or target is None):
        m = _COUNT_TEXT_RE.search(description) or _EXTRA_TEXT_RE.search(description)
        if m and m.re is _COUNT_TEXT_RE:
            detected = int(m.group(1)) if detected is None else detected
            target = int(m.group(3)) if target is None else target
            if category is None:
                category = singularize_phrase(m.group(2).strip().lower())
        elif m:
            extra, target_val = int(m.group(1)), int(m.group(3))
            detected = target_val + extra if detected is None else detected
            target = target_val if target is None else target
            if category is None:
                category = singularize_phrase(m.group(2).strip().lower())
    if kind == "spatial" and pair is None:
        m = _OVERLAP_RE.search(description)
        if m:
            pair = (m.group(1), m.group(2))
    if kind == "spatial" and not grid and "grid" in description.lower():
        grid = True
    if positions is None and fix:
        found = _POSITION_RE.findall(fix)
        if found:
            positions = tuple((float(x), float(y)) for x, y in found)
    if remove_ids is None and fix:
        m = _REMOVE_TEXT_RE.search(fix)
        if m:
            ids = [t.strip() for t in m.group(1).split(",")]
            remove_ids = tuple(t for t in ids if t) or None

    return Issue(
        type=kind, severity=severity, description=description, suggested_fix=fix,
        category=category,
        detected=None if detected is None else int(detected),
        target=None if target is None else int(target),
        pair=pair, grid=grid, positions=positions, remove_ids=remove_ids,
    )


def _counts_map(raw) -> dict[str, int]:
    if isinstance(raw, dict):
        return {str(k): int(v) for k, v in raw.items()}
    if isinstance(raw, (int, float)):
        return {"total": int(raw)}
    return {}


def decode_report(data: dict) -> CriticReport:
    evaluation = data.get("evaluation")
    if not isinstance(evaluation, dict):
        raise SchemaError("critic reply lacks an 'evaluation' object")
    accuracy = evaluation.get("count_accuracy", {})
    detected = _counts_map(accuracy.get("detected"))
    target = _counts_map(accuracy.get("target"))
    spatial_quality = float(evaluation.get("spatial_quality", 0.0))
    issues = [_decode_issue(item) for item in data.get("issues", []) or []]
    decision = data.get("decision") or evaluation.get("decision")
    if isinstance(decision, dict):
        cont = bool(decision.get("continue_refinement", True))
        reason = str(decision.get("reason", ""))
    else:
        cont = any(i.actionable() for i in issues) or detected != target
        reason = "derived: " + ("issues present" if cont else "no actionable issues")
    return CriticReport(
        detected=detected, target=target, spatial_quality=spatial_quality,
        issues=issues, continue_refinement=cont, reason=reason,
    )


def parse_critic_json(text: str) -> CriticReport:
    """Extract and validate the first critic-schema JSON object in a reply."""
    found = False
    for obj in iter_json_objects(text):
        found = True
        if isinstance(obj.get("evaluation"), dict):
            return decode_report(obj)
    if found:
        raise SchemaError("no JSON object matching the critic schema")
    raise JsonError("no parseable JSON object in critic reply")


# --- programmatic critic -----------------------------------------------------

def programmatic_critic(layout: Layout, det: DetectionReport,
                        targets: dict[str, int], s_a: float, score: float,
                        min_sep: float = 8.0,
                        grid_flag_threshold: float = GRID_FLAG_THRESHOLD,
                        threshold: float = THRESHOLD_DEFAULT,
                        inclusive: bool = False) -> CriticReport:
    """Deterministic critic: one critical count issue per mismatched
    category, one major spatial issue per under-separated box pair (canonical
    id order) plus a grid flag, and a continue/stop decision."""
    issues: list[Issue] = []
    detected = {cat: det.count(cat) for cat in targets}

    for cat in sorted(targets):
        gt = targets[cat]
        found = detected[cat]
        if found == gt:
            continue
        plural = pluralize_phrase(cat)
        if found < gt:
            missing = gt - found
            spots = _suggest_positions(layout, missing)
            spot_text = ", ".join(f"[{x:.2f},{y:.2f}]" for x, y in spots)
            issues.append(Issue(
                type="count", severity="critical",
                description=f"only {found} {plural} detected but target is {gt}",
                suggested_fix=f"Add {plural} {found + 1}-{gt} at {spot_text}",
                category=cat, detected=found, target=gt, positions=spots,
            ))
        else:
            surplus = found - gt
            doomed = _most_overlapped_ids(layout, cat, surplus)
            issues.append(Issue(
                type="count", severity="critical",
                description=f"{surplus} extra {plural} detected (target {gt})",
                suggested_fix="Remove " + ", ".join(doomed),
                category=cat, detected=found, target=gt, remove_ids=tuple(doomed),
            ))

    for id_a, id_b in gap_violations(layout, min_sep):
        issues.append(Issue(
            type="spatial", severity="major",
            description=f"{id_a} is overlapping with {id_b}",
            suggested_fix=f"Increase separation between {id_a} and {id_b}",
            pair=(id_a, id_b),
        ))

    regularity = grid_score(layout)
    if regularity > grid_flag_threshold:
        lo, hi = JITTER_DIST_RANGE
        alo, ahi = JITTER_ANGLE_RANGE
        issues.append(Issue(
            type="spatial", severity="major",
            description="Artificial grid pattern",
            suggested_fix=(f"Vary spacing ({lo:.0f}-{hi:.0f}px) and angles "
                           f"({alo:+.0f} to {ahi:+.0f} degrees)"),
            grid=True,
        ))

    converged = termination_check(score, detected, targets, threshold, inclusive)
    cont = any(i.actionable() for i in issues) or not converged
    if cont:
        reason = issues[0].description if issues else "composite score below threshold"
    else:
        reason = "count targets met and composite score above threshold"
    return CriticReport(
        detected=detected, target=dict(targets), spatial_quality=float(s_a),
        issues=issues, continue_refinement=cont, reason=reason,
    )


def _suggest_positions(layout: Layout, n: int) -> tuple[tuple[float, float], ...]:
    from .graph import largest_empty_spots

    res = layout.resolution
    centers = [(b.center[0] / res, b.center[1] / res) for b in layout.boxes]
    spots = largest_empty_spots(centers, n)
    return tuple((round(x, 4), round(y, 4)) for x, y in spots)


def _most_overlapped_ids(layout: Layout, category: str, n: int) -> list[str]:
    """Category members ranked by total pairwise IoU, most crowded first;
    falls back to highest index when nothing overlaps."""
    members = [(i, b) for i, b in enumerate(layout.boxes) if b.category == category]
    overlap_total = {i: 0.0 for i, _ in members}
    for i, j in iou_pairs(layout, 1e-9):
        if i in overlap_total:
            overlap_total[i] += 1.0
        if j in overlap_total:
            overlap_total[j] += 1.0
    ranked = sorted(
        members,
        key=lambda ib: (-overlap_total[ib[0]], -(_index_of(ib[1].id))),
    )
    return [b.id for _, b in ranked[:n]]


def _index_of(node_id: str) -> int:
    from .graph import split_node_id

    _, idx = split_node_id(node_id)
    return idx if idx is not None else 0


def override_counts(report: CriticReport, det: DetectionReport,
                    targets: dict[str, int], layout: Layout) -> CriticReport:
    """Make the detector authoritative over an LLM critic's count fields:
    replace the evaluation maps, rebuild count issues from real counts, and
    rederive the continue decision. Spatial/attribute issues are kept."""
    detected = {cat: det.count(cat) for cat in targets}
    kept = [i for i in report.issues if i.type != "count"]
    rebuilt: list[Issue] = []
    for cat in sorted(targets):
        gt, found = targets[cat], detected[cat]
        if found == gt:
            continue
        plural = pluralize_phrase(cat)
        if found < gt:
            spots = _suggest_positions(layout, gt - found)
            rebuilt.append(Issue(
                type="count", severity="critical",
                description=f"only {found} {plural} detected but target is {gt}",
                suggested_fix=f"Add {plural} {found + 1}-{gt}",
                category=cat, detected=found, target=gt, positions=spots,
            ))
        else:
            doomed = _most_overlapped_ids(layout, cat, found - gt)
            rebuilt.append(Issue(
                type="count", severity="critical",
                description=f"{found - gt} extra {plural} detected (target {gt})",
                suggested_fix="Remove " + ", ".join(doomed),
                category=cat, detected=found, target=gt, remove_ids=tuple(doomed),
            ))
    issues = rebuilt + kept
    cont = any(i.actionable() for i in issues) or detected != targets
    return replace(
        report, detected=detected, target=dict(targets), issues=issues,
        continue_refinement=cont,
        reason=issues[0].description if (cont and issues) else report.reason,
    )


# --- edit translation (the gradient-free optimizer) ---------------------------

def imgrad(g: PlanningGraph, report: CriticReport, min_sep: float = 8.0,
           resolution: int = 1024, seed: int = 0) -> list[GraphEdit]:
    """Translate critic feedback into concrete graph edits.

    Count issues come first (deficits become AddNodes, surpluses become
    RemoveNodes of the most crowded members), then spatial issues (Separate
    per overlapping pair, JitterSpacing for grid flags). Issues referencing
    unknown ids or categories are dropped with a warning. Edits are built
    against a progressively updated working graph so id renumbering from
    removals cannot produce dangling references.
    """
    from .graph import apply_edits

    edits: list[GraphEdit] = []
    working = g

    def push(edit: GraphEdit):
        nonlocal working
        working = apply_edits(working, [edit], resolution=resolution)
        edits.append(edit)

    for issue in (i for i in report.issues if i.type == "count"):
        if issue.category is None or issue.detected is None or issue.target is None:
            log.warning("count issue lacks category/counts, skipped: %s",
                        issue.description)
            continue
        delta = issue.target - issue.detected
        if delta > 0:
            push(AddNodes(category=issue.category, count=delta,
                          positions=issue.positions))
        elif delta < 0:
            current = {n.id for n in working.objects}
            doomed = [i for i in (issue.remove_ids or ()) if i in current]
            if len(doomed) < -delta:
                members = sorted(
                    (n.id for n in working.objects
                     if n.category == issue.category and n.id not in doomed),
                    key=_index_of, reverse=True,
                )
                doomed += members[: (-delta - len(doomed))]
            if len(doomed) < -delta:
                log.warning("cannot find %d %s nodes to remove", -delta, issue.category)
            if doomed:
                push(RemoveNodes(ids=tuple(doomed[: -delta])))

    node_sizes = {n.id: n.size for n in working.objects}
    for issue in (i for i in report.issues if i.type == "spatial"):
        if issue.grid:
            push(JitterSpacing(dist_range=JITTER_DIST_RANGE,
                               angle_range=JITTER_ANGLE_RANGE, seed=seed))
            continue
        if issue.pair is None:
            log.warning("spatial issue without a box pair, skipped: %s",
                        issue.description)
            continue
        id_a, id_b = issue.pair
        if id_a not in node_sizes or id_b not in node_sizes:
            log.warning("spatial issue references unknown ids %s, skipped", issue.pair)
            continue
        wa, ha = node_sizes[id_a]
        wb, hb = node_sizes[id_b]
        # center distance guaranteeing gap >= min_sep in any push direction:
        # t >= 2*min_sep + sum(half widths) + sum(half heights)
        half_sum = ((wa + wb) / 2 + (ha + hb) / 2) * resolution
        push(Separate(id_a=id_a, id_b=id_b,
                      min_separation=2.0 * min_sep + half_sum))

    return edits
