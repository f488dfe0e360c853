"""Composite scoring and counting metrics.

The composite score is S = alpha * count_term + beta * s_a, where the
count term for one category is max(0, 1 - |detected - target| / target)
and multi-category prompts average the per-category terms unweighted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

ALPHA_DEFAULT = 0.6
BETA_DEFAULT = 0.4
THRESHOLD_DEFAULT = 0.85
CONFIDENCE_DEFAULT = 0.3


@dataclass
class DetectionReport:
    """Per-category counts plus optional raw boxes (category, rect, conf)."""

    counts: dict[str, int]
    boxes: list[tuple[str, tuple[int, int, int, int], float]] | None = None

    def count(self, category: str) -> int:
        return int(self.counts.get(category, 0))

    def to_dict(self) -> dict:
        out: dict = {"counts": {k: int(v) for k, v in self.counts.items()}}
        if self.boxes is not None:
            out["boxes"] = [
                {"category": c, "bbox": list(b), "confidence": conf}
                for c, b, conf in self.boxes
            ]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DetectionReport":
        boxes = None
        if data.get("boxes") is not None:
            boxes = [
                (str(item["category"]),
                 tuple(int(v) for v in item["bbox"]),
                 float(item.get("confidence", 1.0)))
                for item in data["boxes"]
            ]
        return cls(counts={str(k): int(v) for k, v in data["counts"].items()},
                   boxes=boxes)


@dataclass
class ScoreBreakdown:
    count_term: float
    aesthetic: float
    composite: float
    per_category: dict[str, float] = field(default_factory=dict)
    alpha: float = ALPHA_DEFAULT
    beta: float = BETA_DEFAULT

    def to_dict(self) -> dict:
        return {
            "count_term": self.count_term,
            "aesthetic": self.aesthetic,
            "composite": self.composite,
            "per_category": dict(self.per_category),
            "alpha": self.alpha,
            "beta": self.beta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreBreakdown":
        return cls(
            count_term=float(data["count_term"]),
            aesthetic=float(data["aesthetic"]),
            composite=float(data["composite"]),
            per_category={k: float(v) for k, v in data.get("per_category", {}).items()},
            alpha=float(data.get("alpha", ALPHA_DEFAULT)),
            beta=float(data.get("beta", BETA_DEFAULT)),
        )


def composite_score(detected: DetectionReport | dict, targets: dict[str, int],
                    s_a: float, alpha: float = ALPHA_DEFAULT,
                    beta: float = BETA_DEFAULT) -> ScoreBreakdown:
    """Blend count accuracy and aesthetics into one score.

    Categories missing from the detection count as zero; detected
    categories absent from the targets are ignored. Raises ConfigError on
    invalid weights or inputs.
    """
    if abs(alpha + beta - 1.0) > 1e-9:
        raise ConfigError(f"alpha + beta must be 1, got {alpha + beta!r}")
    if alpha < 0 or beta < 0:
        raise ConfigError("alpha and beta must be >= 0")
    if not targets:
        raise ConfigError("targets must be non-empty")
    if not 0.0 <= s_a <= 1.0:
        raise ConfigError(f"aesthetic score {s_a!r} outside [0, 1]")
    counts = detected.counts if isinstance(detected, DetectionReport) else detected
    per_category: dict[str, float] = {}
    for cat, gt in targets.items():
        if gt < 1:
            raise ConfigError(f"target count for {cat!r} must be >= 1")
        det = int(counts.get(cat, 0))
        per_category[cat] = max(0.0, 1.0 - abs(det - gt) / gt)
    count_term = sum(per_category.values()) / len(per_category)
    return ScoreBreakdown(
        count_term=count_term,
        aesthetic=float(s_a),
        composite=alpha * count_term + beta * s_a,
        per_category=per_category,
        alpha=alpha,
        beta=beta,
    )


def count_f1(detected: dict[str, int], targets: dict[str, int]) -> tuple[float, bool]:
    """Micro-averaged F1 over target categories, plus exact-match flag.

    Per category: TP = min(det, gt), FP = max(0, det - gt),
    FN = max(0, gt - det). Detected categories outside the targets are
    ignored.
    """
    if not targets:
        raise ConfigError("targets must be non-empty")
    tp = fp = fn = 0
    exact = True
    for cat, gt in targets.items():
        det = int(detected.get(cat, 0))
        tp += min(det, gt)
        fp += max(0, det - gt)
        fn += max(0, gt - det)
        if det != gt:
            exact = False
    if tp == 0:
        return 0.0, exact
    # micro F1 = 2PR/(P+R) with P = tp/(tp+fp), R = tp/(tp+fn); the single
    # division keeps the worked examples (28/29, 4/7) correctly rounded
    return 2 * tp / (2 * tp + fp + fn), exact


def termination_check(score: float, detected: dict[str, int],
                      targets: dict[str, int], threshold: float = THRESHOLD_DEFAULT,
                      inclusive: bool = False) -> bool:
    """True iff the composite score beats the threshold (strictly, unless
    the inclusive variant is requested) AND every category count matches its
    target exactly."""
    if not 0.0 < threshold <= 1.0:
        raise ConfigError(f"threshold {threshold!r} outside (0, 1]")
    passed = score >= threshold if inclusive else score > threshold
    if not passed:
        return False
    return all(int(detected.get(cat, 0)) == gt for cat, gt in targets.items())
