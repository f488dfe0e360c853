"""The refinement loop: graph -> layout -> generate -> score -> refine.

One run builds the planning graph once, then iterates layout realization,
generation, detection, scoring, and critic-driven graph edits until the
composite score beats the threshold with exact per-category counts, or the
iteration budget runs out. The full trajectory is recorded and optionally
persisted as run.json + trajectory.jsonl + iter_<k>.png.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .critic import CriticReport, decode_report, imgrad, override_counts, programmatic_critic
from .errors import BackendError, ConfigError
from .graph import (
    GraphEdit, PlanningGraph, apply_edits, build_graph, decode_edit, decode_graph,
    encode_edit, encode_graph, graph_to_prompt,
)
from .layout import Layout, realize_layout, relax_overlaps
from .prompting import PromptSpec, parse_prompt
from .scoring import (
    ALPHA_DEFAULT, BETA_DEFAULT, CONFIDENCE_DEFAULT, DetectionReport,
    ScoreBreakdown, THRESHOLD_DEFAULT, composite_score, termination_check,
)


@dataclass
class RunConfig:
    alpha: float = ALPHA_DEFAULT
    beta: float = BETA_DEFAULT
    threshold: float = THRESHOLD_DEFAULT
    max_iter: int = 5
    seed: int = 42
    resolution: int = 1024
    detector_confidence: float = CONFIDENCE_DEFAULT
    min_sep: float = 8.0
    inclusive_threshold: bool = False   # use S >= threshold instead of S >

    def __post_init__(self):
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ConfigError(f"alpha + beta must be 1, got {self.alpha + self.beta!r}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.resolution < 64:
            raise ConfigError("resolution must be >= 64")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError("threshold must be in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha, "beta": self.beta, "threshold": self.threshold,
            "max_iter": self.max_iter, "seed": self.seed,
            "resolution": self.resolution,
            "detector_confidence": self.detector_confidence,
            "min_sep": self.min_sep,
            "inclusive_threshold": self.inclusive_threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return cls(**data)


@dataclass
class IterationRecord:
    index: int
    graph: PlanningGraph
    layout: Layout
    detection: DetectionReport
    score: ScoreBreakdown | None
    aesthetic: float | None
    critic: CriticReport | None
    edits: list[GraphEdit] = field(default_factory=list)
    image_ref: str | None = None

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "graph": encode_graph(self.graph),
            "layout": self.layout.to_dict(),
            "detection": self.detection.to_dict(),
            "score": None if self.score is None else self.score.to_dict(),
            "aesthetic": self.aesthetic,
            "critic": None if self.critic is None else self.critic.to_dict(),
            "edits": [encode_edit(e) for e in self.edits],
            "image": self.image_ref,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IterationRecord":
        return cls(
            index=int(data["index"]),
            graph=decode_graph(data["graph"]),
            layout=Layout.from_dict(data["layout"]),
            detection=DetectionReport.from_dict(data["detection"]),
            score=None if data.get("score") is None else ScoreBreakdown.from_dict(data["score"]),
            aesthetic=data.get("aesthetic"),
            critic=None if data.get("critic") is None else decode_report(data["critic"]),
            edits=[decode_edit(e) for e in data.get("edits", [])],
            image_ref=data.get("image"),
        )


@dataclass
class RunReport:
    config: RunConfig
    prompt: str
    prompt_spec: PromptSpec
    iterations: list[IterationRecord]
    accepted_index: int
    converged: bool

    @property
    def accepted(self) -> IterationRecord:
        return self.iterations[self.accepted_index]

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "prompt": self.prompt,
            "prompt_spec": self.prompt_spec.to_dict(),
            "iterations": [it.to_dict() for it in self.iterations],
            "accepted_index": self.accepted_index,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        return cls(
            config=RunConfig.from_dict(data["config"]),
            prompt=data["prompt"],
            prompt_spec=PromptSpec.from_dict(data["prompt_spec"], raw=data["prompt"]),
            iterations=[IterationRecord.from_dict(it) for it in data["iterations"]],
            accepted_index=int(data["accepted_index"]),
            converged=bool(data["converged"]),
        )


def derive_seed(base: int, *tags) -> int:
    """Deterministic per-purpose seed derivation from the run seed."""
    entropy = [int(base) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, str):
            entropy.extend(tag.encode("utf-8"))
        else:
            entropy.append(int(tag) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _accepted_index(iterations: list[IterationRecord]) -> int:
    best, best_score = 0, -1.0
    for it in iterations:
        s = it.score.composite if it.score is not None else -1.0
        if s > best_score:
            best, best_score = it.index, s
    return best


def run(prompt: str, config: RunConfig, backend, out_dir: str | Path | None = None,
        planner=None, critic_llm=None) -> RunReport:
    """Execute the full refinement loop for one prompt.

    backend provides generate/detect/aesthetic (see countloop.backends).
    planner, when given, replaces the deterministic fallback planner with an
    LLM layout designer; critic_llm likewise replaces the programmatic
    critic (its count fields are overwritten by the detector before edits
    are derived). Identical (prompt, config, deterministic backend) inputs
    produce byte-identical persisted reports.
    """
    spec = parse_prompt(prompt)
    targets = spec.targets
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    iterations: list[IterationRecord] = []

    def partial() -> RunReport:
        return RunReport(
            config=config, prompt=prompt, prompt_spec=spec,
            iterations=iterations,
            accepted_index=_accepted_index(iterations) if iterations else 0,
            converged=False,
        )

    if planner is not None:
        try:
            graph = planner.plan(spec)
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"planner failed: {exc}", partial_report=partial()) from exc
    else:
        graph = build_graph(spec, seed=derive_seed(config.seed, "build"))

    prompt_d = spec.raw
    prompt_bg = spec.context or ""
    converged = False

    for index in range(config.max_iter):
        layout = realize_layout(graph, config.resolution)
        layout = relax_overlaps(layout, min_sep=config.min_sep)

        try:
            image, manifest = backend.generate(
                layout, prompt_d, prompt_bg, seed=derive_seed(config.seed, "gen", index),
            )
            detection = backend.detect(
                image, manifest, list(targets), confidence=config.detector_confidence,
            )
            s_a = backend.aesthetic(layout, image)
        except BackendError as exc:
            raise BackendError(str(exc), partial_report=partial()) from exc
        except Exception as exc:
            raise BackendError(f"backend call failed: {exc}",
                               partial_report=partial()) from exc

        score = None
        if s_a is not None:
            score = composite_score(detection, targets, s_a,
                                    alpha=config.alpha, beta=config.beta)

        image_ref = None
        if out_path is not None:
            image_ref = f"iter_{index}.png"
            (out_path / image_ref).write_bytes(image.to_png())

        record = IterationRecord(
            index=index, graph=graph, layout=layout, detection=detection,
            score=score, aesthetic=s_a, critic=None, edits=[], image_ref=image_ref,
        )
        iterations.append(record)

        if score is not None and termination_check(
                score.composite, detection.counts, targets,
                config.threshold, config.inclusive_threshold):
            converged = True
            break

        if critic_llm is not None:
            try:
                report = critic_llm.review(
                    prompt, graph, layout, dict(detection.counts), dict(targets),
                    s_a if s_a is not None else 0.0,
                    score.composite if score is not None else 0.0,
                )
            except Exception as exc:
                raise BackendError(f"critic failed: {exc}",
                                   partial_report=partial()) from exc
            report = override_counts(report, detection, targets, layout)
        else:
            report = programmatic_critic(
                layout, detection, targets,
                s_a=s_a if s_a is not None else 0.0,
                score=score.composite if score is not None else 0.0,
                min_sep=config.min_sep, threshold=config.threshold,
                inclusive=config.inclusive_threshold,
            )
        edits = imgrad(
            graph, report, min_sep=config.min_sep,
            resolution=config.resolution, seed=derive_seed(config.seed, "jitter", index),
        )
        graph = apply_edits(graph, edits, resolution=config.resolution)
        record.critic = report
        record.edits = edits

    report = RunReport(
        config=config, prompt=prompt, prompt_spec=spec, iterations=iterations,
        accepted_index=_accepted_index(iterations), converged=converged,
    )
    if out_path is not None:
        persist_report(report, out_path)
    return report


def report_json(report: RunReport) -> str:
    return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"


def persist_report(report: RunReport, out_dir: str | Path) -> None:
    """Write run.json (full report) and trajectory.jsonl (one iteration per
    line); per-iteration PNGs are written during the run."""
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    (out_path / "run.json").write_text(report_json(report))
    with open(out_path / "trajectory.jsonl", "w") as fh:
        for it in report.iterations:
            fh.write(json.dumps(it.to_dict(), sort_keys=True) + "\n")


def load_report(path: str | Path) -> RunReport:
    data = json.loads(Path(path).read_text())
    return RunReport.from_dict(data)


def graph_prompt_for(report: RunReport, index: int) -> str:
    """Text rendering of the planning graph at a given iteration."""
    return graph_to_prompt(report.iterations[index].graph)
