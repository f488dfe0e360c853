"""Benchmark suites: generation, execution, and aggregate metrics.

Suites are JSONL files with one record per line: {"prompt", "targets",
"kind"}. Loading re-parses every prompt and fails loudly if the stored
targets no longer match, so suite files are self-validating.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, CountLoopError
from .orchestrator import RunConfig, RunReport, run
from .prompting import parse_prompt, pluralize_phrase
from .scoring import count_f1

BUCKETS = ((1, 10, "1-10"), (11, 50, "11-50"), (51, 100, "51-100"),
           (101, 10**9, "101+"))


def default_categories() -> list[str]:
    text = resources.files("countloop.data").joinpath("categories.txt").read_text()
    return [line.strip() for line in text.splitlines() if line.strip()]


def default_contexts() -> list[str]:
    text = resources.files("countloop.data").joinpath("contexts.txt").read_text()
    return [line.strip() for line in text.splitlines() if line.strip()]


@dataclass
class BenchPrompt:
    prompt: str
    targets: dict[str, int]
    kind: str

    def total(self) -> int:
        return sum(self.targets.values())


@dataclass
class BenchSuite:
    name: str
    prompts: list[BenchPrompt]
    provenance: dict = field(default_factory=dict)

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            for p in self.prompts:
                fh.write(json.dumps(
                    {"prompt": p.prompt, "targets": p.targets, "kind": p.kind},
                    sort_keys=True,
                ) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "BenchSuite":
        path = Path(path)
        prompts = []
        with open(path) as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                item = BenchPrompt(
                    prompt=record["prompt"],
                    targets={str(k): int(v) for k, v in record["targets"].items()},
                    kind=record.get("kind", "S"),
                )
                reparsed = parse_prompt(item.prompt).targets
                if reparsed != item.targets:
                    raise ConfigError(
                        f"{path}:{line_no}: prompt no longer parses to stored "
                        f"targets ({reparsed} != {item.targets})"
                    )
                prompts.append(item)
        if not prompts:
            raise ConfigError(f"{path}: empty suite")
        return cls(name=path.stem, prompts=prompts)


def _phrase(count: int, category: str) -> str:
    noun = pluralize_phrase(category) if count != 1 else category
    return f"{count} {noun}"


def gen_suite(kind: str, categories: list[str] | None = None,
              count_min: int = 30, count_max: int = 200,
              n_prompts: int = 200, seed: int = 42) -> BenchSuite:
    """Generate an S (single category) or M (2-3 categories) suite with
    counts uniform in [count_min, count_max] and bundled scene contexts.
    Every generated prompt is round-trip checked against the parser."""
    if kind not in ("S", "M"):
        raise ConfigError(f"suite kind must be S or M, got {kind!r}")
    if count_min < 1 or count_max < count_min:
        raise ConfigError(f"bad count range [{count_min}, {count_max}]")
    if n_prompts < 1:
        raise ConfigError("n_prompts must be >= 1")
    categories = default_categories() if categories is None else list(categories)
    if not categories:
        raise ConfigError("category list is empty")
    contexts = default_contexts()
    rng = np.random.default_rng(seed)

    prompts: list[BenchPrompt] = []
    for _ in range(n_prompts):
        context = contexts[rng.integers(len(contexts))]
        if kind == "S":
            cat = categories[rng.integers(len(categories))]
            count = int(rng.integers(count_min, count_max + 1))
            targets = {cat: count}
            body = _phrase(count, cat)
        else:
            k = min(int(rng.integers(2, 4)), len(categories))
            picked = [categories[i] for i in rng.choice(len(categories), size=k, replace=False)]
            targets = {c: int(rng.integers(count_min, count_max + 1)) for c in picked}
            parts = [_phrase(n, c) for c, n in targets.items()]
            body = ", ".join(parts[:-1]) + " and " + parts[-1] if len(parts) > 2 \
                else " and ".join(parts)
        text = f"A photo of {body} {context}"
        reparsed = parse_prompt(text).targets
        if reparsed != targets:
            raise ConfigError(
                f"generated prompt does not round-trip: {text!r} -> {reparsed}"
            )
        prompts.append(BenchPrompt(prompt=text, targets=targets, kind=kind))
    return BenchSuite(
        name=f"countbench-{kind.lower()}",
        prompts=prompts,
        provenance={
            "kind": kind, "categories": categories, "count_min": count_min,
            "count_max": count_max, "n_prompts": n_prompts, "seed": seed,
        },
    )


def _bucket(total: int) -> str:
    for lo, hi, label in BUCKETS:
        if lo <= total <= hi:
            return label
    return BUCKETS[-1][2]


def _run_record(index: int, item: BenchPrompt, report: RunReport | None,
                runtime_s: float, error: str | None) -> dict:
    record = {
        "index": index,
        "prompt": item.prompt,
        "targets": dict(item.targets),
        "bucket": _bucket(item.total()),
        "runtime_s": runtime_s,
        "failed": error is not None,
        "error": error,
    }
    if report is not None:
        accepted = report.accepted
        f1, exact = count_f1(accepted.detection.counts, item.targets)
        record.update({
            "converged": report.converged,
            "iterations": len(report.iterations),
            "counts": dict(accepted.detection.counts),
            "aesthetic": accepted.aesthetic,
            "composite": None if accepted.score is None else accepted.score.composite,
            "f1": f1,
            "exact": exact,
        })
    return record


def compute_aggregates(records: list[dict]) -> dict:
    """Aggregate metrics over per-run records; failed runs are excluded from
    the means but counted. Micro-F1 pools TP/FP/FN across runs."""
    ok = [r for r in records if not r["failed"]]
    tp = fp = fn = 0
    for r in ok:
        for cat, gt in r["targets"].items():
            det = int(r["counts"].get(cat, 0))
            tp += min(det, gt)
            fp += max(0, det - gt)
            fn += max(0, gt - det)
    micro_f1 = 2 * tp / (2 * tp + fp + fn) if tp > 0 else 0.0
    exact_n = sum(1 for r in ok if r["exact"])
    converged = [r for r in ok if r.get("converged")]
    aesthetics = [r["aesthetic"] for r in ok if r.get("aesthetic") is not None]

    runtime_buckets = {}
    for _, _, label in BUCKETS:
        times = [r["runtime_s"] for r in ok if r["bucket"] == label]
        if times:
            arr = np.asarray(times)
            runtime_buckets[label] = {
                "n": len(times),
                "mean_s": float(arr.mean()),
                "std_s": float(arr.std()),
            }
    return {
        "runs": len(records),
        "failures": len(records) - len(ok),
        "micro_f1": micro_f1,
        "accuracy": (exact_n / len(ok)) if ok else 0.0,
        "mean_aesthetic": (sum(aesthetics) / len(aesthetics)) if aesthetics else None,
        "mean_iterations_to_converge":
            (sum(r["iterations"] for r in converged) / len(converged))
            if converged else None,
        "converged": len(converged),
        "runtime_buckets": runtime_buckets,
    }


def summary_text(aggregates: dict) -> str:
    lines = []
    lines.append(f"{'runs':<28}{aggregates['runs']}")
    lines.append(f"{'failures':<28}{aggregates['failures']}")
    lines.append(f"{'converged':<28}{aggregates['converged']}")
    lines.append(f"{'micro F1':<28}{aggregates['micro_f1']:.4f}")
    lines.append(f"{'exact-match accuracy':<28}{aggregates['accuracy']:.4f}")
    mean_sa = aggregates["mean_aesthetic"]
    lines.append(f"{'mean aesthetic':<28}"
                 + (f"{mean_sa:.4f}" if mean_sa is not None else "n/a"))
    iters = aggregates["mean_iterations_to_converge"]
    lines.append(f"{'mean iters to converge':<28}"
                 + (f"{iters:.2f}" if iters is not None else "n/a"))
    lines.append("")
    lines.append(f"{'instances':<12}{'n':>6}{'mean s':>12}{'std s':>12}")
    for label, stats in aggregates["runtime_buckets"].items():
        lines.append(f"{label:<12}{stats['n']:>6}"
                     f"{stats['mean_s']:>12.3f}{stats['std_s']:>12.3f}")
    return "\n".join(lines) + "\n"


def run_bench(suite: BenchSuite, config: RunConfig, backend,
              parallelism: int = 1, out_dir: str | Path | None = None,
              planner=None, critic_llm=None) -> dict:
    """Run every suite prompt through the loop; per-run seed is
    config.seed + index so results are identical at any parallelism."""
    if not suite.prompts:
        raise ConfigError("empty suite")
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    def one(index_item) -> dict:
        index, item = index_item
        cfg = RunConfig(**{**config.to_dict(), "seed": config.seed + index})
        run_out = out_path / f"run_{index:04d}" if out_path is not None else None
        started = time.perf_counter()
        try:
            report = run(item.prompt, cfg, backend, out_dir=run_out,
                         planner=planner, critic_llm=critic_llm)
            error = None
        except CountLoopError as exc:
            report, error = None, f"{type(exc).__name__}: {exc}"
        runtime = time.perf_counter() - started
        return _run_record(index, item, report, runtime, error)

    work = list(enumerate(suite.prompts))
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(one, work))
    else:
        records = [one(w) for w in work]
    records.sort(key=lambda r: r["index"])

    summary = {
        "suite": suite.name,
        "config": config.to_dict(),
        "aggregates": compute_aggregates(records),
        "runs": records,
    }
    if out_path is not None:
        (out_path / "summary.json").write_text(
            json.dumps(summary, sort_keys=True, indent=2) + "\n")
        (out_path / "summary.txt").write_text(summary_text(summary["aggregates"]))
    return summary


def recompute_summary(out_dir: str | Path) -> dict:
    """Rebuild aggregate metrics from the persisted per-run run.json files;
    must equal the stored summary.json aggregates (modulo runtimes)."""
    out_path = Path(out_dir)
    stored = json.loads((out_path / "summary.json").read_text())
    records = []
    for rec in stored["runs"]:
        if rec["failed"]:
            records.append(rec)
            continue
        run_json = out_path / f"run_{rec['index']:04d}" / "run.json"
        data = json.loads(run_json.read_text())
        accepted = data["iterations"][data["accepted_index"]]
        targets = {k: int(v) for k, v in data["prompt_spec"]["targets"].items()}
        f1, exact = count_f1(accepted["detection"]["counts"], targets)
        records.append({
            **rec,
            "targets": targets,
            "counts": accepted["detection"]["counts"],
            "converged": data["converged"],
            "iterations": len(data["iterations"]),
            "aesthetic": accepted["aesthetic"],
            "f1": f1,
            "exact": exact,
        })
    return compute_aggregates(records)
