"""Command-line entry points: single runs and benchmark suites."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .backends import RemoteBackend, SimBackend, SimConfig
from .backends.remote import LlmCritic, LlmPlanner
from .bench import BenchSuite, gen_suite, run_bench, summary_text
from .errors import BackendError, CountLoopError
from .orchestrator import RunConfig, run as run_loop


def _run_options(fn):
    options = [
        click.option("--planner", type=click.Choice(["rule", "llm"]), default="rule",
                     show_default=True, help="Layout planner: deterministic rules or LLM."),
        click.option("--critic", type=click.Choice(["rule", "llm"]), default="rule",
                     show_default=True, help="Critic: programmatic or LLM."),
        click.option("--backend", "backend_kind", type=click.Choice(["sim", "remote"]),
                     default="sim", show_default=True),
        click.option("--remote-url", envvar="COUNTLOOP_BRIDGE_URL",
                     help="Bridge base URL (env COUNTLOOP_BRIDGE_URL)."),
        click.option("--llm-url", envvar="COUNTLOOP_LLM_URL",
                     help="Chat-completions base URL (env COUNTLOOP_LLM_URL)."),
        click.option("--llm-key", envvar="COUNTLOOP_LLM_KEY", default=None),
        click.option("--llm-model", default="qwen3", show_default=True),
        click.option("--max-iter", default=5, show_default=True),
        click.option("--threshold", default=0.85, show_default=True),
        click.option("--alpha", default=0.6, show_default=True),
        click.option("--beta", default=0.4, show_default=True),
        click.option("--seed", default=42, show_default=True),
        click.option("--res", "resolution", default=1024, show_default=True),
        click.option("--min-sep", default=8.0, show_default=True),
        click.option("--confidence", default=0.3, show_default=True),
        click.option("--merge-iou", default=0.10, show_default=True,
                     help="Sim backend: IoU above which instances fuse."),
        click.option("--drop-prob", default=0.0, show_default=True,
                     help="Sim backend: per-instance drop probability."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _build_config(opts) -> RunConfig:
    return RunConfig(
        alpha=opts["alpha"], beta=opts["beta"], threshold=opts["threshold"],
        max_iter=opts["max_iter"], seed=opts["seed"],
        resolution=opts["resolution"], detector_confidence=opts["confidence"],
        min_sep=opts["min_sep"],
    )


def _build_backend(opts):
    if opts["backend_kind"] == "remote":
        if not opts["remote_url"]:
            raise click.UsageError("--remote-url (or COUNTLOOP_BRIDGE_URL) is "
                                   "required with --backend remote")
        return RemoteBackend(opts["remote_url"], confidence=opts["confidence"])
    return SimBackend(SimConfig(merge_iou=opts["merge_iou"],
                                drop_prob=opts["drop_prob"]))


def _build_roles(opts):
    planner = critic = None
    if opts["planner"] == "llm" or opts["critic"] == "llm":
        if not opts["llm_url"]:
            raise click.UsageError("--llm-url (or COUNTLOOP_LLM_URL) is required "
                                   "for LLM planner/critic modes")
    if opts["planner"] == "llm":
        planner = LlmPlanner(opts["llm_url"], opts["llm_model"], api_key=opts["llm_key"])
    if opts["critic"] == "llm":
        critic = LlmCritic(opts["llm_url"], opts["llm_model"], api_key=opts["llm_key"])
    return planner, critic


@click.group()
def main():
    """Count-controlled scene generation with a critic-in-the-loop."""


@main.command("run")
@click.option("--prompt", required=True, help="Scene prompt, e.g. '50 oranges in a bowl'.")
@click.option("--out", "out_dir", type=click.Path(path_type=Path), default=None,
              help="Directory for run.json, trajectory.jsonl, iter_<k>.png.")
@_run_options
def run_command(prompt, out_dir, **opts):
    """Run the refinement loop for one prompt."""
    config = _build_config(opts)
    backend = _build_backend(opts)
    planner, critic = _build_roles(opts)
    try:
        report = run_loop(prompt, config, backend, out_dir=out_dir,
                          planner=planner, critic_llm=critic)
    except BackendError as exc:
        raise click.ClickException(f"backend failure: {exc}")
    except CountLoopError as exc:
        raise click.ClickException(str(exc))
    accepted = report.accepted
    click.echo(f"prompt:      {prompt}")
    click.echo(f"targets:     {report.prompt_spec.targets}")
    click.echo(f"iterations:  {len(report.iterations)}")
    click.echo(f"converged:   {report.converged}")
    click.echo(f"accepted:    iteration {report.accepted_index}, "
               f"counts {accepted.detection.counts}")
    if accepted.score is not None:
        click.echo(f"score:       S={accepted.score.composite:.4f} "
                   f"(count={accepted.score.count_term:.4f}, "
                   f"aesthetic={accepted.score.aesthetic:.4f})")
    if out_dir is not None:
        click.echo(f"report:      {Path(out_dir) / 'run.json'}")


@main.group()
def bench():
    """Benchmark suite generation and execution."""


@bench.command("gen")
@click.option("--kind", type=click.Choice(["S", "M"]), required=True)
@click.option("--categories-file", type=click.Path(exists=True, path_type=Path),
              default=None, help="One category per line; defaults to the bundled list.")
@click.option("--count-min", default=30, show_default=True)
@click.option("--count-max", default=200, show_default=True)
@click.option("-n", "--n-prompts", default=200, show_default=True)
@click.option("--seed", default=42, show_default=True)
@click.option("--out", "out_file", type=click.Path(path_type=Path), required=True)
def bench_gen(kind, categories_file, count_min, count_max, n_prompts, seed, out_file):
    """Generate a suite JSONL file."""
    categories = None
    if categories_file is not None:
        categories = [ln.strip() for ln in categories_file.read_text().splitlines()
                      if ln.strip()]
    try:
        suite = gen_suite(kind, categories, count_min, count_max, n_prompts, seed)
    except CountLoopError as exc:
        raise click.ClickException(str(exc))
    suite.save(out_file)
    click.echo(f"wrote {len(suite.prompts)} prompts to {out_file}")


@bench.command("run")
@click.option("--suite", "suite_file", type=click.Path(exists=True, path_type=Path),
              required=True)
@click.option("--parallelism", default=1, show_default=True)
@click.option("--out", "out_dir", type=click.Path(path_type=Path), required=True)
@_run_options
def bench_run(suite_file, parallelism, out_dir, **opts):
    """Run a suite and write per-run reports plus summary.json/summary.txt."""
    config = _build_config(opts)
    backend = _build_backend(opts)
    planner, critic = _build_roles(opts)
    try:
        suite = BenchSuite.load(suite_file)
        summary = run_bench(suite, config, backend, parallelism=parallelism,
                            out_dir=out_dir, planner=planner, critic_llm=critic)
    except CountLoopError as exc:
        raise click.ClickException(str(exc))
    click.echo(summary_text(summary["aggregates"]), nl=False)
    click.echo(f"reports under {out_dir}")


if __name__ == "__main__":
    sys.exit(main())
