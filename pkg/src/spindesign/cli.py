"""Command-line interface.

Subcommands cover the full workflow: describe a dataset, draw a sample
plan, train and compare models, run an inverse search against a target
diameter, render a report, and serve the HTTP API. Every command that
draws random numbers takes --seed.
"""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .bundle import ModelBundle, load_bundle, save_bundle
from .chemistry import StrictnessPolicy, bundled_feasibility, load_feasibility
from .dataset import describe, load_dataset, summaries_to_delimited
from .evaluation import (
    report_from_json,
    report_to_delimited,
    report_to_json,
    run_benchmark,
    select_best,
    split_rows,
)
from .imc import ImcConfig, run_imc, summary_from_json, summary_to_json
from .interpret import permutation_importance, residual_diagnostics
from .learners import LEARNER_KINDS
from .pipeline import RecipeConfig
from .report import (
    dataset_section,
    diagnostics_section,
    imc_section,
    importance_section,
    metrics_section,
    render_html,
    render_text,
)
from .sampling import (
    SAMPLING_METHODS,
    balanced_sobol_doptimal,
    export_plan,
    sample_random,
    sobol_doptimal_sample,
)
from .synthetic import write_fixture

_FOLD_CHOICES = ("3", "5", "10")


def _fail(message: str) -> "click.ClickException":
    return click.ClickException(message)


def _load(path: str):
    try:
        return load_dataset(path)
    except ValueError as exc:
        raise _fail(f"could not load {path}: {exc}")


def _fingerprint(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _parse_learners(raw: str) -> list[str]:
    kinds = [item.strip() for item in raw.split(",") if item.strip()]
    unknown = [k for k in kinds if k not in LEARNER_KINDS]
    if unknown:
        raise click.BadParameter(
            f"unknown learners {unknown}; choose from {', '.join(LEARNER_KINDS)}"
        )
    if not kinds:
        raise click.BadParameter("need at least one learner")
    return kinds


def _tables(solubility: str | None, incompatibility: str | None):
    if solubility:
        try:
            return load_feasibility(solubility, incompatibility)
        except ValueError as exc:
            raise _fail(str(exc))
    return bundled_feasibility()


@click.group()
@click.version_option(version=__version__, prog_name="spindesign")
def main():
    """Fiber-diameter models and inverse process design for electrospinning."""


@main.command("describe")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--export", "export_path", type=click.Path(dir_okay=False), default=None,
              help="Also write the summary table to this CSV/TSV file.")
def describe_cmd(dataset, export_path):
    """Per-polymer diameter summary statistics."""
    ds = _load(dataset)
    summaries = describe(ds)
    click.echo(summaries_to_delimited(summaries, sep="\t").rstrip("\n"))
    report = ds.report
    click.echo(
        f"\nrows kept: {report.rows_out}/{report.rows_in}"
        + (f", dropped: {dict(report.drops)}" if report.total_dropped else "")
    )
    if export_path:
        sep = "\t" if export_path.endswith(".tsv") else ","
        Path(export_path).write_text(summaries_to_delimited(summaries, sep=sep))
        click.echo(f"summary written to {export_path}")


@main.command("sample")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(SAMPLING_METHODS), default="random", show_default=True)
@click.option("-n", "--size", type=int, required=True, help="Rows to select.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--oversample", type=float, default=2.62, show_default=True,
              help="Candidate pool factor for the structured methods.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True,
              help="Plan file (.csv or .tsv).")
def sample_cmd(dataset, method, size, seed, oversample, out_path):
    """Draw a training-row plan and save it with its provenance."""
    ds = _load(dataset)
    try:
        if method == "random":
            rows = sample_random(ds, size, seed=seed)
            frame = ds.frame.iloc[rows].drop(columns=[])
            click.echo(f"selected {len(rows)} rows uniformly at random")
        elif method == "sobol_doptimal":
            design = sobol_doptimal_sample(ds, size, oversample_factor=oversample, seed=seed)
            frame = design.frame
            click.echo(
                f"generated {design.generated} candidates, "
                f"discarded {design.discarded_infeasible} implausible, "
                f"selected {len(design.frame)}"
                + (
                    f" (criterion {design.selection.criterion:.4g})"
                    if design.selection
                    else ""
                )
            )
        else:
            design = balanced_sobol_doptimal(ds, size, oversample_factor=oversample, seed=seed)
            frame = design.frame
            alloc = design.allocation
            click.echo(f"budgets: {alloc.allocations}")
            if alloc.capped:
                click.echo(f"capped at availability: {alloc.capped}")
    except ValueError as exc:
        raise _fail(str(exc))
    export_plan(
        frame,
        out_path,
        method=method,
        seed=seed,
        params={"n": size, "oversample": oversample, "dataset": Path(dataset).name},
    )
    click.echo(f"plan written to {out_path}")


@main.command("train")
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--method", type=click.Choice(SAMPLING_METHODS), default="random", show_default=True)
@click.option("-n", "--train-size", type=int, default=None,
              help="Training rows to select from the pool (default: all).")
@click.option("--learners", default="linear,knn,random_forest", show_default=True,
              help="Comma-separated learner kinds.")
@click.option("--folds", type=click.Choice(_FOLD_CHOICES), default="5", show_default=True)
@click.option("--test-fraction", type=float, default=0.30, show_default=True)
@click.option("--pca", "pca_components", type=int, default=None,
              help="Keep this many principal components (off by default).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default="model.bundle",
              show_default=True)
@click.option("--report-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the comparison table as CSV.")
def train_cmd(dataset, method, train_size, learners, folds, test_fraction, pca_components,
              seed, out_path, report_out):
    """Compare learners under one sampling method and save the winner."""
    kinds = _parse_learners(learners)
    ds = _load(dataset)
    config = RecipeConfig(pca_components=pca_components)
    try:
        result = run_benchmark(
            ds,
            methods=[method],
            learner_kinds=kinds,
            n_train=train_size,
            test_fraction=test_fraction,
            k=int(folds),
            seed=seed,
            recipe_config=config,
        )
    except ValueError as exc:
        raise _fail(str(exc))
    report = result.report
    best_idx = select_best(report)
    click.echo(report_to_delimited(report, sep="\t").rstrip("\n"))
    best = report.rows[best_idx]
    click.echo(f"\nwinner: {best.learner} ({best.method}), test RMSE {best.test.rmse:.2f}")

    artifact = result.artifacts[(best.method, best.learner)]
    metadata = {
        "tool": f"spindesign {__version__}",
        "dataset_fingerprint": _fingerprint(dataset),
        "dataset_rows": int(len(ds.frame)),
        "config": {
            "method": method,
            "learners": kinds,
            "n_train": train_size,
            "test_fraction": test_fraction,
            "k": int(folds),
            "seed": seed,
            "pca_components": pca_components,
        },
        "winner": {"learner": best.learner, "params": best.params, "method": best.method},
        "eval_report": report_to_json(report),
        "test_positions": [int(i) for i in result.test_positions],
    }
    bundle = ModelBundle(recipe=artifact.recipe, learner=artifact.learner, metadata=metadata)
    save_bundle(bundle, out_path)
    click.echo(f"model bundle written to {out_path}")
    if report_out:
        Path(report_out).write_text(report_to_delimited(report))
        click.echo(f"comparison table written to {report_out}")


@main.command("imc")
@click.argument("bundle_path", metavar="BUNDLE", type=click.Path(exists=True, dir_okay=False))
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(("experimental", "optimization")), required=True)
@click.option("--polymer", required=True)
@click.option("--target", type=float, required=True, help="Target diameter (nm).")
@click.option("--tolerance", type=float, required=True, help="Half-width of the success band (nm).")
@click.option("-n", "--draws", type=int, default=10000, show_default=True)
@click.option("--strictness", type=click.Choice(("strict", "balanced", "lax")), default="balanced",
              show_default=True)
@click.option("--no-allow-pct", type=float, default=0.0, show_default=True,
              help="Trace percentage allowed for insoluble-rated solvents.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--top", "top_k", type=int, default=20, show_default=True)
@click.option("--solubility", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Override the bundled solubility table.")
@click.option("--incompatibility", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--draws-out", type=click.Path(dir_okay=False), default=None,
              help="Write the full draw table as CSV.")
@click.option("--json-out", type=click.Path(dir_okay=False), default=None,
              help="Write the summary (and top candidates) as JSON.")
def imc_cmd(bundle_path, dataset, mode, polymer, target, tolerance, draws, strictness,
            no_allow_pct, seed, top_k, solubility, incompatibility, draws_out, json_out):
    """Search process settings whose predicted diameter hits the target band."""
    bundle = _load_bundle(bundle_path)
    ds = _load(dataset)
    tables = _tables(solubility, incompatibility)
    try:
        config = ImcConfig(
            mode=mode,
            polymer=polymer,
            target=target,
            tolerance=tolerance,
            n_simulations=draws,
            policy=StrictnessPolicy(strictness, no_allow_pct=no_allow_pct),
            seed=seed,
            top_k=top_k,
        )
        run = run_imc(config, bundle, ds, tables)
    except ValueError as exc:
        raise _fail(str(exc))
    section = imc_section(run.summary, run.top)
    click.echo(render_text("Inverse search", [section]).rstrip("\n"))
    if draws_out:
        run.draws.to_csv(draws_out, index=False)
        click.echo(f"draw table written to {draws_out}")
    if json_out:
        Path(json_out).write_bytes(summary_to_json(run.summary, run.top))
        click.echo(f"summary written to {json_out}")


def _load_bundle(path: str) -> ModelBundle:
    try:
        return load_bundle(path)
    except ValueError as exc:
        raise _fail(f"could not load bundle {path}: {exc}")


@main.command("report")
@click.argument("bundle_path", metavar="BUNDLE", type=click.Path(exists=True, dir_okay=False))
@click.argument("dataset", type=click.Path(exists=True, dir_okay=False))
@click.option("--imc-json", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Embed a summary saved by `imc --json-out`.")
@click.option("--format", "fmt", type=click.Choice(("text", "html")), default="text",
              show_default=True)
@click.option("--importance-repeats", type=int, default=3, show_default=True,
              help="Permutation repeats (0 disables the importance section).")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None,
              help="Write to file instead of stdout.")
def report_cmd(bundle_path, dataset, imc_json, fmt, importance_repeats, out_path):
    """Render a full run report for a saved model."""
    bundle = _load_bundle(bundle_path)
    ds = _load(dataset)
    sections = [dataset_section(describe(ds))]
    meta = bundle.metadata

    if "eval_report" in meta:
        sections.append(metrics_section(report_from_json(meta["eval_report"])))

    same_data = meta.get("dataset_fingerprint") == _fingerprint(dataset)
    if same_data and meta.get("test_positions"):
        rows = ds.frame.iloc[meta["test_positions"]]
    else:
        rows = ds.frame
    y = rows["fiber_diameter"].to_numpy(dtype=float)
    try:
        predictions = bundle.predict_rows(rows)
    except ValueError as exc:
        raise _fail(f"model cannot score this dataset: {exc}")
    diag = residual_diagnostics(y, predictions)
    diag_sec = diagnostics_section(diag)
    if not same_data:
        diag_sec.lines.append("note: dataset differs from the training file; scored all rows")
    sections.append(diag_sec)

    if importance_repeats > 0:
        sections.append(
            importance_section(permutation_importance(bundle, rows, repeats=importance_repeats))
        )

    if imc_json:
        summary, top = summary_from_json(Path(imc_json).read_bytes())
        sections.append(imc_section(summary, top))

    title = "Electrospinning model report"
    output = render_html(title, sections) if fmt == "html" else render_text(title, sections)
    if out_path:
        Path(out_path).write_text(output)
        click.echo(f"report written to {out_path}")
    else:
        click.echo(output)


@main.command("demo-data")
@click.argument("out", type=click.Path(dir_okay=False))
@click.option("-n", "--rows", type=int, default=500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--noise", type=float, default=0.10, show_default=True)
def demo_data_cmd(out, rows, seed, noise):
    """Write a synthetic dataset with a known response law."""
    write_fixture(out, rows, seed=seed, noise=noise)
    click.echo(f"wrote {rows} synthetic rows to {out}")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for uploaded datasets, models, and exports.")
@click.option("--ui-dir", type=click.Path(file_okay=False, exists=True), default=None,
              help="Static web UI to mount at /ui (e.g. the built frontend/).")
def serve_cmd(host, port, data_dir, ui_dir):
    """Run the HTTP API (loopback by default)."""
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(data_dir, ui_dir=ui_dir), host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
