"""Plain-text and HTML run reports.

A report is an ordered list of titled sections, each holding preformatted
lines. Builders turn the main artifacts (dataset summary, benchmark
table, residual flags, importance ranking, inverse-search summary) into
sections; renderers emit text or a small self-contained HTML page.
"""

from __future__ import annotations

import html
from dataclasses import dataclass

from .dataset import PolymerSummary, summaries_to_delimited
from .evaluation import EvalReport
from .imc import ImcSummary, TopCandidate
from .interpret import ImportanceReport, ResidualDiagnostics


@dataclass
class ReportSection:
    title: str
    lines: list[str]


def dataset_section(summaries: list[PolymerSummary]) -> ReportSection:
    table = summaries_to_delimited(summaries, sep="\t").rstrip("\n").split("\n")
    return ReportSection(title="Dataset", lines=table)


def metrics_section(report: EvalReport) -> ReportSection:
    lines = [
        f"hold-out rows: {report.n_test} (fraction {report.test_fraction:g}), "
        f"{report.k}-fold CV, seed {report.seed}",
        "method\tlearner\tparams\ttest_rmse\tcv_rmse\td_rmse\ttest_r2\tcv_r2",
    ]
    for row in report.rows:
        test_rmse = f"{row.test.rmse:.2f}" if row.test else "-"
        test_r2 = f"{row.test.r2:.4f}" if row.test and row.test.r2_defined else "-"
        d_rmse = f"{row.deltas['rmse']:+.2f}" if row.deltas else "-"
        cv_r2 = f"{row.cv.r2:.4f}" if row.cv.r2_defined else "-"
        params = ";".join(f"{k}={v}" for k, v in sorted(row.params.items())) or "default"
        lines.append(
            f"{row.method}\t{row.learner}\t{params}\t{test_rmse}\t"
            f"{row.cv.rmse:.2f}\t{d_rmse}\t{test_r2}\t{cv_r2}"
        )
    return ReportSection(title="Metrics", lines=lines)


def diagnostics_section(diag: ResidualDiagnostics) -> ReportSection:
    lines = [
        f"residual trend slope: {diag.slope:+.4f}",
        f"variance ratio (high/low fitted half): {diag.variance_ratio:.2f}",
        f"largest tail deviation: {diag.tail_deviation_ses:.2f} standard errors",
        "flags: " + (", ".join(diag.flags) if diag.flags else "none"),
    ]
    return ReportSection(title="Diagnostics", lines=lines)


def importance_section(report: ImportanceReport) -> ReportSection:
    lines = [
        f"baseline RMSE {report.baseline_rmse:.2f}, {report.repeats} repeats, seed {report.seed}",
        "rank\tfeature\tscore",
    ]
    for feat in sorted(report.features, key=lambda f: f.rank):
        lines.append(f"{feat.rank}\t{feat.feature}\t{feat.score:.3f}")
    return ReportSection(title="Importance", lines=lines)


def imc_section(summary: ImcSummary, top: list[TopCandidate] | None = None) -> ReportSection:
    lines = [
        f"mode {summary.mode}, polymer {summary.polymer}, target {summary.target:g} "
        f"± {summary.tolerance:g} nm, {summary.n_simulations} draws, seed {summary.seed}",
        f"strictness {summary.strictness} (NO allowance {summary.no_allow_pct:g}%)",
        f"accepted: {summary.n_accepted}"
        + (
            f" (acceptance rate {summary.acceptance_rate:.4f})"
            if summary.acceptance_rate is not None
            else " (experimental mode: all draws are observed settings)"
        ),
        f"in-band: {summary.n_success}"
        + (
            f" (success rate {summary.success_rate:.4f} of accepted, "
            f"{summary.success_rate_unconditional:.4f} of all draws)"
            if summary.success_rate is not None
            else ""
        ),
    ]
    if summary.predicted_mean is not None:
        lines.append(
            f"predicted diameter: mean {summary.predicted_mean:.1f} nm, "
            f"sd {summary.predicted_sd:.1f} nm"
        )
    if summary.fallback_full_dataset:
        lines.append("note: thin polymer subset, full-dataset ranges used")
    for note in summary.notes:
        lines.append(f"note: {note}")
    if top:
        lines.append("rank\tprediction\t|error|\tflag\tsolvents")
        for cand in top:
            solvents = ", ".join(
                f"{cand.settings[f'solvent_{i}']} {cand.settings[f'solvent{i}_ratio']:.0f}%"
                for i in (1, 2, 3)
                if cand.settings.get(f"solvent_{i}")
            )
            lines.append(
                f"{cand.rank}\t{cand.prediction:.1f}\t{cand.abs_error:.1f}\t"
                f"{cand.solubility_flag}\t{solvents}"
            )
    return ReportSection(title="Inverse Monte Carlo", lines=lines)


def render_text(title: str, sections: list[ReportSection]) -> str:
    parts = [title, "=" * len(title), ""]
    for section in sections:
        parts.append(f"== {section.title} ==")
        parts.extend(section.lines)
        parts.append("")
    return "\n".join(parts)


_HTML_STYLE = (
    "body{font-family:sans-serif;margin:2em;max-width:70em}"
    "h2{border-bottom:1px solid #999}"
    "pre{background:#f5f5f5;padding:0.8em;overflow-x:auto}"
)


def render_html(title: str, sections: list[ReportSection]) -> str:
    parts = [
        "<!doctype html>",
        "<html><head><meta charset='utf-8'>",
        f"<title>{html.escape(title)}</title>",
        f"<style>{_HTML_STYLE}</style></head><body>",
        f"<h1>{html.escape(title)}</h1>",
    ]
    for section in sections:
        parts.append(f"<h2>{html.escape(section.title)}</h2>")
        body = html.escape("\n".join(section.lines))
        parts.append(f"<pre>{body}</pre>")
    parts.append("</body></html>")
    return "\n".join(parts)
