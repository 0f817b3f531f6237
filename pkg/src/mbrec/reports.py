"""Plain-text and JSON rendering of evaluation reports.

TSV output carries the resolved config as ``#``-prefixed header lines so
identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import Sequence

from .config import RunConfig
from .evaluation import EvalReport, GroupedEvalReport


def _echo_lines(config: RunConfig) -> list[str]:
    return [f"# {key} = {value}" for key, value in config.echo()]


def _metric_rows(report: EvalReport):
    for metric in ("recall", "ndcg"):
        values = getattr(report, metric)
        for k in report.k_values:
            yield metric, k, values[k], report.n_users


def render_eval_tsv(report: EvalReport, config: RunConfig) -> str:
    lines = _echo_lines(config)
    lines.append("metric\tK\tvalue\tn_users")
    for metric, k, value, n in _metric_rows(report):
        lines.append(f"{metric}\t{k}\t{value:.10f}\t{n}")
    return "\n".join(lines) + "\n"


def render_eval_json(report: EvalReport, config: RunConfig) -> str:
    doc = {
        "config": dict(config.echo()),
        "n_users": report.n_users,
        "metrics": [
            {"metric": m, "K": k, "value": v, "n_users": n}
            for m, k, v, n in _metric_rows(report)
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def render_sparsity_tsv(grouped: GroupedEvalReport, config: RunConfig) -> str:
    lines = _echo_lines(config)
    lines.append("metric\tK\tvalue\tn_users\tgroup\tmin_degree\tmax_degree")
    for g, (group, report) in enumerate(zip(grouped.groups, grouped.reports)):
        for metric, k, value, n in _metric_rows(report):
            lines.append(
                f"{metric}\t{k}\t{value:.10f}\t{n}\t{g}"
                f"\t{group.min_degree}\t{group.max_degree}"
            )
    return "\n".join(lines) + "\n"


def render_sparsity_json(grouped: GroupedEvalReport, config: RunConfig) -> str:
    doc = {
        "config": dict(config.echo()),
        "groups": [
            {
                "group": g,
                "min_degree": group.min_degree,
                "max_degree": group.max_degree,
                "n_users": report.n_users,
                "metrics": [
                    {"metric": m, "K": k, "value": v}
                    for m, k, v, _ in _metric_rows(report)
                ],
            }
            for g, (group, report) in enumerate(
                zip(grouped.groups, grouped.reports)
            )
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def render_noise_tsv(
    rows: Sequence[tuple[float, EvalReport]], config: RunConfig
) -> str:
    lines = _echo_lines(config)
    lines.append("fraction\tmetric\tK\tvalue\tn_users")
    for fraction, report in rows:
        for metric, k, value, n in _metric_rows(report):
            lines.append(f"{fraction:g}\t{metric}\t{k}\t{value:.10f}\t{n}")
    return "\n".join(lines) + "\n"


def render_noise_json(
    rows: Sequence[tuple[float, EvalReport]], config: RunConfig
) -> str:
    doc = {
        "config": dict(config.echo()),
        "rows": [
            {
                "fraction": fraction,
                "n_users": report.n_users,
                "metrics": [
                    {"metric": m, "K": k, "value": v}
                    for m, k, v, _ in _metric_rows(report)
                ],
            }
            for fraction, report in rows
        ],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
