"""Report documents: deterministic JSON, text summaries, plot data and diffs."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

from .bench import failure_counts

PLOT_FIELDS = ("dataset", "method", "replication", "table", "column", "value", "ci_low", "ci_high", "p_value",
               "separable")


def dumps(report: dict[str, Any]) -> str:
    # insertion order is already deterministic; sort_keys would scramble the row layout
    return json.dumps(report, indent=2, allow_nan=False, ensure_ascii=False) + "\n"


def write_report(report: dict[str, Any], path: str | Path) -> None:
    Path(path).write_text(dumps(report), encoding="utf-8")


def read_report(path: str | Path) -> dict[str, Any]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict) or not {"version", "environment", "results"} <= set(doc):
        raise ValueError(f"{path} is not a benchmark report")
    return doc


def _format_counts(counts: list[tuple[int, int]]) -> str:
    totals = {t for _, t in counts}
    if len(totals) == 1:
        return f"{', '.join(str(f) for f, _ in counts)} ({totals.pop()})"
    return ", ".join(f"{f} ({t})" for f, t in counts)


def _table(header: list[str], rows: list[list[str]]) -> list[str]:
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]

    def fmt(r):
        return "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()

    return [fmt(header), fmt(["-" * w for w in widths]), *(fmt(r) for r in rows)]


def render_summary(report: dict[str, Any]) -> str:
    """Failed-test counts per metric as ``a, b, c (total)`` across replications."""
    counts = failure_counts(report)
    by_metric: dict[str, list[list[str]]] = {}
    for (dataset, method, metric), per_rep in counts.items():
        by_metric.setdefault(metric, []).append([dataset, method, _format_counts(per_rep)])
    lines: list[str] = []
    for metric in sorted(by_metric):
        if lines:
            lines.append("")
        lines.append(f"{metric}")
        lines.extend(_table(["dataset", "method", "failed (total)"], by_metric[metric]))
    skipped = [r for r in report["results"] if (r.get("details") or {}).get("skipped")]
    if skipped:
        lines.append("")
        lines.append(f"skipped targets: {len(skipped)}")
    return "\n".join(lines) + ("\n" if lines else "")


def plot_rows(report: dict[str, Any]) -> dict[str, dict[str, list]]:
    """Column-oriented value arrays per metric, for metrics that produced a value."""
    out: dict[str, dict[str, list]] = {}
    for r in report["results"]:
        if r["value"] is None:
            continue
        cols = out.setdefault(r["metric"], {f: [] for f in PLOT_FIELDS})
        ci = r["ci"] or [None, None]
        values = {
            "dataset": r["dataset"],
            "method": r["method"],
            "replication": r["replication"],
            "table": r["target"]["table"],
            "column": r["target"]["column"],
            "value": r["value"],
            "ci_low": ci[0],
            "ci_high": ci[1],
            "p_value": r["p_value"],
            "separable": r["separable"],
        }
        for f in PLOT_FIELDS:
            cols[f].append(values[f])
    return out


def write_plot_data(report: dict[str, Any], out_dir: str | Path) -> list[Path]:
    """One tab-separated file per metric; missing values are empty cells."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for metric, cols in sorted(plot_rows(report).items()):
        path = out_dir / f"{metric}.tsv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
            writer.writerow(PLOT_FIELDS)
            for row in zip(*(cols[f] for f in PLOT_FIELDS)):
                writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
        written.append(path)
    return written


def _key(row: dict[str, Any]) -> tuple:
    t = row["target"]
    return (row["dataset"], row["method"], row["replication"], row["metric"], t["table"], t["column"])


def _order(key: tuple) -> tuple:
    return tuple("" if v is None else str(v) for v in key)


def compare(a: dict[str, Any], b: dict[str, Any], fields=("value", "p_value", "ci", "separable")) -> dict[str, Any]:
    """Rows present in only one report and field changes on rows present in both."""
    rows_a = {_key(r): r for r in a["results"]}
    rows_b = {_key(r): r for r in b["results"]}
    changed = []
    for k in rows_a.keys() & rows_b.keys():
        for f in fields:
            if rows_a[k][f] != rows_b[k][f]:
                changed.append({"key": list(k), "field": f, "a": rows_a[k][f], "b": rows_b[k][f]})
    return {
        "only_in_a": [list(k) for k in sorted(rows_a.keys() - rows_b.keys(), key=_order)],
        "only_in_b": [list(k) for k in sorted(rows_b.keys() - rows_a.keys(), key=_order)],
        "changed": sorted(changed, key=lambda c: (_order(c["key"]), c["field"])),
        "version_match": a["version"] == b["version"],
    }


def render_comparison(diff: dict[str, Any]) -> str:
    lines = []
    if not diff["version_match"]:
        lines.append("report versions differ")
    for side in ("only_in_a", "only_in_b"):
        for k in diff[side]:
            lines.append(f"{side.replace('_', ' ')}: {'/'.join(str(v) for v in k)}")
    for c in diff["changed"]:
        lines.append(f"changed {c['field']}: {'/'.join(str(v) for v in c['key'])}: {c['a']} -> {c['b']}")
    if not lines:
        lines.append("reports match")
    return "\n".join(lines) + "\n"
