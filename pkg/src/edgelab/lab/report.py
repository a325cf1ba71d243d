"""Byte-stable CSV, JSON and SVG renderings of experiment reports."""
from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from pathlib import Path

from .experiments import ExperimentReport

FORMATS = ("csv", "json", "svg")
TABLE_COLUMNS = ("N", "k", "exact", "expansion", "abs_error")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _clean(x):
    """JSON-safe copy: non-finite floats become None, tuples become lists."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, float):
        return x if math.isfinite(x) else None
    if hasattr(x, "item"):
        return _clean(x.item())
    return x


def report_schema() -> dict:
    text = resources.files("edgelab.lab").joinpath("data/report_schema.json").read_text()
    return json.loads(text)


def report_json(report: ExperimentReport) -> str:
    return json.dumps(_clean(report.to_dict()), sort_keys=True, indent=2) + "\n"


def validate_report_json(text: str) -> None:
    """Raise ``jsonschema.ValidationError`` if ``text`` violates the shipped schema."""
    import jsonschema

    jsonschema.validate(json.loads(text), report_schema())


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return "" if v is None else str(v)


def report_csv(report: ExperimentReport) -> str:
    """The k-grid table (ladder x grid) when present, otherwise the metric rows."""
    if report.table:
        rows, cols = report.table, list(TABLE_COLUMNS)
    else:
        rows = report.rows
        # N first, the rest sorted, so a report re-rendered from JSON is byte-identical
        cols = sorted({c for row in rows for c in row}, key=lambda c: (c != "N", c))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def report_svg(report: ExperimentReport, width: int = 480, height: int = 320) -> str:
    """Log-log plot with one polyline per series; non-positive points are skipped."""
    series = {k: [(x, y) for x, y in v if x and y and x > 0 and y > 0]
              for k, v in sorted(report.series.items())}
    pts = [p for v in series.values() for p in v]
    pad = 48
    if pts:
        lx = [math.log10(x) for x, _ in pts]
        ly = [math.log10(y) for _, y in pts]
        x0, x1 = min(lx), max(lx) if max(lx) > min(lx) else min(lx) + 1
        y0, y1 = min(ly), max(ly) if max(ly) > min(ly) else min(ly) + 1
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0

    def sx(x):
        return pad + (math.log10(x) - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (math.log10(y) - y0) / (y1 - y0) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<title>{report.experiment} on {report.scenario.get("name", "")}</title>',
           f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
           'fill="none" stroke="#888"/>',
           f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="11">'
           f'log10 x: {x0:.2f} .. {x1:.2f}</text>',
           f'<text x="12" y="{height / 2:.1f}" font-size="11" '
           f'transform="rotate(-90 12 {height / 2:.1f})" text-anchor="middle">'
           f'log10 y: {y0:.2f} .. {y1:.2f}</text>']
    for i, (name, v) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in v)
        out.append(f'<polyline data-series="{name}" fill="none" stroke="{color}" '
                   f'points="{coords}"/>')
        out.append(f'<text x="{pad + 6}" y="{pad + 14 + 13 * i}" font-size="11" '
                   f'fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


RENDERERS = {"csv": report_csv, "json": report_json, "svg": report_svg}


def emit_report(report: ExperimentReport, formats=FORMATS, out_dir=".") -> list:
    """Write the report in each format to ``out_dir``; returns the paths."""
    out_dir = Path(out_dir)
    stem = f"{report.experiment}_{report.scenario.get('name', 'scenario')}"
    paths = []
    for fmt in formats:
        if fmt not in RENDERERS:
            raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
        path = out_dir / f"{stem}.{fmt}"
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            path.write_text(RENDERERS[fmt](report))
        except OSError as exc:
            raise OSError(f"cannot write report to {path}: {exc}") from exc
        paths.append(path)
    return paths
