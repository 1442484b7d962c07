"""Serialisation of metric reports to JSON and CSV."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

from .errors import FileError, ManifestParseError, ValidationError, WriteError
from .harness import MetricReport, RankingRow

__all__ = ["report_to_json", "report_to_csv", "emit_report", "load_report", "format_ranking"]

CSV_COLUMNS = ("id", "dice", "iou", "hausdorff", "modified_hausdorff", "asd", "flags")


def _dump(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        text = format(obj, ".17g")
        if not any(c in text for c in ".eEn"):
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_dump(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return _dump(obj.item(), indent, level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def report_to_json(report: MetricReport) -> str:
    """Canonical report text; floats carry 17 significant digits."""
    return _dump(report.to_dict(), 2, 0) + "\n"


def _fmt4(v) -> str:
    return "" if v is None else f"{v:.4f}"


def report_to_csv(report: MetricReport) -> str:
    """One row per pair, then a ``__dataset__`` summary row with Overall."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS + ("cn", "overall"))
    for p in report.per_pair:
        writer.writerow([
            p.id, _fmt4(p.dice), _fmt4(p.iou), _fmt4(p.hausdorff),
            _fmt4(p.modified_hausdorff), _fmt4(p.asd), ";".join(p.flags), "", "",
        ])
    d = report.dataset
    writer.writerow([
        "__dataset__", _fmt4(d.sr), _fmt4(d.la), _fmt4(d.bdp), _fmt4(d.mc), _fmt4(d.ads), "",
        _fmt4(d.cn), _fmt4(None if report.overall is None else report.overall.overall),
    ])
    return buf.getvalue()


def emit_report(report: MetricReport, fmt: str = "json", destination=None) -> None:
    """Write ``report`` as ``json`` or ``csv`` to a path, or stdout when ``destination`` is None/'-'."""
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv":
        text = report_to_csv(report)
    else:
        raise ValidationError(f"unknown report format {fmt!r}")
    if destination is None or str(destination) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(destination).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise WriteError(f"cannot write report: {exc.strerror}", path=str(destination)) from exc


def load_report(path) -> MetricReport:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileError(f"cannot read report: {exc.strerror}", path=str(path)) from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(f"{path}: invalid JSON: {exc}") from exc
    return MetricReport.from_dict(obj)


def format_ranking(rows: list[RankingRow]) -> str:
    header = f"{'rank':>4}  {'model':<20} {'CN':>7} {'SR':>6} {'LA':>6} {'BDP':>7} {'MC':>7} {'ADS':>7} {'Overall':>8}"
    lines = [header, "-" * len(header)]

    def num(v, spec):
        return "-" if v is None else format(v, spec)

    for r in rows:
        d = r.dataset
        lines.append(
            f"{r.rank:>4}  {r.model_name:<20} {num(d.cn, '7.0f')} {num(d.sr, '6.2f')} {num(d.la, '6.2f')} "
            f"{num(d.bdp, '7.0f')} {num(d.mc, '7.0f')} {num(d.ads, '7.0f')} {num(r.overall, '8.2f')}"
        )
    return "\n".join(lines) + "\n"
