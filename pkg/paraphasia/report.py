"""Evaluation report rows and their CSV / JSON / console renderings.

Column schema (version ``REPORT_SCHEMA_VERSION``)::

    schema_version, task, fold, bucket, metric, window, vocab_size,
    ctc_weight, value, n_utterances

``window`` is set on ``ttr`` rows, ``vocab_size`` on tokenizer-sweep rows
and ``ctc_weight`` on rows produced with a chosen decode weight. ``value``
is empty where the metric is undefined (e.g. TTR without positives).
Rows keep the order the runner emits them in; nothing time-dependent is
written.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from tabulate import tabulate

from paraphasia.config import REPORT_SCHEMA_VERSION
from paraphasia.errors import MalformedAnnotation, SchemaVersionMismatch

LOG = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "schema_version",
    "task",
    "fold",
    "bucket",
    "metric",
    "window",
    "vocab_size",
    "ctc_weight",
    "value",
    "n_utterances",
]
_INT_COLUMNS = ("schema_version", "window", "vocab_size", "n_utterances")
_FLOAT_FORMAT = "%.6f"


class ReportRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    schema_version: int = REPORT_SCHEMA_VERSION
    task: str
    fold: str
    bucket: str
    metric: str
    window: Optional[int] = None
    vocab_size: Optional[int] = None
    ctc_weight: Optional[float] = None
    value: Optional[float] = None
    n_utterances: int = Field(default=0, ge=0)


class EvalReport(BaseModel):
    schema_version: int = REPORT_SCHEMA_VERSION
    rows: List[ReportRow] = Field(default_factory=list)

    def extend(self, rows: Iterable[ReportRow]) -> None:
        self.rows.extend(rows)

    def select(self, metric: Optional[str] = None, task: Optional[str] = None,
               fold: Optional[str] = None) -> List[ReportRow]:
        return [
            r for r in self.rows
            if (metric is None or r.metric == metric)
            and (task is None or r.task == task)
            and (fold is None or r.fold == fold)
        ]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([r.model_dump() for r in self.rows], columns=REPORT_COLUMNS)
        for col in _INT_COLUMNS:
            frame[col] = frame[col].astype("Int64")
        frame["ctc_weight"] = frame["ctc_weight"].astype("float64")
        frame["value"] = frame["value"].astype("float64")
        return frame


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def write_report_csv(report: EvalReport, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.to_frame().to_csv(path, index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")
    return path


def write_report_json(report: EvalReport, path: Union[str, Path], config: Optional[Dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema_version": report.schema_version,
        "config": config or {},
        "rows": [r.model_dump() for r in report.rows],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_report(
    report: EvalReport,
    output_dir: Union[str, Path],
    formats: Sequence[str] = ("csv", "json"),
    config: Optional[Dict] = None,
) -> List[Path]:
    """Write ``report.csv`` and/or ``report.json`` into *output_dir*."""
    output_dir = Path(output_dir)
    written = []
    for fmt in formats:
        if fmt == "csv":
            written.append(write_report_csv(report, output_dir / "report.csv"))
        elif fmt == "json":
            written.append(write_report_json(report, output_dir / "report.json", config))
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    LOG.info("Wrote %d report rows to %s", len(report.rows), ", ".join(str(p) for p in written))
    return written


# ---------------------------------------------------------------------------
# Readers
# ---------------------------------------------------------------------------

def _check_version(version, path) -> None:
    if version != REPORT_SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"{path}: report schema_version {version!r} (expected {REPORT_SCHEMA_VERSION})")


def read_report(path: Union[str, Path]) -> EvalReport:
    """Load a report written by :func:`write_report` (CSV or JSON, by suffix)."""
    path = Path(path)
    if path.suffix == ".json":
        with open(path, "r", encoding="utf-8") as f:
            try:
                payload = json.load(f)
            except json.JSONDecodeError as exc:
                raise MalformedAnnotation(f"{path}: invalid JSON ({exc.msg})") from None
        _check_version(payload.get("schema_version"), path)
        return EvalReport(rows=[ReportRow(**r) for r in payload.get("rows", [])])

    frame = pd.read_csv(path, dtype={"task": str, "fold": str, "bucket": str, "metric": str})
    missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
    if missing:
        raise MalformedAnnotation(f"{path}: missing report columns {missing}")
    for version in frame["schema_version"].unique():
        _check_version(int(version), path)
    frame = frame.astype(object).where(frame.notna(), None)
    return EvalReport(rows=[ReportRow(**rec) for rec in frame[REPORT_COLUMNS].to_dict(orient="records")])


# ---------------------------------------------------------------------------
# Console rendering
# ---------------------------------------------------------------------------

def render_report(
    report: EvalReport,
    metric: Optional[str] = None,
    task: Optional[str] = None,
    fold: Optional[str] = None,
    tablefmt: str = "simple",
) -> str:
    rows = report.select(metric=metric, task=task, fold=fold)
    if not rows:
        return "(no matching rows)"
    table = []
    for r in rows:
        table.append([
            r.task, r.fold, r.bucket, r.metric,
            "" if r.window is None else r.window,
            "" if r.vocab_size is None else r.vocab_size,
            "" if r.ctc_weight is None else f"{r.ctc_weight:.2f}",
            "n/a" if r.value is None else f"{r.value:.4f}",
            r.n_utterances,
        ])
    headers = ["task", "fold", "bucket", "metric", "window", "vocab", "ctc_w", "value", "n"]
    return tabulate(table, headers=headers, tablefmt=tablefmt, disable_numparse=True)


def render_frame(frame: pd.DataFrame, tablefmt: str = "simple") -> str:
    """Render any summary frame (e.g. the corpus summary) as a console table."""
    return tabulate(frame, headers="keys", tablefmt=tablefmt, showindex=False, floatfmt=".2f")


__all__ = [
    "EvalReport",
    "REPORT_COLUMNS",
    "ReportRow",
    "read_report",
    "render_frame",
    "render_report",
    "write_report",
    "write_report_csv",
    "write_report_json",
]
