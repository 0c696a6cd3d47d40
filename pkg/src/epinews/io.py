"""Delimited output: one CSV per repetition plus mean and summary sidecars.

Column order is fixed so downstream tooling can rely on the schema:
step, approvals, assessments, approval_fraction, approval_fraction_w10,
excess_differences, mean_queue_len, then one injected_NN column per tagged
news.  Undefined fractions are written as empty fields.  Floats use their
shortest round-trip form, which makes equal runs byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .harness import (
    ScenarioConfig,
    ScenarioResult,
    StepMetrics,
    SweepResult,
    config_hash,
)

BASE_COLUMNS = ["step", "approvals", "assessments", "approval_fraction",
                "approval_fraction_w10", "excess_differences", "mean_queue_len"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def tagged_columns(n_tagged: int) -> list[str]:
    return [f"injected_{k:02d}" for k in range(n_tagged)]


def write_metrics_csv(path: Path, rows: list[StepMetrics],
                      n_tagged: int) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BASE_COLUMNS + tagged_columns(n_tagged))
        for r in rows:
            readers = list(r.tagged_readers) + [0] * (n_tagged - len(r.tagged_readers))
            writer.writerow([
                _fmt(r.step), _fmt(r.approvals), _fmt(r.assessments),
                _fmt(r.approval_fraction), _fmt(r.approval_fraction_w10),
                _fmt(r.excess_differences), _fmt(r.mean_queue_len),
                *[_fmt(v) for v in readers],
            ])


def read_metrics_csv(path: Path) -> tuple[list[str], list[dict]]:
    """(header, rows) with numeric fields parsed; empty fields become None."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for raw in reader:
            row = {}
            for key, value in zip(header, raw):
                row[key] = None if value == "" else float(value)
            rows.append(row)
    return header, rows


def write_run(out_dir: Path, result: ScenarioResult) -> Path:
    """Persist a scenario result: config sidecar, per-rep CSVs, mean CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = result.config
    n_tagged = config.injection.count if config.injection else 0
    sidecar = {
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "master_seed": config.seed,
        "repetitions": [
            {"rep": r.rep, "seed": r.seed, "tagged_ids": r.tagged_ids}
            for r in result.records
        ],
    }
    with open(out_dir / "config.json", "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for record in result.records:
        write_metrics_csv(out_dir / f"rep{record.rep:03d}.csv",
                          record.rows, n_tagged)
    write_metrics_csv(out_dir / "mean.csv", result.mean_rows, n_tagged)
    summary = {
        "per_repetition": [r.summary for r in result.records],
        "mean": result.mean_summary,
    }
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


def write_sweep(out_dir: Path, sweep: SweepResult) -> Path:
    """Persist every cell as a run directory plus a grid summary table."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    axis_names = [name for name, _ in sweep.axes]
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(axis_names + ["approval_fraction", "excess_differences"])
        for cell in sweep.cells:
            writer.writerow(
                [_fmt(cell.values[name]) for name in axis_names]
                + [_fmt(cell.result.mean_summary.get("equilibrium_approval_fraction")),
                   _fmt(cell.result.mean_summary.get("final_excess_differences"))])
    for cell in sweep.cells:
        write_run(out_dir / "cells" / cell.label, cell.result)
    return out_dir


def read_summary_csv(path: Path) -> tuple[list[str], list[dict]]:
    """Grid summary reader: numeric fields parsed, labels kept as strings."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = []
        for raw in reader:
            row = {}
            for key, value in zip(header, raw):
                if value == "":
                    row[key] = None
                else:
                    try:
                        row[key] = float(value)
                    except ValueError:
                        row[key] = value
            rows.append(row)
    return header, rows
