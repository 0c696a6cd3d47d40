"""Figure rendering from epinews CSV bundles.

Consumes only the documented run layout (cells/<label>/mean.csv or
repNNN.csv plus the sweep summary.csv) and writes deterministic PNGs.
All science lives upstream; the only computation here is averaging
columns across repetition files when no mean.csv is present.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

BASE_COLUMNS = ["step", "approvals", "assessments", "approval_fraction",
                "approval_fraction_w10", "excess_differences", "mean_queue_len"]

FIGURE_IDS = ("fig2a", "fig2b", "fig3", "fig4", "fig5a", "fig5b",
              "fig6a", "fig6b")

_RC = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.family": "DejaVu Sans",
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.6,
}

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


class SchemaError(ValueError):
    """Input files do not match the harness CSV schema."""


@dataclass
class FigureSpec:
    figure: str
    input_dir: Path
    output: Path
    title: str | None = None

    def __post_init__(self) -> None:
        if self.figure not in FIGURE_IDS:
            raise SchemaError(f"unknown figure id {self.figure!r}; "
                              f"choose from {', '.join(FIGURE_IDS)}")
        self.input_dir = Path(self.input_dir)
        self.output = Path(self.output)


def _read_csv(path: Path) -> tuple[list[str], list[dict]]:
    if not path.exists():
        raise SchemaError(f"missing input file {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"empty input file {path}")
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
    if not rows:
        raise SchemaError(f"no data rows in {path}")
    return header, rows


def _require_columns(header: list[str], required: list[str], path: Path) -> None:
    for column in required:
        if column not in header:
            raise SchemaError(f"missing column {column!r} in {path}")


def _mean_rows(tables: list[list[dict]], columns: list[str]) -> list[dict]:
    """Column-wise mean across repetition tables (None-aware)."""
    steps = len(tables[0])
    out = []
    for t in range(steps):
        row: dict = {}
        for column in columns:
            values = [table[t][column] for table in tables
                      if t < len(table) and table[t][column] is not None]
            row[column] = sum(values) / len(values) if values else None
        out.append(row)
    return out


def _load_series(run_dir: Path, required: list[str]) -> list[dict]:
    """Per-step series of one run directory; mean.csv preferred, otherwise
    the mean across repNNN.csv files."""
    mean_path = run_dir / "mean.csv"
    if mean_path.exists():
        header, rows = _read_csv(mean_path)
        _require_columns(header, required, mean_path)
        return rows
    rep_paths = sorted(run_dir.glob("rep*.csv"))
    if not rep_paths:
        raise SchemaError(f"no mean.csv or rep*.csv under {run_dir}")
    tables = []
    header = None
    for path in rep_paths:
        header, rows = _read_csv(path)
        _require_columns(header, required, path)
        tables.append(rows)
    return _mean_rows(tables, header)


def _cells(input_dir: Path) -> dict[str, Path]:
    cells_dir = input_dir / "cells"
    if not cells_dir.is_dir():
        raise SchemaError(f"missing cells/ directory under {input_dir}")
    return {p.name: p for p in sorted(cells_dir.iterdir()) if p.is_dir()}


def _cell_value(label: str, key: str) -> str | None:
    for part in label.split("__"):
        name, _, value = part.partition("=")
        if name == key:
            return value
    return None


def _column(rows: list[dict], name: str) -> list:
    return [row[name] for row in rows]


def _new_axes(title: str | None, xlabel: str, ylabel: str):
    fig, ax = plt.subplots()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    return fig, ax


def _render_time_series(spec: FigureSpec, column: str, ylabel: str):
    required = BASE_COLUMNS
    series = {}
    for label, cell_dir in _cells(spec.input_dir).items():
        name = _cell_value(label, "strategy") or label
        series[name] = _load_series(cell_dir, required)
    if not series:
        raise SchemaError(f"no cell directories under {spec.input_dir}")
    fig, ax = _new_axes(spec.title, "time step", ylabel)
    for k, (name, rows) in enumerate(series.items()):
        ax.plot(_column(rows, "step"), _column(rows, column),
                label=name, color=_COLORS[k % len(_COLORS)])
    ax.legend()
    return fig


def _render_heatmap(spec: FigureSpec):
    path = spec.input_dir / "summary.csv"
    header, rows = _read_csv(path)
    _require_columns(header, ["q", "lambda", "approval_fraction",
                              "excess_differences"], path)
    q_values = sorted({row["q"] for row in rows})
    lam_values = sorted({row["lambda"] for row in rows})
    grids = {}
    for metric in ("approval_fraction", "excess_differences"):
        grid = [[float("nan")] * len(lam_values) for _ in q_values]
        for row in rows:
            qi = q_values.index(row["q"])
            li = lam_values.index(row["lambda"])
            grid[qi][li] = row[metric] if row[metric] is not None else float("nan")
        grids[metric] = grid
    fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.2))
    for ax, (metric, grid) in zip(axes, grids.items()):
        image = ax.imshow(grid, origin="lower", aspect="auto",
                          cmap="viridis")
        ax.set_xticks(range(len(lam_values)),
                      [f"{v:g}" for v in lam_values])
        ax.set_yticks(range(len(q_values)), [f"{v:g}" for v in q_values])
        ax.set_xlabel("decay per step")
        ax.set_ylabel("queue threshold")
        ax.set_title(metric.replace("_", " "))
        ax.grid(False)
        fig.colorbar(image, ax=ax, shrink=0.85)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    return fig


def _render_readership(spec: FigureSpec):
    fig, ax = _new_axes(spec.title, "time step", "readers per step (mean)")
    plotted = 0
    for k, (label, cell_dir) in enumerate(_cells(spec.input_dir).items()):
        lam = _cell_value(label, "lambda") or label
        probe = _load_series(cell_dir, BASE_COLUMNS)
        injected = [c for c in probe[0] if c.startswith("injected_")]
        if not injected:
            raise SchemaError(
                f"missing column 'injected_00' in {cell_dir} (not an "
                f"injection bundle)")
        means = []
        for row in probe:
            values = [row[c] for c in injected if row[c] is not None]
            means.append(sum(values) / len(values) if values else 0.0)
        ax.plot([row["step"] for row in probe], means,
                label=f"lambda={lam}", color=_COLORS[k % len(_COLORS)])
        plotted += 1
    if not plotted:
        raise SchemaError(f"no cell directories under {spec.input_dir}")
    ax.legend()
    return fig


def _render_delta_comparison(spec: FigureSpec):
    path = spec.input_dir / "summary.csv"
    header, rows = _read_csv(path)
    _require_columns(header, ["delta", "recommender", "approval_fraction"],
                     path)
    recommenders = []
    for row in rows:
        if row["recommender"] not in recommenders:
            recommenders.append(row["recommender"])
    fig, ax = _new_axes(spec.title, "approval threshold",
                        "equilibrium approval fraction")
    for k, rec in enumerate(recommenders):
        points = sorted((row["delta"], row["approval_fraction"])
                        for row in rows if row["recommender"] == rec)
        ax.plot([p[0] for p in points], [p[1] for p in points],
                marker="o", label=rec, color=_COLORS[k % len(_COLORS)])
    ax.legend()
    return fig


def _render_noise(spec: FigureSpec, column: str, ylabel: str):
    path = spec.input_dir / "summary.csv"
    header, rows = _read_csv(path)
    _require_columns(header, ["noise", column], path)
    points = sorted((row["noise"], row[column]) for row in rows)
    fig, ax = _new_axes(spec.title, "evaluation error amplitude", ylabel)
    ax.plot([p[0] for p in points], [p[1] for p in points], marker="o",
            color=_COLORS[0])
    return fig


def render(spec: FigureSpec) -> Path:
    """Render one figure to `spec.output`; raises SchemaError (and writes
    nothing) when the inputs do not match the harness layout."""
    with plt.rc_context(_RC):
        if spec.figure == "fig2a":
            fig = _render_time_series(spec, "approval_fraction_w10",
                                      "approval fraction (trailing 10 steps)")
        elif spec.figure == "fig2b":
            fig = _render_time_series(spec, "excess_differences",
                                      "excess differences")
        elif spec.figure == "fig3":
            fig = _render_heatmap(spec)
        elif spec.figure == "fig4":
            fig = _render_readership(spec)
        elif spec.figure in ("fig5a", "fig5b"):
            fig = _render_delta_comparison(spec)
        elif spec.figure == "fig6a":
            fig = _render_noise(spec, "excess_differences",
                                "equilibrium excess differences")
        else:
            fig = _render_noise(spec, "approval_fraction",
                                "equilibrium approval fraction")
        try:
            spec.output.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(spec.output, format="png",
                        metadata={"Software": None})
        finally:
            plt.close(fig)
    return spec.output
