"""Report rendering: fixed-width tables, JSON/CSV writers, and matplotlib
figures saved next to the delimited output."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Sequence

from .metrics import EvalReport, VelocityEvalReport

METRIC_COLUMNS = ("sAP", "AP50", "AP75", "APs", "APm", "APl")


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def report_row(report: EvalReport) -> list[float | None]:
    return [report.ap, report.ap50, report.ap75, report.ap_small, report.ap_medium, report.ap_large]


def format_table(rows: Mapping[str, Sequence[float | None]]) -> str:
    """Fixed-width table with one metrics row per label."""
    label_width = max([len(k) for k in rows] + [8])
    header = " ".join([" " * label_width] + [f"{c:>8}" for c in METRIC_COLUMNS])
    lines = [header]
    for label, values in rows.items():
        cells = " ".join(f"{_fmt(v):>8}" for v in values)
        lines.append(f"{label:<{label_width}} {cells}")
    return "\n".join(lines)


def write_json_report(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def write_csv_report(path: str | Path, rows: Mapping[str, Sequence[float | None]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", *METRIC_COLUMNS])
        for label, values in rows.items():
            writer.writerow([label] + ["" if v is None else f"{v:.6f}" for v in values])


def _new_figure():
    # Figure objects avoid pyplot's global state and any backend dependence.
    from matplotlib.figure import Figure

    fig = Figure(figsize=(6.0, 4.0), dpi=120)
    return fig, fig.subplots()


def plot_metric_bars(report: EvalReport, path: str | Path, title: str = "streaming accuracy") -> None:
    fig, ax = _new_figure()
    values = [v if v is not None else 0.0 for v in report_row(report)]
    ax.bar(range(len(METRIC_COLUMNS)), values, color="#4878cf")
    ax.set_xticks(range(len(METRIC_COLUMNS)), METRIC_COLUMNS)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("AP")
    ax.set_title(title)
    fig.savefig(path)


def plot_velocity_curve(vreport: VelocityEvalReport, path: str | Path) -> None:
    """sAP against the velocity multiplier, the qualitative degradation curve."""
    fig, ax = _new_figure()
    ms = sorted(vreport.sap_by_velocity)
    values = [
        (vreport.sap_by_velocity[m].ap if vreport.sap_by_velocity[m] is not None else None)
        for m in ms
    ]
    xs = [m for m, v in zip(ms, values) if v is not None]
    ys = [v for v in values if v is not None]
    ax.plot(xs, ys, marker="o", color="#d65f5f")
    if vreport.vsap is not None:
        ax.axhline(vreport.vsap, linestyle="--", color="#666666", label=f"mean {vreport.vsap:.3f}")
        ax.legend()
    ax.set_xlabel("velocity multiplier")
    ax.set_ylabel("sAP")
    ax.set_ylim(0.0, 1.05)
    ax.set_title("streaming accuracy vs simulated velocity")
    fig.savefig(path)


def plot_forecaster_comparison(results: Mapping[str, EvalReport], path: str | Path) -> None:
    fig, ax = _new_figure()
    names = list(results)
    values = [results[n].ap if results[n].ap is not None else 0.0 for n in names]
    ax.bar(range(len(names)), values, color="#6acc65")
    ax.set_xticks(range(len(names)), names)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("sAP")
    ax.set_title("forecasting manner comparison")
    fig.savefig(path)
