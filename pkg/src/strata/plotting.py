"""SVG rendering of report and ledger CSV files."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .harness import fit_rate  # noqa: E402


def _read(path):
    with Path(path).open() as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        return reader.fieldnames or [], rows


def plot_report(csv_path, svg_path, columns=("l2_sup", "h1_sup")) -> Path:
    """Error versus tau on log-log axes with the fitted line for each column."""
    _, rows = _read(csv_path)
    rows = [r for r in rows if int(r.get("completed", 1))]
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for col in columns:
        pts = [(float(r["tau"]), float(r[col])) for r in rows if float(r[col]) > 0]
        if not pts:
            continue
        tau, err = np.array(pts).T
        line = ax.loglog(tau, err, "o", label=col)[0]
        if len(pts) >= 3:
            fit = fit_rate(pts)
            tt = np.geomspace(tau.min(), tau.max(), 20)
            ax.loglog(tt, np.exp(fit.intercept) * tt**fit.slope, "-", color=line.get_color(),
                      label=f"slope {fit.slope:.3f}")
    ax.set_xlabel("tau")
    ax.set_ylabel("difference norm")
    ax.grid(True, which="both", linestyle=":", linewidth=0.6)
    ax.legend()
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
    return Path(svg_path)


def plot_ledger(csv_path, svg_path) -> Path:
    _, rows = _read(csv_path)
    t = np.array([float(r["time"]) for r in rows])
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(5.5, 5.0), sharex=True)
    for key in ("E", "cumD"):
        ax1.plot(t, [float(r[key]) for r in rows], label=key)
    ax1.legend()
    ax2.semilogy(t, np.abs([float(r["residual"]) for r in rows]) + 1e-300)
    ax2.set_ylabel("|residual|")
    ax2.set_xlabel("time")
    fig.tight_layout()
    fig.savefig(svg_path, format="svg")
    plt.close(fig)
    return Path(svg_path)


def plot_csv(csv_path, svg_path) -> Path:
    """Pick the renderer from the CSV header."""
    fields, _ = _read(csv_path)
    if "tau" in fields:
        return plot_report(csv_path, svg_path)
    if "residual" in fields:
        return plot_ledger(csv_path, svg_path)
    raise ValueError(f"{csv_path}: unrecognised columns {fields}")
