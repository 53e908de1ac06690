"""Figure rendering for experiment reports.

Everything is written to files (Agg backend); nothing is shown
interactively. Figures sit next to the TSV tables in the report directory.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_LABELS = {"mean": "Mean", "pmf": "PMF", "hft": "HFT",
           "locabal": "LOCABAL", "esmf": "eSMF", "mr3": "MR3"}
_AXIS_LABELS = {"factors": "latent factors",
                "lambda_rel": "relation weight",
                "lambda_rev": "review weight"}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_rmse_by_fraction(path, table_rows, variants):
    """Test RMSE versus training percentage, one line per model."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    fractions = [float(r["training"].rstrip("%")) for r in table_rows]
    for name in variants:
        ys = [r.get(name, math.nan) for r in table_rows]
        ax.plot(fractions, ys, marker="o", label=_LABELS.get(name, name))
    ax.set_xlabel("training set (%)")
    ax.set_ylabel("test RMSE")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_pass_curves(path, cells, fraction):
    """Per-pass test RMSE for every variant at one training fraction,
    averaged over seeds."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    by_variant = {}
    for c in cells:
        if c.train_fraction == fraction and c.curve and not c.error:
            by_variant.setdefault(c.variant, []).append(c.curve)
    for name, curves in by_variant.items():
        length = min(len(cv) for cv in curves)
        mean_curve = [sum(cv[p] for cv in curves) / len(curves)
                      for p in range(length)]
        ax.plot(range(length), mean_curve, label=_LABELS.get(name, name))
    ax.set_xlabel("pass")
    ax.set_ylabel("test RMSE")
    ax.set_title(f"training set {fraction:g}%", fontsize=9)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def plot_sweep(path, axis, rows):
    """Sensitivity of the joint model along one hyperparameter axis."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    fractions = sorted({x for _, x, _ in rows})
    for frac in fractions:
        pts = [(v, r) for v, x, r in rows if x == frac]
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                label=f"{frac:g}% train")
    if axis != "factors" and any(v > 0 for v, _, _ in rows):
        ax.set_xscale("symlog", linthresh=min(
            v for v, _, _ in rows if v > 0))
    ax.set_xlabel(_AXIS_LABELS.get(axis, axis))
    ax.set_ylabel("test RMSE")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def render_report(out_dir, cells, table_rows, variants, sweeps) -> dict:
    """Render every report figure; returns {figure name: path}."""
    paths = {}
    if table_rows:
        paths["rmse_by_fraction"] = plot_rmse_by_fraction(
            os.path.join(out_dir, "rmse_by_fraction.png"), table_rows,
            variants)
    for fraction in sorted({c.train_fraction for c in cells
                            if c.train_fraction == c.train_fraction}):
        name = f"curves_x{fraction:g}"
        paths[name] = plot_pass_curves(
            os.path.join(out_dir, name + ".png"), cells, fraction)
    for axis, rows in sweeps.items():
        if rows:
            paths[f"sweep_{axis}"] = plot_sweep(
                os.path.join(out_dir, f"sweep_{axis}.png"), axis, rows)
    return paths
