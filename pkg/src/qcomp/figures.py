"""Report figures rendered next to the delimited outputs.

evaluate and bench write PNGs here: per-system metric bars, latency
comparison, and the wall-time-vs-length linearity fit.
"""

from __future__ import annotations

import os
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _save(fig, out_dir, name: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def metric_bars(reports, metric: str, out_dir, fname: Optional[str] = None) -> str:
    """One bar per system for a scalar aggregate (mean f1, ratio, slor)."""
    names = [r.system for r in reports]
    values = [r.aggregates.get("mean_%s" % metric) for r in reports]
    values = [v if v is not None else 0.0 for v in values]
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(names), 3.2))
    bars = ax.bar(names, values, color="#4878a8")
    ax.set_ylabel("mean %s" % metric)
    ax.set_ylim(0, max(values) * 1.15 if max(values) > 0 else 1)
    for bar, v in zip(bars, values):
        ax.text(bar.get_x() + bar.get_width() / 2, v, "%.3f" % v,
                ha="center", va="bottom", fontsize=8)
    return _save(fig, out_dir, fname or "%s_comparison.png" % metric)


def latency_bars(bench_by_system: dict, out_dir, fname: str = "latency_comparison.png") -> str:
    """Mean ms/sentence per system, stddev whiskers."""
    names = sorted(bench_by_system)
    means = [bench_by_system[n].mean_ms for n in names]
    stds = [bench_by_system[n].std_ms for n in names]
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(names), 3.2))
    ax.bar(names, means, yerr=stds, capsize=4, color="#a85448")
    ax.set_ylabel("latency (ms / sentence)")
    for i, m in enumerate(means):
        ax.text(i, m, "%.2f" % m, ha="center", va="bottom", fontsize=8)
    return _save(fig, out_dir, fname)


def linearity_plot(sizes: Sequence[int], times_ms: Sequence[float], r_squared: float,
                   out_dir, fname: str = "linearity.png") -> str:
    """Wall time vs token count with the least-squares line and its R^2."""
    sizes = np.asarray(sizes, dtype=float)
    times_ms = np.asarray(times_ms, dtype=float)
    slope, intercept = np.polyfit(sizes, times_ms, 1)
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.plot(sizes, times_ms, "o", color="#4878a8", label="measured")
    xs = np.linspace(sizes.min(), sizes.max(), 50)
    ax.plot(xs, slope * xs + intercept, "-", color="#333333",
            label="fit (R²=%.4f)" % r_squared)
    ax.set_xlabel("tokens")
    ax.set_ylabel("time (ms / sentence)")
    ax.legend(fontsize=8)
    return _save(fig, out_dir, fname)
