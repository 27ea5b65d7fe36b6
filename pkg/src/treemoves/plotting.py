"""Matplotlib figures for CLI reports.

Every function takes plain data, writes one PNG and returns its path.  The
Agg backend is selected on import so figures render without a display.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GOLDEN = (math.sqrt(5) - 1) / 2

STYLE = {
    "axes.labelsize": 11,
    "axes.titlesize": 11,
    "legend.fontsize": 9,
    "xtick.labelsize": 9,
    "ytick.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
}


def _figure(width: float = 6.0):
    fig, ax = plt.subplots(figsize=(width, width * GOLDEN))
    return fig, ax


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # fixed metadata keeps repeated runs byte-identical
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_table(rows: Sequence[dict], path) -> Path:
    """Radius (dashed) and diameter (solid) against ``n`` for each move class."""
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ns = [r["n"] for r in rows]
        for name, colour in (("TBR", "C0"), ("SPR", "C1"), ("rSPR", "C2")):
            ax.plot(ns, [r["D_" + name] for r in rows], "-o", color=colour, label=f"diameter {name}")
            ax.plot(ns, [r["R_" + name] for r in rows], "--s", color=colour, ms=4, label=f"radius {name}")
        ax.set_xlabel("n")
        ax.set_ylabel("moves")
        ax.set_xticks(ns)
        ax.legend(frameon=False, ncol=2)
        return _save(fig, path)


def plot_scaling(summaries: Sequence[dict], path, fit: dict | None = None) -> Path:
    """Log-log plot of the mean bound gaps against ``n`` with standard errors."""
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ns = [s["n"] for s in summaries]
        for col, label, colour in (("S", "super pairs (upper-bound gap)", "C0"),
                                   ("lower_gap", "deletion certificate gap", "C3")):
            ys = [s[col + "_mean"] for s in summaries]
            es = [s[col + "_se"] for s in summaries]
            slope = fit.get(f"{col}_slope") if fit else None
            if slope is not None:
                label += f", slope {slope:.3f}"
            ax.errorbar(ns, ys, yerr=es, fmt="o-", color=colour, capsize=3, label=label)
        ref = [summaries[0]["S_mean"] * (n / ns[0]) ** (2 / 3) for n in ns]
        ax.plot(ns, ref, ":", color="0.5", label="n^(2/3) reference")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("mean gap  n + 1 - m")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_trials(rows: Sequence[dict], path, n: int) -> Path:
    """Per-trial upper-bound forest size and lower-bound certificate."""
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        idx = [r["trial"] for r in rows]
        ax.plot(idx, [r["upper_m"] for r in rows], "o", ms=3, label="super-pair forest size")
        ax.plot(idx, [r["lower_m"] for r in rows], "s", ms=3, label="deletion lower bound")
        ax.axhline(n + 1, color="0.5", lw=0.8, ls=":")
        ax.set_xlabel("trial")
        ax.set_ylabel("forest blocks")
        ax.set_title(f"n = {n}")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_part_sizes(leaf_counts: Sequence[Sequence[int]], path, threshold: float | None = None) -> Path:
    """Leaf counts of decomposition parts, one group of bars per tree."""
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        width = 0.8 / max(len(leaf_counts), 1)
        for i, counts in enumerate(leaf_counts):
            xs = [j + i * width for j in range(len(counts))]
            ax.bar(xs, counts, width=width, label=f"tree {i + 1}")
        if threshold is not None:
            ax.axhline(threshold, color="k", lw=0.8, ls="--", label="part size limit")
        ax.set_xlabel("part")
        ax.set_ylabel("leaves")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_blocks(block_sizes: Sequence[int], path, title: str = "") -> Path:
    """Histogram of forest block sizes."""
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        top = max(block_sizes) if block_sizes else 1
        counts = [sum(1 for s in block_sizes if s == k) for k in range(1, top + 1)]
        ax.bar(range(1, top + 1), counts)
        ax.set_xlabel("block size")
        ax.set_ylabel("blocks")
        ax.set_yscale("log")
        if title:
            ax.set_title(title)
        return _save(fig, path)
