"""Figure rendering for the report-producing commands.

Everything draws through the Agg backend and writes straight to files, so
the functions work in headless environments. Each takes plain arrays plus a
target path and returns the path it wrote.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 120


def _finish(fig, path) -> str:
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return str(path)


def save_shift_trace(
    path,
    iterations,
    exact=None,
    approx=None,
    mu=None,
    tau=None,
    multiplier: float = 3.0,
    flagged=None,
) -> str:
    """Shift values per iteration with the moving threshold and flag marks."""
    iterations = np.asarray(iterations)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    primary = None
    if exact is not None:
        primary = np.asarray(exact, dtype=np.float64)
        ax.plot(iterations, primary, lw=0.9, label="exact shift")
    if approx is not None:
        series = np.asarray(approx, dtype=np.float64)
        if primary is None:
            primary = series
        ax.plot(iterations, series, lw=0.9, alpha=0.75, label="approximate shift")
    if mu is not None and tau is not None:
        threshold = np.asarray(mu, dtype=np.float64) + multiplier * np.asarray(
            tau, dtype=np.float64
        )
        ax.plot(iterations, threshold, lw=0.8, ls="--", color="crimson", label="threshold")
    if flagged is not None and primary is not None:
        mask = np.asarray(flagged, dtype=bool)
        ax.scatter(
            iterations[mask], primary[mask], s=18, color="crimson", zorder=3, label="flagged"
        )
    ax.set_xlabel("merge iteration")
    ax.set_ylabel("semantic shift")
    ax.legend(loc="upper left", fontsize=8)
    return _finish(fig, path)


def save_impurity_curves(path, iterations, level_values: dict[int, np.ndarray]) -> str:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for level in sorted(level_values):
        ax.plot(iterations, level_values[level], marker="o", ms=3, label=f"lv{level}")
    ax.set_xlabel("merge iteration")
    ax.set_ylabel("impurity")
    ax.set_ylim(bottom=0.0)
    ax.legend(fontsize=8)
    return _finish(fig, path)


def save_bench_comparison(path, exact_values, approx_values, time_exact=None, time_approx=None) -> str:
    """Approximate vs exact shift values; per-merge wall times when given."""
    exact_values = np.asarray(exact_values, dtype=np.float64)
    approx_values = np.asarray(approx_values, dtype=np.float64)
    with_times = time_exact is not None and time_approx is not None
    if with_times:
        fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4.5))
    else:
        fig, left = plt.subplots(figsize=(5.5, 4.5))
    left.scatter(exact_values, approx_values, s=8, alpha=0.6)
    left.set_xlabel("exact shift")
    left.set_ylabel("approximate shift")
    if with_times:
        merge_axis = np.arange(len(time_exact))
        right.plot(merge_axis, np.asarray(time_exact, dtype=np.float64), lw=0.8, label="exact")
        right.plot(
            merge_axis, np.asarray(time_approx, dtype=np.float64), lw=0.8, label="approximate"
        )
        right.set_yscale("log")
        right.set_xlabel("merge index")
        right.set_ylabel("seconds")
        right.legend(fontsize=8)
    return _finish(fig, path)


def save_f1_bars(path, per_class: dict[int, tuple[float, float, float]], names=None) -> str:
    classes = sorted(per_class)
    labels = [names[c] if names else str(c) for c in classes]
    f1 = [per_class[c][2] for c in classes]
    fig, ax = plt.subplots(figsize=(max(5.0, 0.6 * len(classes) + 2), 4))
    ax.bar(range(len(classes)), f1, color="steelblue")
    ax.set_xticks(range(len(classes)), labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("F1")
    ax.set_ylim(0.0, 1.05)
    return _finish(fig, path)


def save_component_distributions(path, dis_sums, dc_sums) -> str:
    dis_sums = np.asarray(dis_sums, dtype=np.float64)
    dc_sums = np.asarray(dc_sums, dtype=np.float64)
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    left.hist(dis_sums, bins=40, color="steelblue")
    left.set_xlabel("importance-shift sum per merge")
    left.set_ylabel("merges")
    right.hist(dc_sums, bins=40, color="darkorange")
    right.set_xlabel("directional-change sum per merge")
    return _finish(fig, path)


def save_param_study(path, table: list[dict]) -> str:
    """Coefficient of variation against the multiplier, one line per window."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    windows = sorted({row["mws"] for row in table})
    for mws in windows:
        points = sorted(
            (row["sdm"], row["cv"]) for row in table if row["mws"] == mws and row["cv"] is not None
        )
        if points:
            ax.plot(*zip(*points), marker="o", ms=4, label=f"min window {mws}")
    ax.set_xlabel("threshold multiplier")
    ax.set_ylabel("CV of detected shifts")
    ax.legend(fontsize=8)
    return _finish(fig, path)
