"""Benchmark harness comparing exact and approximate shift computation.

The merge sequence is fixed once by a cheap clustering pass (merge order
depends only on centroid distances, never on the shift mode), then each
merge is replayed: the exact route builds both truncated decompositions and
the term-by-term shift, the approximate route multiplies the two spectral
norms. Wall times are medians over a configurable number of repeats.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .engine import SafariConfig, run_safari
from .subspace import build_sfs, semantic_shift_approx, semantic_shift_exact


@dataclass(frozen=True)
class BenchRow:
    """One replayed merge: shift values and per-route wall times (seconds)."""

    iteration: int
    cluster_size: int
    exact_value: float
    approx_value: float
    time_exact: float
    time_approx: float
    time_exact_spread: float | None
    time_approx_spread: float | None


@dataclass(frozen=True)
class BenchReport:
    rows: list[BenchRow]
    repeats: int
    mean_abs_error: float
    pearson_r: float
    median_time_exact: float
    median_time_approx: float

    @property
    def median_speedup(self) -> float:
        return self.median_time_exact / self.median_time_approx

    def exact_values(self) -> np.ndarray:
        return np.array([r.exact_value for r in self.rows])

    def approx_values(self) -> np.ndarray:
        return np.array([r.approx_value for r in self.rows])


def _timed(fn, repeats: int) -> tuple[float, float | None]:
    samples = np.empty(repeats)
    for k in range(repeats):
        start = time.perf_counter()
        fn()
        samples[k] = time.perf_counter() - start
    spread = float(samples.std(ddof=1)) if repeats > 1 else None
    return float(np.median(samples)), spread


def bench_merge_sequence(
    rows: np.ndarray, config: SafariConfig | None = None, repeats: int = 10
) -> BenchReport:
    """Replay every merge of a clustering, timing both shift routes."""
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    from .evaluation import pearson  # local import avoids a module cycle

    config = config if config is not None else SafariConfig()
    sequencing = replace(config, shift_mode="approx")
    result = run_safari(rows, sequencing)

    rows = np.ascontiguousarray(np.asarray(rows, dtype=np.float64))
    members: dict[int, np.ndarray] = {
        i: np.array([i], dtype=np.int64) for i in range(result.dendrogram.n_leaves)
    }
    out: list[BenchRow] = []
    for event in result.dendrogram.events:
        left = members.pop(event.left_id)
        right = members.pop(event.right_id)
        merged = np.concatenate((left, right))
        members[event.new_id] = merged
        # same orientation rule as the engine: ties go to the second cluster
        dominant, other = (left, right) if left.size > right.size else (right, left)
        m_dom = rows[dominant]
        m_other = rows[other]
        m_new = rows[merged]

        def exact_route():
            return semantic_shift_exact(build_sfs(m_dom), build_sfs(m_new)).total

        def approx_route():
            return semantic_shift_approx(m_dom, m_other)

        t_exact, s_exact = _timed(exact_route, repeats)
        t_approx, s_approx = _timed(approx_route, repeats)
        out.append(
            BenchRow(
                iteration=event.iteration,
                cluster_size=int(merged.size),
                exact_value=exact_route(),
                approx_value=approx_route(),
                time_exact=t_exact,
                time_approx=t_approx,
                time_exact_spread=s_exact,
                time_approx_spread=s_approx,
            )
        )

    exact_vals = np.array([r.exact_value for r in out])
    approx_vals = np.array([r.approx_value for r in out])
    return BenchReport(
        rows=out,
        repeats=repeats,
        mean_abs_error=float(np.abs(exact_vals - approx_vals).mean()),
        pearson_r=pearson(exact_vals, approx_vals),
        median_time_exact=float(np.median([r.time_exact for r in out])),
        median_time_approx=float(np.median([r.time_approx for r in out])),
    )


def trace_error_stats(exact: np.ndarray, approx: np.ndarray) -> dict[str, float]:
    """Error statistics between two aligned shift traces."""
    from .evaluation import pearson

    exact = np.asarray(exact, dtype=np.float64)
    approx = np.asarray(approx, dtype=np.float64)
    if exact.shape != approx.shape or exact.ndim != 1:
        raise ValueError(
            f"traces must be equal-length 1-D sequences, got {exact.shape} and {approx.shape}"
        )
    return {
        "mean_abs_error": float(np.abs(exact - approx).mean()),
        "pearson_r": pearson(exact, approx),
    }
