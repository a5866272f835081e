"""Agglomerative clustering with subspace-shift boundary detection.

Each iteration merges the centroid-cosine nearest pair of clusters, measures
how much the size-dominant side's semantic field subspace moved when the
merge absorbed the other side, and flags the merge as a subspace boundary
when that shift strictly exceeds the sliding window's mean plus a multiple
of its sample std. Every shift feeds the window, flagged or not.

Nearest-pair search runs on a lazy-deletion min-heap: pair distances are
pushed once, entries touching merged-away clusters are skipped on pop, and
distances for each new cluster are computed eagerly against all live ones.
A naive quadratic scan with the same tie rule is provided for tests.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericError
from .subspace import SemanticFieldSubspace, ShiftBreakdown, build_sfs, semantic_shift_approx, semantic_shift_exact
from .thresholds import DEFAULT_MULTIPLIER, DEFAULT_WINDOW, SlidingWindowTracker

SHIFT_MODES = ("exact", "approx", "both")

# lazy heap hygiene: compact once dead entries dominate a large heap
_COMPACT_MIN_SIZE = 1_000_000
_COMPACT_DEAD_FRACTION = 0.75


@dataclass(frozen=True)
class Cluster:
    """One cluster: sorted member row indices and their centroid."""

    id: int
    member_indices: np.ndarray
    centroid: np.ndarray
    size: int


@dataclass(frozen=True)
class MergeEvent:
    """A single merge with the shift measurement and the decision context.

    threshold_mu / threshold_tau are the window statistics the significance
    decision was made against (before this shift entered the window).
    """

    iteration: int
    left_id: int
    right_id: int
    new_id: int
    linkage_distance: float
    shift_exact: ShiftBreakdown | None
    shift_approx: float | None
    threshold_mu: float
    threshold_tau: float
    is_sfs: bool

    @property
    def shift(self) -> ShiftBreakdown | float | None:
        """The measurement the run thresholded on (breakdown when available)."""
        return self.shift_exact if self.shift_exact is not None else self.shift_approx


@dataclass(frozen=True)
class ShiftRecord:
    """Per-iteration trace row: shift value(s), window state, flag."""

    iteration: int
    exact: float | None
    approx: float | None
    dis_sum: float | None
    dc_sum: float | None
    mu: float
    tau: float
    is_sfs: bool


@dataclass(frozen=True)
class Dendrogram:
    """Ordered merge events plus the registry of flagged subspaces."""

    events: list[MergeEvent]
    sfs_registry: dict[int, SemanticFieldSubspace]
    n_leaves: int
    config: "SafariConfig"


@dataclass(frozen=True)
class SafariConfig:
    window_size: int = DEFAULT_WINDOW
    multiplier: float = DEFAULT_MULTIPLIER
    shift_mode: str = "exact"
    min_observations: int | None = None
    seed: int = 0
    pair_strategy: str = "heap"  # "naive" drives the same loop from the scan oracle


@dataclass(frozen=True)
class SafariResult:
    dendrogram: Dendrogram
    shift_trace: list[ShiftRecord]


def _pair_distance(ca: np.ndarray, na: float, cb: np.ndarray, nb: float) -> float:
    """Centroid cosine distance; norms are precomputed per cluster."""
    d = 1.0 - float(np.dot(ca, cb)) / (na * nb)
    if d < 0.0:
        return 0.0
    if d > 2.0:
        return 2.0
    return d


def merge_clusters(a: Cluster, b: Cluster, next_id: int) -> Cluster:
    """Union of two disjoint clusters with the size-weighted mean centroid."""
    if a.id == b.id:
        raise ValueError(f"cannot merge cluster {a.id} with itself")
    members = np.sort(np.concatenate([a.member_indices, b.member_indices]))
    if members.size != a.size + b.size or np.any(members[1:] == members[:-1]):
        raise ValueError(
            f"clusters {a.id} and {b.id} share member indices; merge needs disjoint inputs"
        )
    total = a.size + b.size
    centroid = (a.size * a.centroid + b.size * b.centroid) / total
    return Cluster(id=next_id, member_indices=members, centroid=centroid, size=total)


def naive_nearest_pair_oracle(clusters) -> tuple[int, int]:
    """Exhaustive scan for the closest pair; ties go to the smallest (min id, max id).

    Quadratic on purpose: this is the reference the accelerated structure is
    checked against in tests.
    """
    items = sorted(clusters, key=lambda c: c.id) if not isinstance(clusters, dict) else [
        clusters[k] for k in sorted(clusters)
    ]
    if len(items) < 2:
        raise ValueError("nearest pair needs at least two clusters")
    norms = {c.id: float(np.linalg.norm(c.centroid)) for c in items}
    best = None
    for i in range(len(items)):
        for j in range(i + 1, len(items)):
            a, b = items[i], items[j]
            d = _pair_distance(a.centroid, norms[a.id], b.centroid, norms[b.id])
            key = (d, a.id, b.id)
            if best is None or key < best:
                best = key
    return best[1], best[2]


def nearest_pair(clusters) -> tuple[int, int]:
    """Closest pair by centroid cosine distance, heap-accelerated tie rule included."""
    items = sorted(clusters, key=lambda c: c.id) if not isinstance(clusters, dict) else [
        clusters[k] for k in sorted(clusters)
    ]
    if len(items) < 2:
        raise ValueError("nearest pair needs at least two clusters")
    norms = {c.id: float(np.linalg.norm(c.centroid)) for c in items}
    heap = [
        (_pair_distance(a.centroid, norms[a.id], b.centroid, norms[b.id]), a.id, b.id)
        for i, a in enumerate(items)
        for b in items[i + 1 :]
    ]
    heapq.heapify(heap)
    d, i, j = heap[0]
    return i, j


def _validate_embeddings(embeddings) -> np.ndarray:
    rows = np.ascontiguousarray(embeddings, dtype=np.float64)
    if rows.ndim != 2:
        raise NumericError(f"embeddings must be 2-D, got ndim={rows.ndim}")
    if rows.shape[0] < 2:
        raise NumericError(f"clustering needs at least 2 rows, got {rows.shape[0]}")
    if not np.all(np.isfinite(rows)):
        bad = int(np.flatnonzero(~np.isfinite(rows).all(axis=1))[0])
        raise NumericError(f"embeddings contain a non-finite entry in row {bad}")
    norms = np.linalg.norm(rows, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise NumericError(f"embeddings contain a zero-norm row at index {int(zero[0])}")
    return rows


def run_safari(embeddings, config: SafariConfig | None = None) -> SafariResult:
    """Cluster to a single root, recording shifts, window state, and flags."""
    cfg = config or SafariConfig()
    if cfg.shift_mode not in SHIFT_MODES:
        raise ValueError(f"shift_mode must be one of {SHIFT_MODES}, got {cfg.shift_mode!r}")
    if cfg.pair_strategy not in ("heap", "naive"):
        raise ValueError(f"pair_strategy must be 'heap' or 'naive', got {cfg.pair_strategy!r}")
    rows = _validate_embeddings(embeddings)
    n, _ = rows.shape

    tracker = SlidingWindowTracker(
        window_size=cfg.window_size,
        multiplier=cfg.multiplier,
        min_observations=cfg.min_observations,
    )
    resolved = replace(cfg, min_observations=tracker.min_observations)

    clusters: dict[int, Cluster] = {
        i: Cluster(
            id=i,
            member_indices=np.asarray([i], dtype=np.int64),
            centroid=rows[i].copy(),
            size=1,
        )
        for i in range(n)
    }
    norms = {i: float(np.linalg.norm(rows[i])) for i in range(n)}

    use_heap = cfg.pair_strategy == "heap"
    heap: list[tuple[float, int, int]] = []
    if use_heap:
        ids = list(range(n))
        heap = [
            (_pair_distance(clusters[a].centroid, norms[a], clusters[b].centroid, norms[b]), a, b)
            for k, a in enumerate(ids)
            for b in ids[k + 1 :]
        ]
        heapq.heapify(heap)

    def pop_nearest() -> tuple[float, int, int]:
        while True:
            d, a, b = heapq.heappop(heap)
            if a in clusters and b in clusters:
                return d, a, b

    def compact_if_bloated() -> None:
        if len(heap) < _COMPACT_MIN_SIZE:
            return
        live_pairs = len(clusters) * (len(clusters) - 1) // 2
        if live_pairs >= (1.0 - _COMPACT_DEAD_FRACTION) * len(heap):
            return
        fresh = [(d, a, b) for (d, a, b) in heap if a in clusters and b in clusters]
        heapq.heapify(fresh)
        heap[:] = fresh

    events: list[MergeEvent] = []
    trace: list[ShiftRecord] = []
    registry: dict[int, SemanticFieldSubspace] = {}
    next_id = n

    for iteration in range(1, n):
        if use_heap:
            dist, id_a, id_b = pop_nearest()
        else:
            id_a, id_b = naive_nearest_pair_oracle(clusters)
            dist = _pair_distance(
                clusters[id_a].centroid, norms[id_a], clusters[id_b].centroid, norms[id_b]
            )
        a = clusters.pop(id_a)
        b = clusters.pop(id_b)
        merged = merge_clusters(a, b, next_id)
        next_id += 1

        # the size-dominant side keeps its subspace; ties go to the second
        dominant, other = (a, b) if a.size > b.size else (b, a)

        shift_exact: ShiftBreakdown | None = None
        shift_approx: float | None = None
        s_new: SemanticFieldSubspace | None = None
        if cfg.shift_mode in ("exact", "both"):
            s_x = build_sfs(rows[dominant.member_indices], source_cluster_id=dominant.id)
            s_new = build_sfs(
                rows[merged.member_indices],
                source_cluster_id=merged.id,
                iteration_created=iteration,
            )
            shift_exact = semantic_shift_exact(s_x, s_new)
        if cfg.shift_mode in ("approx", "both"):
            shift_approx = semantic_shift_approx(
                rows[dominant.member_indices], rows[other.member_indices]
            )

        value = shift_exact.total if shift_exact is not None else shift_approx
        mu, tau = tracker.mu, tracker.tau
        flagged = tracker.is_significant(value)
        tracker.observe(value)

        if flagged:
            if s_new is None:
                s_new = build_sfs(
                    rows[merged.member_indices],
                    source_cluster_id=merged.id,
                    iteration_created=iteration,
                )
            registry[iteration] = s_new

        events.append(
            MergeEvent(
                iteration=iteration,
                left_id=id_a,
                right_id=id_b,
                new_id=merged.id,
                linkage_distance=dist,
                shift_exact=shift_exact,
                shift_approx=shift_approx,
                threshold_mu=mu,
                threshold_tau=tau,
                is_sfs=flagged,
            )
        )
        trace.append(
            ShiftRecord(
                iteration=iteration,
                exact=None if shift_exact is None else shift_exact.total,
                approx=shift_approx,
                dis_sum=None if shift_exact is None else shift_exact.dis_sum,
                dc_sum=None if shift_exact is None else shift_exact.dc_sum,
                mu=mu,
                tau=tau,
                is_sfs=flagged,
            )
        )

        norms[merged.id] = float(np.linalg.norm(merged.centroid))
        if use_heap:
            mc, mn = merged.centroid, norms[merged.id]
            for cid, c in clusters.items():
                heapq.heappush(heap, (_pair_distance(mc, mn, c.centroid, norms[cid]), cid, merged.id))
        clusters[merged.id] = merged
        if use_heap:
            compact_if_bloated()

    dendrogram = Dendrogram(
        events=events, sfs_registry=registry, n_leaves=n, config=resolved
    )
    return SafariResult(dendrogram=dendrogram, shift_trace=trace)
