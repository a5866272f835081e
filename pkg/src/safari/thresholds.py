"""Shift-significance decisions: online sliding window and offline segmentation.

The online tracker keeps the last w shift values and flags a new value that
strictly exceeds mean + multiplier * sample-std of that window; the decision
always precedes pushing the value, so a value never competes against itself.
The offline path recursively splits a recorded sequence at its midpoint while
the two halves look distributionally imbalanced, then thresholds each final
segment against its own statistics.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError

DEFAULT_WINDOW = 100
DEFAULT_MULTIPLIER = 3.0
DEFAULT_MIN_WINDOW_SIZE = 100
DEFAULT_IMBALANCE_ALPHA = 1.0


def default_min_observations(window_size: int) -> int:
    """Warm-up length before any flag can fire: max(2, ceil(w / 4))."""
    return max(2, math.ceil(window_size / 4))


def _require_finite(value: float, what: str) -> float:
    v = float(value)
    if not math.isfinite(v):
        raise NumericError(f"{what} must be finite, got {value!r}")
    return v


class SlidingWindowTracker:
    """Ring of the most recent shift values with mean/std bookkeeping.

    mu and tau always equal the mean and sample standard deviation of the
    current ring contents (tau is 0.0 while the ring holds fewer than two
    values). is_significant consults only values observed so far.
    """

    def __init__(
        self,
        window_size: int = DEFAULT_WINDOW,
        multiplier: float = DEFAULT_MULTIPLIER,
        min_observations: int | None = None,
    ):
        if window_size < 2:
            raise ValueError(f"window_size must be >= 2, got {window_size}")
        if not multiplier > 0.0:
            raise ValueError(f"multiplier must be positive, got {multiplier}")
        if min_observations is None:
            min_observations = default_min_observations(window_size)
        if min_observations < 1:
            raise ValueError(f"min_observations must be >= 1, got {min_observations}")
        self.window_size = int(window_size)
        self.multiplier = float(multiplier)
        self.min_observations = int(min_observations)
        self._ring: deque[float] = deque(maxlen=self.window_size)
        self.mu = 0.0
        self.tau = 0.0

    @property
    def observation_count(self) -> int:
        return len(self._ring)

    def observe(self, value: float) -> None:
        """Push a shift value, evicting the oldest once the ring is full."""
        self._ring.append(_require_finite(value, "observed shift"))
        arr = np.fromiter(self._ring, dtype=np.float64)
        self.mu = float(arr.mean())
        self.tau = float(arr.std(ddof=1)) if arr.size > 1 else 0.0

    def is_significant(self, value: float) -> bool:
        """Strictly above mu + multiplier * tau, once warm-up has passed."""
        v = _require_finite(value, "candidate shift")
        if len(self._ring) < self.min_observations:
            return False
        return v > self.mu + self.multiplier * self.tau


def scan_sequence(
    values,
    window_size: int = DEFAULT_WINDOW,
    multiplier: float = DEFAULT_MULTIPLIER,
    min_observations: int | None = None,
) -> np.ndarray:
    """Run the online tracker over a whole sequence; returns the flag per index."""
    seq = np.asarray(values, dtype=np.float64)
    if seq.ndim != 1 or seq.size == 0:
        raise NumericError("sequence must be a non-empty 1-D array")
    tracker = SlidingWindowTracker(window_size, multiplier, min_observations)
    flags = np.zeros(seq.size, dtype=bool)
    for i, v in enumerate(seq):
        flags[i] = tracker.is_significant(v)
        tracker.observe(v)
    return flags


@dataclass(frozen=True)
class SegmentationResult:
    """Final segments with their statistics and the indices flagged in each.

    boundaries holds half-open (start, stop) index pairs covering the whole
    sequence in order; means/stds/thresholds align with it.
    """

    boundaries: list[tuple[int, int]]
    means: np.ndarray
    stds: np.ndarray
    thresholds: np.ndarray
    detected_indices: np.ndarray
    multiplier: float = field(default=DEFAULT_MULTIPLIER)


def _pooled_std(left: np.ndarray, right: np.ndarray) -> float:
    nl, nr = left.size, right.size
    if nl + nr < 3:
        return 0.0
    vl = float(left.var(ddof=1)) if nl > 1 else 0.0
    vr = float(right.var(ddof=1)) if nr > 1 else 0.0
    dof_l = max(nl - 1, 0)
    dof_r = max(nr - 1, 0)
    return math.sqrt((dof_l * vl + dof_r * vr) / (dof_l + dof_r))


def segment_shifts(
    sequence,
    min_window_size: int = DEFAULT_MIN_WINDOW_SIZE,
    imbalance_alpha: float = DEFAULT_IMBALANCE_ALPHA,
    multiplier: float = DEFAULT_MULTIPLIER,
) -> SegmentationResult:
    """Recursive midpoint segmentation with per-segment significance flags.

    A segment splits at its midpoint when both halves would keep at least
    min_window_size values and the halves' means differ by more than
    imbalance_alpha times their pooled sample std. Within each final segment,
    indices strictly above mean + multiplier * std are flagged.
    """
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 1 or seq.size == 0:
        raise NumericError("sequence must be a non-empty 1-D array")
    if not np.all(np.isfinite(seq)):
        raise NumericError("sequence contains non-finite values")
    if min_window_size < 1:
        raise ValueError(f"min_window_size must be >= 1, got {min_window_size}")
    if not imbalance_alpha > 0.0:
        raise ValueError(f"imbalance_alpha must be positive, got {imbalance_alpha}")
    if not multiplier > 0.0:
        raise ValueError(f"multiplier must be positive, got {multiplier}")

    segments: list[tuple[int, int]] = []

    def recurse(start: int, stop: int) -> None:
        length = stop - start
        mid = start + length // 2
        if mid - start >= min_window_size and stop - mid >= min_window_size:
            left = seq[start:mid]
            right = seq[mid:stop]
            if abs(float(left.mean()) - float(right.mean())) > imbalance_alpha * _pooled_std(
                left, right
            ):
                recurse(start, mid)
                recurse(mid, stop)
                return
        segments.append((start, stop))

    recurse(0, seq.size)

    means = np.empty(len(segments))
    stds = np.empty(len(segments))
    detected: list[int] = []
    for k, (start, stop) in enumerate(segments):
        chunk = seq[start:stop]
        means[k] = chunk.mean()
        stds[k] = chunk.std(ddof=1) if chunk.size > 1 else 0.0
        cut = means[k] + multiplier * stds[k]
        detected.extend(int(i) for i in np.flatnonzero(chunk > cut) + start)
    thresholds = means + multiplier * stds
    return SegmentationResult(
        boundaries=segments,
        means=means,
        stds=stds,
        thresholds=thresholds,
        detected_indices=np.asarray(sorted(detected), dtype=np.int64),
        multiplier=float(multiplier),
    )


def uniformity_metrics(values) -> dict[str, float]:
    """Dispersion summary of detected shift magnitudes.

    cv is sample-std over mean; the two ratio metrics need strictly positive
    values. The 90th/10th percentiles use linear interpolation.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise NumericError("uniformity metrics need a non-empty 1-D array")
    if not np.all(np.isfinite(arr)):
        raise NumericError("uniformity metrics need finite values")
    if np.any(arr <= 0.0):
        raise NumericError("ratio metrics are undefined for non-positive values")
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    p10, p90 = (float(p) for p in np.percentile(arr, [10.0, 90.0]))
    return {
        "cv": std / mean,
        "max_min_ratio": float(arr.max()) / float(arr.min()),
        "p90_p10_ratio": p90 / p10,
    }
