"""Evaluation utilities: label-splitting impurity over a merge history,
nearest-subspace classification, and small scoring helpers.

Impurity here measures how badly label classes are split across clusters:
for each label class take the largest fraction of its members kept together
in a single cluster, and average one minus that fraction over the classes.
It is zero exactly when every class sits wholly inside one cluster, no
matter how many classes share a cluster.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import EmbeddingSet, LabelHierarchy
from .engine import Dendrogram
from .errors import DataError, NumericError
from .linalg import RANK_RTOL, semantic_distance
from .subspace import SemanticFieldSubspace, build_sfs

CLASSIFY_MODES = ("weighted_all", "top_fraction")
DEFAULT_TOP_FRACTION = 0.05


def impurity(cluster_ids, label_ids) -> float:
    """Mean over label classes of 1 - (largest single-cluster share)."""
    clusters = np.asarray(cluster_ids)
    labels = np.asarray(label_ids)
    if clusters.ndim != 1 or labels.ndim != 1:
        raise ValueError("cluster_ids and label_ids must be 1-D sequences")
    if clusters.shape[0] != labels.shape[0]:
        raise ValueError(
            f"length mismatch: {clusters.shape[0]} cluster ids vs {labels.shape[0]} labels"
        )
    if clusters.shape[0] == 0:
        raise ValueError("impurity needs at least one item")
    total = 0.0
    classes = np.unique(labels)
    for value in classes:
        members = clusters[labels == value]
        _, counts = np.unique(members, return_counts=True)
        total += 1.0 - counts.max() / members.shape[0]
    return total / classes.shape[0]


@dataclass(frozen=True)
class ImpurityCurve:
    """Impurity per label level at sampled merge iterations.

    values[k, s] is the impurity of label level k after sampled iteration
    iterations[s]; iteration 0 is the all-singletons state.
    """

    iterations: np.ndarray
    values: np.ndarray

    @property
    def level_count(self) -> int:
        return self.values.shape[0]

    def level(self, k: int) -> np.ndarray:
        return self.values[k]


def impurity_curve(
    dendrogram: Dendrogram, labels: LabelHierarchy, sample_iterations
) -> ImpurityCurve:
    """Replay the merge history and measure impurity at chosen iterations."""
    n = dendrogram.n_leaves
    if labels.n_items != n:
        raise ValueError(f"label table covers {labels.n_items} items, dendrogram has {n} leaves")
    samples = np.unique(np.asarray(list(sample_iterations), dtype=np.int64))
    if samples.size == 0:
        raise ValueError("need at least one sample iteration")
    if samples[0] < 0 or samples[-1] > n - 1:
        raise ValueError(
            f"sample iterations must lie in [0, {n - 1}], got {int(samples[0])}..{int(samples[-1])}"
        )

    levels = labels.level_count
    values = np.empty((levels, samples.size))
    assign = np.arange(n, dtype=np.int64)
    members: dict[int, np.ndarray] = {i: np.array([i], dtype=np.int64) for i in range(n)}

    cursor = 0
    if samples[cursor] == 0:
        for k in range(levels):
            values[k, cursor] = impurity(assign, labels.label_ids[:, k])
        cursor += 1
    for event in dendrogram.events:
        if cursor == samples.size:
            break
        merged = np.concatenate((members.pop(event.left_id), members.pop(event.right_id)))
        members[event.new_id] = merged
        assign[merged] = event.new_id
        if event.iteration == samples[cursor]:
            for k in range(levels):
                values[k, cursor] = impurity(assign, labels.label_ids[:, k])
            cursor += 1
    if cursor != samples.size:
        raise ValueError("merge history ended before all sample iterations were reached")
    return ImpurityCurve(iterations=samples, values=values)


def train_class_sfs(
    embeddings: EmbeddingSet, level: int = 0, tolerance: float = RANK_RTOL
) -> dict[int, SemanticFieldSubspace]:
    """Build one subspace per label class at the given level."""
    if embeddings.labels is None:
        raise DataError("embedding set carries no labels; cannot train class subspaces")
    if not 0 <= level < embeddings.labels.level_count:
        raise ValueError(
            f"label level {level} out of range 0..{embeddings.labels.level_count - 1}"
        )
    column = embeddings.labels.label_ids[:, level]
    out: dict[int, SemanticFieldSubspace] = {}
    for value in np.unique(column):
        rows = embeddings.rows[column == value]
        out[int(value)] = build_sfs(rows, tolerance=tolerance)
    return out


def subspace_distance(
    vector: np.ndarray,
    sfs: SemanticFieldSubspace,
    mode: str = "weighted_all",
    fraction: float = DEFAULT_TOP_FRACTION,
) -> float:
    """Weighted semantic distance from a vector to a subspace's basis rows.

    weighted_all weights every basis row by its share of the spectrum's mass;
    top_fraction keeps the ceil(fraction * rank) strongest rows, equally
    weighted.
    """
    if mode not in CLASSIFY_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {CLASSIFY_MODES}")
    vector = np.asarray(vector, dtype=np.float64)
    if vector.ndim != 1 or vector.shape[0] != sfs.ambient_dim:
        raise NumericError(
            f"vector has shape {vector.shape}, subspace expects length {sfs.ambient_dim}"
        )
    if sfs.rank == 0:
        raise NumericError("subspace has rank 0; distances to it are undefined")
    sigmas = sfs.singular_values
    if mode == "weighted_all":
        weights = sigmas / sigmas.sum()
        rows = range(sfs.rank)
    else:
        if not 0.0 < fraction <= 1.0:
            raise ValueError(f"fraction must be in (0, 1], got {fraction}")
        keep = math.ceil(fraction * sfs.rank)
        rows = range(keep)  # basis rows are already sorted by singular value
        weights = np.full(keep, 1.0 / keep)
    return float(
        sum(w * semantic_distance(vector, sfs.basis[i]) for w, i in zip(weights, rows))
    )


def classify(
    vector: np.ndarray,
    class_subspaces: dict[int, SemanticFieldSubspace],
    mode: str = "weighted_all",
    fraction: float = DEFAULT_TOP_FRACTION,
) -> int:
    """Nearest-subspace label; distance ties resolve to the lowest class id."""
    if not class_subspaces:
        raise ValueError("class_subspaces is empty")
    best_id = None
    best = np.inf
    for class_id in sorted(class_subspaces):
        d = subspace_distance(vector, class_subspaces[class_id], mode, fraction)
        if d < best:
            best = d
            best_id = class_id
    return int(best_id)


def classify_all(
    matrix: np.ndarray,
    class_subspaces: dict[int, SemanticFieldSubspace],
    mode: str = "weighted_all",
    fraction: float = DEFAULT_TOP_FRACTION,
) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError(f"expected a 2-D matrix of query rows, got shape {matrix.shape}")
    return np.array(
        [classify(row, class_subspaces, mode, fraction) for row in matrix], dtype=np.int64
    )


def prf1_per_class(y_true, y_pred) -> dict[int, tuple[float, float, float]]:
    """Precision, recall, F1 for each class present in the ground truth."""
    truths = np.asarray(y_true, dtype=np.int64)
    preds = np.asarray(y_pred, dtype=np.int64)
    if truths.shape != preds.shape or truths.ndim != 1:
        raise ValueError(
            f"y_true and y_pred must be equal-length 1-D sequences, got {truths.shape} and {preds.shape}"
        )
    if truths.size == 0:
        raise ValueError("scoring needs at least one item")
    out: dict[int, tuple[float, float, float]] = {}
    for value in np.unique(truths):
        tp = int(np.sum((preds == value) & (truths == value)))
        predicted = int(np.sum(preds == value))
        actual = int(np.sum(truths == value))
        precision = tp / predicted if predicted else 0.0
        recall = tp / actual
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[int(value)] = (precision, recall, f1)
    return out


def prf1_macro(y_true, y_pred) -> dict[str, float]:
    """Macro-averaged precision, recall, and F1 over ground-truth classes."""
    per_class = prf1_per_class(y_true, y_pred)
    table = np.array(list(per_class.values()))
    return {
        "precision": float(table[:, 0].mean()),
        "recall": float(table[:, 1].mean()),
        "f1": float(table[:, 2].mean()),
    }


def pearson(a, b) -> float:
    """Pearson correlation; degenerate inputs raise instead of returning nan."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"expected equal-length 1-D sequences, got {x.shape} and {y.shape}")
    if x.shape[0] < 2:
        raise NumericError("correlation needs at least two observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NumericError("correlation inputs must be finite")
    xc = x - x.mean()
    yc = y - y.mean()
    nx = float(np.linalg.norm(xc))
    ny = float(np.linalg.norm(yc))
    if nx == 0.0 or ny == 0.0:
        raise NumericError("correlation undefined for a zero-variance sequence")
    return float(np.clip(xc @ yc / (nx * ny), -1.0, 1.0))
