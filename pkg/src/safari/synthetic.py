"""Synthetic fixtures: nested label hierarchies on the unit sphere and
planted-spike shift traces.

All randomness flows through numpy's Philox4x32-10 counter-based generator
keyed by the caller's seed, so outputs are reproducible byte for byte for a
given (spec, seed) pair.

A hierarchy draws exactly-orthonormal root directions, then each level's
child directions by rotating the parent through a fixed angle toward a
random tangent (Gram-Schmidt against the parent), and finally per-leaf
points as the leaf direction plus isotropic Gaussian jitter scaled by
spread / sqrt(d), renormalized; for small angles that jitter scale makes the
typical point-to-leaf angle roughly the configured spread in radians. The
spread list aligns with [level transitions coarse to fine..., point jitter]
and must be non-increasing.

Root directions are sign-normalized so each one's largest-magnitude
coordinate is positive, the same orientation convention the decomposition
code applies to basis vectors. A class's leading singular direction then
agrees with its generating direction instead of its negation, which keeps
cosine-based distances to trained subspaces meaningful.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import EmbeddingSet, LabelHierarchy

MAX_DEPTH = 4


@dataclass(frozen=True)
class HierarchySpec:
    """Shape of a synthetic hierarchy.

    branching[0] is the root count; branching[k] the children per node at
    depth k. angular_spread may be a scalar (applied everywhere) or one value
    per branching entry: transitions first, point jitter last.
    """

    branching: tuple[int, ...]
    points_per_leaf: int
    dim: int
    angular_spread: tuple[float, ...]
    seed: int = 0

    def __post_init__(self):
        branching = tuple(int(b) for b in np.atleast_1d(self.branching))
        if not 1 <= len(branching) <= MAX_DEPTH:
            raise ValueError(f"branching depth must be 1..{MAX_DEPTH}, got {len(branching)}")
        if any(b < 1 for b in branching):
            raise ValueError(f"branching factors must be >= 1, got {branching}")
        spread = np.atleast_1d(np.asarray(self.angular_spread, dtype=np.float64))
        if spread.size == 1:
            spread = np.full(len(branching), float(spread[0]))
        if spread.size != len(branching):
            raise ValueError(
                f"angular_spread needs 1 or {len(branching)} values, got {spread.size}"
            )
        if np.any(spread < 0.0) or not np.all(np.isfinite(spread)):
            raise ValueError("angular spreads must be finite and non-negative")
        if np.any(np.diff(spread) > 0.0):
            raise ValueError(
                f"angular spreads must not increase from coarse to fine, got {spread.tolist()}"
            )
        if self.points_per_leaf < 1:
            raise ValueError(f"points_per_leaf must be >= 1, got {self.points_per_leaf}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if branching[0] > self.dim:
            raise ValueError(
                f"cannot place {branching[0]} orthogonal root directions in {self.dim} dimensions"
            )
        object.__setattr__(self, "branching", branching)
        object.__setattr__(self, "angular_spread", tuple(float(s) for s in spread))

    @property
    def depth(self) -> int:
        return len(self.branching)

    @property
    def n_leaves(self) -> int:
        return int(np.prod(self.branching))

    @property
    def n_points(self) -> int:
        return self.n_leaves * self.points_per_leaf


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def _rotate_toward_random_tangent(
    parent: np.ndarray, angle: float, rng: np.random.Generator
) -> np.ndarray:
    g = rng.standard_normal(parent.shape[0])
    if angle == 0.0:
        return parent.copy()
    while True:
        t = g - (g @ parent) * parent
        norm = float(np.linalg.norm(t))
        if norm > 1e-12:
            break
        g = rng.standard_normal(parent.shape[0])
    t /= norm
    return np.cos(angle) * parent + np.sin(angle) * t


def _sample_leaf_nodes(
    spec: HierarchySpec, rng: np.random.Generator
) -> list[tuple[str, np.ndarray]]:
    q, _ = np.linalg.qr(rng.standard_normal((spec.dim, spec.branching[0])))
    nodes = []
    for i in range(spec.branching[0]):
        root = q[:, i].copy()
        if root[np.argmax(np.abs(root))] < 0.0:
            root = -root
        nodes.append((str(i), root))

    for level in range(1, spec.depth):
        angle = spec.angular_spread[level - 1]
        nodes = [
            (f"{path}.{j}", _rotate_toward_random_tangent(direction, angle, rng))
            for path, direction in nodes
            for j in range(spec.branching[level])
        ]
    return nodes


def leaf_directions(spec: HierarchySpec) -> tuple[list[str], np.ndarray]:
    """Leaf paths and their sampled unit directions, without the point jitter.

    Uses the same stream as generate_hierarchy, so the directions match the
    ones the points scatter around for the same spec and seed.
    """
    nodes = _sample_leaf_nodes(spec, _rng(spec.seed))
    return [path for path, _ in nodes], np.array([d for _, d in nodes])


def generate_hierarchy(spec: HierarchySpec) -> EmbeddingSet:
    """Sample a labeled embedding set with the tree geometry ``spec`` describes."""
    rng = _rng(spec.seed)
    d = spec.dim
    nodes = _sample_leaf_nodes(spec, rng)

    jitter = spec.angular_spread[spec.depth - 1] / np.sqrt(d)
    rows = np.empty((spec.n_points, d))
    ids: list[str] = []
    paths: list[str] = []
    k = 0
    for path, direction in nodes:
        for j in range(spec.points_per_leaf):
            p = direction + jitter * rng.standard_normal(d)
            norm = float(np.linalg.norm(p))
            while norm == 0.0:  # jittered point collapsed; redraw
                p = direction + jitter * rng.standard_normal(d)
                norm = float(np.linalg.norm(p))
            rows[k] = p / norm
            ids.append(f"{path}#{j}")
            paths.append(path)
            k += 1

    labels = _labels_from_paths(paths, spec.depth)
    return EmbeddingSet(rows=rows, ids=ids, labels=labels)


def _labels_from_paths(paths: list[str], depth: int) -> LabelHierarchy:
    """Level 0 is the full leaf path (most specific); deeper prefixes coarsen."""
    n = len(paths)
    label_ids = np.empty((n, depth), dtype=np.int64)
    vocab: list[list[str]] = []
    for level in range(depth):
        keep = depth - level  # path segments kept at this label level
        names = [".".join(p.split(".")[:keep]) for p in paths]
        table: dict[str, int] = {}
        col: list[int] = []
        for name in names:
            if name not in table:
                table[name] = len(table)
            col.append(table[name])
        label_ids[:, level] = col
        vocab.append(list(table))
    return LabelHierarchy(label_ids, vocab)


def planted_spike_trace(
    length: int,
    baseline_mean: float,
    baseline_std: float,
    spike_positions,
    spike_multiple: float,
    seed: int = 0,
) -> np.ndarray:
    """Gaussian baseline with spikes pinned at mean + multiple * std.

    Spike positions must be unique and within range; the spikes replace the
    baseline draw at those indices, so their height is exact by construction.
    """
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if baseline_std < 0.0:
        raise ValueError(f"baseline_std must be >= 0, got {baseline_std}")
    positions = np.asarray(list(spike_positions), dtype=np.int64)
    if positions.size:
        bad = positions[(positions < 0) | (positions >= length)]
        if bad.size:
            raise ValueError(f"spike position {int(bad[0])} outside [0, {length})")
        if np.unique(positions).size != positions.size:
            raise ValueError("spike positions contain duplicates")
    rng = _rng(seed)
    trace = baseline_mean + baseline_std * rng.standard_normal(length)
    trace[positions] = baseline_mean + spike_multiple * baseline_std
    return trace
