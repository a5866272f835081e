"""Semantic field subspaces and the shift metrics defined on them.

A cluster's semantic field subspace (SFS) is the span of its member
embeddings, carried around as the right singular basis of the member matrix
together with the singular values. The exact shift between an absorbed
cluster's subspace and the merged subspace is the sum, over the old basis,
of the index-paired singular-value gap times the distance from each old
basis row to its nearest new one. The approximate shift replaces all of
that with a two-spectral-norm product justified by singular-value
perturbation bounds: appending rows A_y to A_x moves every singular value
by at most |A_y|_2.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .linalg import RANK_RTOL, as_matrix, semantic_distance, spectral_norm, svd


@dataclass(frozen=True)
class SemanticFieldSubspace:
    """Rank-truncated row-space snapshot of one cluster's member matrix."""

    basis: np.ndarray
    singular_values: np.ndarray
    member_count: int
    source_cluster_id: int | None = None
    iteration_created: int | None = None

    @property
    def rank(self) -> int:
        return int(self.singular_values.shape[0])

    @property
    def ambient_dim(self) -> int:
        return int(self.basis.shape[1])


@dataclass(frozen=True)
class ShiftBreakdown:
    """Exact shift value with its per-index factors.

    dis_terms[i] is the singular-value gap at index i, dc_terms[i] the
    distance from old basis row i to its nearest new basis row;
    total == sum(dis_terms * dc_terms).
    """

    total: float
    dis_terms: np.ndarray
    dc_terms: np.ndarray
    dis_sum: float
    dc_sum: float


def build_sfs(
    members,
    *,
    source_cluster_id: int | None = None,
    iteration_created: int | None = None,
    tolerance: float = RANK_RTOL,
) -> SemanticFieldSubspace:
    """SVD snapshot of a member matrix (one embedding per row).

    The returned arrays are frozen: subspaces are value objects and must not
    drift after construction.
    """
    m = as_matrix(members, "members")
    res = svd(m, tolerance=tolerance)
    basis = res.right_basis
    sigmas = res.singular_values
    basis.flags.writeable = False
    sigmas.flags.writeable = False
    return SemanticFieldSubspace(
        basis=basis,
        singular_values=sigmas,
        member_count=int(m.shape[0]),
        source_cluster_id=source_cluster_id,
        iteration_created=iteration_created,
    )


def semantic_shift_exact(
    s_x: SemanticFieldSubspace, s_new: SemanticFieldSubspace
) -> ShiftBreakdown:
    """Exact shift from s_x to the merged subspace s_new.

    Index i of the old spectrum pairs with index i of the new one; each old
    basis row pairs with whichever new basis row it is closest to (ties go
    to the lowest index, and the matching need not be injective).
    """
    if s_x.ambient_dim != s_new.ambient_dim:
        raise NumericError(
            f"ambient dimensions differ: {s_x.ambient_dim} vs {s_new.ambient_dim}"
        )
    if s_new.rank < s_x.rank:
        raise NumericError(
            f"merged subspace lost rank ({s_new.rank} < {s_x.rank}); "
            "shift is defined for a merge that absorbs, not discards"
        )
    k = s_x.rank
    if k == 0:
        empty = np.zeros(0)
        return ShiftBreakdown(0.0, empty, empty, 0.0, 0.0)

    dis = np.abs(s_x.singular_values - s_new.singular_values[:k])

    nx = np.linalg.norm(s_x.basis, axis=1)
    nn = np.linalg.norm(s_new.basis, axis=1)
    dist = 1.0 - (s_x.basis @ s_new.basis.T) / np.outer(nx, nn)
    np.clip(dist, 0.0, 2.0, out=dist)
    nearest = np.argmin(dist, axis=1)
    dc = dist[np.arange(k), nearest]

    return ShiftBreakdown(
        total=float(np.sum(dis * dc)),
        dis_terms=dis,
        dc_terms=dc,
        dis_sum=float(np.sum(dis)),
        dc_sum=float(np.sum(dc)),
    )


def semantic_shift_approx(a_x, a_y) -> float:
    """Spectral-norm surrogate for the exact shift: |A_y|_2 * sigma_max(A_x).

    a_x must be the larger side of the merge (row count at least a_y's);
    both must share the ambient dimension.
    """
    ax = as_matrix(a_x, "a_x")
    ay = as_matrix(a_y, "a_y")
    if ax.shape[1] != ay.shape[1]:
        raise NumericError(
            f"ambient dimensions differ: {ax.shape[1]} vs {ay.shape[1]}"
        )
    if ax.shape[0] < ay.shape[0]:
        raise NumericError(
            "a_x must be the larger cluster (pass the size-dominant side first)"
        )
    return spectral_norm(ay) * spectral_norm(ax)


@dataclass(frozen=True)
class WeylReport:
    """Observed singular-value gaps against the perturbation bound."""

    max_violation: float
    per_index_gaps: np.ndarray
    bound: float


def verify_weyl_bound(a_x, a_y) -> WeylReport:
    """Check |sigma_i(a_x) - sigma_i([a_x; a_y])| <= |a_y|_2 index by index.

    max_violation is the largest excess of a gap over the bound; a correct
    stack of routines keeps it at floating-point noise (<= 1e-9).
    """
    ax = as_matrix(a_x, "a_x")
    ay = as_matrix(a_y, "a_y")
    if ax.shape[1] != ay.shape[1]:
        raise NumericError(
            f"ambient dimensions differ: {ax.shape[1]} vs {ay.shape[1]}"
        )
    s_x = np.linalg.svd(ax, compute_uv=False)
    s_stack = np.linalg.svd(np.vstack([ax, ay]), compute_uv=False)
    smax = float(s_x[0]) if s_x.size else 0.0
    rank = int(np.count_nonzero(s_x >= RANK_RTOL * smax)) if smax > 0.0 else 0
    bound = spectral_norm(ay)
    if rank == 0:
        return WeylReport(0.0, np.zeros(0), bound)
    gaps = np.abs(s_x[:rank] - s_stack[:rank])
    return WeylReport(float(np.max(gaps - bound)), gaps, bound)


def is_semantic_field(members, center_index: int, epsilon: float) -> bool:
    """True when every member sits strictly within epsilon of the center row."""
    m = as_matrix(members, "members")
    if not 0 <= center_index < m.shape[0]:
        raise IndexError(
            f"center_index {center_index} out of range for {m.shape[0]} members"
        )
    if not epsilon > 0.0:
        raise NumericError("epsilon must be positive")
    center = m[center_index]
    return all(
        semantic_distance(center, m[i]) < epsilon for i in range(m.shape[0])
    )
