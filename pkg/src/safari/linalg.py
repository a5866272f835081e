"""Dense linear-algebra primitives: semantic distance, SVD, spectral norm.

Embedding matrices are plain 2-D float64 numpy arrays with one embedding per
row. Every routine here validates finiteness up front and is deterministic:
identical input bytes produce identical output bytes (fixed iteration order,
fixed sign canonicalization, no randomness).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError

# Relative cutoff below which singular values count as numerical zeros.
RANK_RTOL = 1e-10

# Power-iteration stop: bound on the estimated remaining tail of the sigma
# sequence, and a hard step cap.
POWER_RTOL = 1e-10
POWER_MAX_STEPS = 1000

# Consecutive change ratios at or above _STALL_Q mean the top two singular
# values are nearly tied and the iteration will not separate them in any
# reasonable step budget; bail out to the dense eigensolve instead.
_STALL_Q = 0.995
_STALL_STEPS = 8

# Changes at or below this multiple of machine epsilon are rounding noise.
_NOISE_FLOOR = 64.0 * np.finfo(np.float64).eps

# Krylov refinement dimension: a Rayleigh-Ritz step on this many vectors
# separates nearly tied leading singular values that the iterate block
# cannot distinguish on its own.
_KRYLOV_DIM = 6

# Refinement triggers when the block's second Ritz value of the squared Gram
# operator exceeds this fraction of the first, i.e. sigma_2 / sigma_1 above
# 0.25 ** 0.25 ~ 0.71. The second Ritz value approaches sigma_2 from below,
# so the margin is generous; only clearly gapped spectra skip the extra
# Gram applications.
_TIE_RATIO = 0.25


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a validated 2-D float64 array (C order, all entries finite)."""
    a = np.ascontiguousarray(m, dtype=np.float64)
    if a.ndim != 2:
        raise NumericError(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise NumericError(f"{name} must be non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise NumericError(f"{name} has a non-finite entry at ({bad[0]}, {bad[1]})")
    return a


def semantic_distance(u, v) -> float:
    """Cosine-based distance 1 - <u, v> / (|u| |v|), clamped to [0, 2].

    Zero-norm input is an explicit error rather than a silent fallback:
    direction is undefined for the zero vector.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or v.ndim != 1 or u.shape != v.shape:
        raise NumericError(f"vectors must be 1-D of equal length, got {u.shape} and {v.shape}")
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise NumericError("semantic_distance: non-finite input")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise NumericError("semantic_distance is undefined for zero-norm vectors")
    d = 1.0 - float(np.dot(u, v)) / (nu * nv)
    # clamp drift: exact parallels/antiparallels may land epsilon outside [0, 2]
    if d < 0.0:
        return 0.0
    if d > 2.0:
        return 2.0
    return d


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD of a row-embedding matrix.

    singular_values : (k,) descending, strictly above RANK_RTOL * sigma_max.
    right_basis     : (k, d) orthonormal rows spanning the row space, each row
                      sign-canonicalized (largest-magnitude coordinate positive).
    left_factors    : (n, k) matching left singular vectors, or None when not
                      requested. When present, left_factors * diag(s) @ right_basis
                      reconstructs the input.
    """

    singular_values: np.ndarray
    right_basis: np.ndarray
    left_factors: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return int(self.singular_values.shape[0])


def _canonicalize_signs(vt: np.ndarray, u: np.ndarray | None) -> None:
    """Flip basis rows (and matching left columns) so each row's largest-magnitude
    coordinate is positive. Ties resolve to the lowest index via argmax. In place."""
    for i in range(vt.shape[0]):
        j = int(np.argmax(np.abs(vt[i])))
        if vt[i, j] < 0.0:
            vt[i] = -vt[i]
            if u is not None:
                u[:, i] = -u[:, i]


def svd(m, tolerance: float = RANK_RTOL, keep_left: bool = False) -> SvdResult:
    """Rank-revealing thin SVD with deterministic sign convention.

    Singular values below ``tolerance * sigma_max`` are truncated together with
    their singular vectors. A zero matrix yields rank 0 (empty factors).
    """
    a = as_matrix(m)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    smax = float(s[0]) if s.size else 0.0
    if smax == 0.0:
        k = 0
    else:
        k = int(np.count_nonzero(s >= tolerance * smax))
    u = np.ascontiguousarray(u[:, :k])
    s = np.ascontiguousarray(s[:k])
    vt = np.ascontiguousarray(vt[:k])
    _canonicalize_signs(vt, u)
    return SvdResult(
        singular_values=s,
        right_basis=vt,
        left_factors=u if keep_left else None,
    )


def _dense_sigma_max(a: np.ndarray) -> float:
    """Exact sigma_max via a symmetric eigensolve on the smaller Gram matrix."""
    n, d = a.shape
    g = a @ a.T if n <= d else a.T @ a
    lam = float(np.linalg.eigvalsh(g)[-1])
    return float(np.sqrt(lam)) if lam > 0.0 else 0.0


def _krylov_sigma(a: np.ndarray, block: np.ndarray) -> float:
    """Top Ritz value of the Gram operator on a small Krylov space.

    A converged iterate block can still carry an invisible deficit when more
    leading singular values nearly tie than the block holds; projecting the
    Gram operator onto the block's Krylov extension splits those modes.
    """
    d = a.shape[1]
    basis = np.empty((_KRYLOV_DIM, d))
    images = np.empty((_KRYLOV_DIM, d))
    size = block.shape[1]
    basis[:size] = block.T
    scale = 0.0
    i = 0
    while i < size:
        g = a.T @ (a @ basis[i])
        images[i] = g
        if i == 0:
            scale = float(np.linalg.norm(g))
        if size < _KRYLOV_DIM:
            # two projection passes keep the appended direction orthonormal
            r = g - basis[:size].T @ (basis[:size] @ g)
            r -= basis[:size].T @ (basis[:size] @ r)
            nr = float(np.linalg.norm(r))
            if nr > 1e-10 * scale:
                basis[size] = r / nr
                size += 1
        i += 1
    w = basis[:size]
    h = w @ images[:size].T
    h = (h + h.T) * 0.5
    lam = float(np.linalg.eigvalsh(h)[-1])
    return float(np.sqrt(lam)) if lam > 0.0 else 0.0


def _power_starts(a: np.ndarray, col_norms: np.ndarray) -> list[np.ndarray]:
    """Deterministic orthonormal start block for the Gram power iteration.

    The primary start is the column-norm profile; the secondary start is the
    first canonical basis vector (in decreasing column-norm order) that stays
    independent of the primary outside the null space. Either start can be
    unavailable for degenerate inputs, so the block has one or two vectors.
    """
    d = a.shape[1]
    starts: list[np.ndarray] = []
    v = col_norms / np.linalg.norm(col_norms)
    if float(np.linalg.norm(a @ v)) > 0.0:
        starts.append(v)
    for j in np.argsort(-col_norms, kind="stable"):
        if len(starts) == 2:
            break
        e = np.zeros(d)
        e[j] = 1.0
        for _ in range(2):
            for u in starts:
                e -= u * float(np.dot(u, e))
        ne = float(np.linalg.norm(e))
        if ne <= 1e-8:
            continue
        e = e / ne
        if float(np.linalg.norm(a @ e)) > 0.0:
            starts.append(e)
    return starts


def spectral_norm(m) -> float:
    """Largest singular value, by block power iteration on the Gram m^T m.

    Iterates a two-vector block V <- m^T (m V) with re-orthonormalization, so
    a nearly tied top pair converges at the rate set by the third singular
    value instead of stalling on the tiny internal gap. The per-step sigma
    estimate is the top Ritz value of the block; estimates increase with an
    asymptotically geometric tail, so each step extrapolates the remaining
    tail from the ratio of consecutive changes and accepts once that tail is
    below POWER_RTOL relative. When the accepted block reports a near-tied
    pair, a small Krylov Rayleigh-Ritz refinement recovers ties wider than
    the block. Spectra whose leading values tie more broadly still stall the
    iteration (change ratios pinned near one); those are resolved exactly
    with a dense eigensolve on the smaller Gram matrix, as is any run that
    exhausts POWER_MAX_STEPS.

    The start block is deterministic (column-norm profile plus a canonical
    basis vector, with probes past degenerate starts), so repeated calls on
    identical input return identical floats.
    """
    a = as_matrix(m)
    col_norms = np.linalg.norm(a, axis=0)
    top = float(col_norms.max())
    if top == 0.0:
        return 0.0
    starts = _power_starts(a, col_norms)
    if not starts:
        return 0.0

    block = np.stack(starts, axis=1)
    sigma = 0.0
    change_prev = 0.0
    stalled = 0
    for _ in range(POWER_MAX_STEPS):
        z = a.T @ (a @ block)
        if block.shape[1] == 2:
            g2 = z.T @ z
            h00 = float(g2[0, 0])
            h01 = float(g2[0, 1])
            h11 = float(g2[1, 1])
            mid = 0.5 * (h00 + h11)
            off = 0.5 * (h00 - h11)
            disc = (off * off + h01 * h01) ** 0.5
            lam = mid + disc
            lam2 = mid - disc
        else:
            h00 = float(np.dot(z[:, 0], z[:, 0]))
            lam = h00
            lam2 = 0.0
        if lam <= 0.0:
            break
        # Ritz of the squared Gram operator: sigma estimate is the 4th root
        new_sigma = lam**0.25
        change = abs(new_sigma - sigma)
        if sigma > 0.0:
            accept = change <= _NOISE_FLOOR * new_sigma
            if not accept and change_prev > 0.0:
                q = change / change_prev
                if q >= _STALL_Q:
                    stalled += 1
                    if stalled >= _STALL_STEPS:
                        break
                else:
                    stalled = 0
                accept = q < 1.0 and change * q / (1.0 - q) <= POWER_RTOL * new_sigma
            if accept:
                if lam2 > _TIE_RATIO * lam:
                    return _krylov_sigma(a, block)
                return new_sigma
        sigma = new_sigma
        change_prev = change

        n1 = h00**0.5
        if n1 == 0.0:
            break
        q1 = z[:, 0] / n1
        if block.shape[1] == 2:
            # classical Gram-Schmidt with the projection taken from the
            # already computed Gram entries; reorthogonalize only under
            # heavy cancellation
            q2 = z[:, 1] - (h01 / h00) * z[:, 0]
            n2 = float(np.linalg.norm(q2))
            if n2 <= 1e-3 * h11**0.5:
                q2 -= q1 * float(np.dot(q1, q2))
                n2 = float(np.linalg.norm(q2))
            if n2 <= 1e-12 * n1:
                # second direction collapsed: the Gram operator is
                # numerically rank one on the block, continue single-vector
                block = q1[:, None]
            else:
                block = np.stack([q1, q2 / n2], axis=1)
        else:
            block = q1[:, None]
    return _dense_sigma_max(a)
