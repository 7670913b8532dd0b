"""Dense linear-algebra primitives and subspace metrics.

Everything here is a pure function of its (immutable) inputs and is safe to
call from multiple threads.  Eigen- and singular-value decompositions are
delegated to LAPACK (bidiagonalization / tridiagonalization), so results are
deterministic and seed-independent.

Sign and rotation ambiguities of eigenvectors/singular vectors are *not*
normalized away: the quantities of interest are subspaces, and all
comparisons should go through the rotation-invariant metrics
:func:`sin_theta_loss` and :func:`two_to_inf_distance`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

__all__ = [
    "SvdError",
    "SvdFactors",
    "OperatorNorms",
    "thin_svd",
    "pseudoinverse",
    "principal_angle_cosines",
    "sin_theta_loss",
    "procrustes_align",
    "two_to_inf_distance",
    "operator_norms",
    "hadamard",
    "hadamard_inverse",
    "top_k_eigenvectors",
    "is_orthonormal",
    "require_frame",
]

# Relative singular-value cutoff used for rank decisions throughout.
DEFAULT_SVD_TOL = 1e-12

# Orthonormality slack for frame validation (columns^T columns vs identity).
FRAME_TOL = 1e-10


class SvdError(RuntimeError):
    """The underlying iterative eigen/SVD routine failed to converge."""


class SvdFactors(NamedTuple):
    """Thin SVD ``a = left @ diag(singular_values) @ right.T``."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray


@dataclass(frozen=True)
class OperatorNorms:
    """Collection of matrix norms: induced p->q norms plus entrywise norms."""

    one_to_one: float  # max column absolute sum
    two_to_inf: float  # max row Euclidean norm
    inf_to_inf: float  # max row absolute sum
    frobenius: float
    entrywise_l1: float
    entrywise_linf: float
    op: float  # spectral norm


def _as_matrix(a, name: str = "a", require_finite: bool = True) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {a.shape}")
    if require_finite and not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def is_orthonormal(v: np.ndarray, tol: float = FRAME_TOL) -> bool:
    """True if the columns of ``v`` are orthonormal within ``tol``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[0] < v.shape[1]:
        return False
    gram = v.T @ v
    return bool(np.abs(gram - np.eye(v.shape[1])).max() <= tol)


def require_frame(v, name: str = "frame", tol: float = FRAME_TOL) -> np.ndarray:
    """Validate that ``v`` is a d x K matrix with orthonormal columns."""
    v = _as_matrix(v, name)
    if v.shape[0] < v.shape[1]:
        raise ValueError(
            f"{name} must have at least as many rows as columns, got {v.shape}"
        )
    if not is_orthonormal(v, tol):
        raise ValueError(f"{name} does not have orthonormal columns (tol={tol:g})")
    return v


def _check_same_shape(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape:
        raise ValueError(f"frame shapes differ: {u.shape} vs {v.shape}")


def thin_svd(a, r: int | None = None) -> SvdFactors:
    """Top-``r`` singular value decomposition of a dense matrix.

    Parameters
    ----------
    a : (n, d) array_like
        Finite dense matrix.
    r : int, optional
        Number of factors to keep; defaults to ``min(n, d)``.

    Returns
    -------
    SvdFactors
        ``left`` (n, r) and ``right`` (d, r) have orthonormal columns and
        ``singular_values`` is nonincreasing and nonnegative.
    """
    a = _as_matrix(a)
    rmax = min(a.shape)
    if r is None:
        r = rmax
    if not 1 <= r <= rmax:
        raise ValueError(f"rank bound r={r} outside [1, {rmax}]")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - needs LAPACK failure
        raise SvdError(
            f"SVD of {a.shape[0]}x{a.shape[1]} matrix did not converge within the "
            f"QR-iteration limit of the underlying LAPACK routine: {exc}"
        ) from exc
    return SvdFactors(u[:, :r].copy(), s[:r].copy(), vt[:r].T.copy())


def pseudoinverse(a, tol: float = DEFAULT_SVD_TOL) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a relative singular-value cutoff.

    Singular values below ``tol * sigma_1`` are treated as zero, so
    rank-deficient inputs are handled without error.
    """
    a = _as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[1], a.shape[0]))
    keep = s > tol * s[0]
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def principal_angle_cosines(u, v) -> np.ndarray:
    """Cosines of the principal angles between two column spaces.

    Returns the singular values of ``u.T @ v`` clamped to [0, 1], in
    nonincreasing order.  Both arguments must be frames of the same shape.
    """
    u = _as_matrix(u, "u")
    v = _as_matrix(v, "v")
    _check_same_shape(u, v)
    s = np.linalg.svd(u.T @ v, compute_uv=False)
    return np.clip(s, 0.0, 1.0)


def sin_theta_loss(u, v) -> float:
    """Frobenius norm of the sines of the principal angles between subspaces.

    Rotation invariant, symmetric, with range [0, sqrt(K)] for K-column
    frames.  Zero iff the two column spaces coincide.

    Evaluated as ``||v - u (u^T v)||_F``, which equals
    ``sqrt(sum_j (1 - cos^2 theta_j))`` exactly for orthonormal inputs but
    stays accurate for nearly identical subspaces, where the cosine form
    loses all precision below ~1e-8.
    """
    u = require_frame(u, "u")
    v = require_frame(v, "v")
    _check_same_shape(u, v)
    resid = v - u @ (u.T @ v)
    return float(np.linalg.norm(resid))


def procrustes_align(v1, v2) -> np.ndarray:
    """Orthogonal K x K matrix ``w`` minimizing ``||v1 - v2 @ w||_F``.

    Computed from an SVD of ``v2.T @ v1``.  When that product is singular the
    minimizer is not unique; the factors returned by the SVD are used as-is,
    which yields one valid minimizer deterministically.
    """
    v1 = _as_matrix(v1, "v1")
    v2 = _as_matrix(v2, "v2")
    _check_same_shape(v1, v2)
    w1, _, w2t = np.linalg.svd(v2.T @ v1)
    return w1 @ w2t


def two_to_inf_distance(v1, v2) -> float:
    """Max row norm of ``v1 - v2 @ w`` after optimal orthogonal alignment.

    ``w`` is the Procrustes rotation from :func:`procrustes_align`; the result
    is invariant to right-rotation of either frame.
    """
    v1 = _as_matrix(v1, "v1")
    v2 = _as_matrix(v2, "v2")
    _check_same_shape(v1, v2)
    diff = v1 - v2 @ procrustes_align(v1, v2)
    return float(np.sqrt((diff**2).sum(axis=1).max()))


def operator_norms(a) -> OperatorNorms:
    """Standard induced and entrywise norms of a dense matrix."""
    a = _as_matrix(a)
    abs_a = np.abs(a)
    return OperatorNorms(
        one_to_one=float(abs_a.sum(axis=0).max()),
        two_to_inf=float(np.sqrt((a**2).sum(axis=1).max())),
        inf_to_inf=float(abs_a.sum(axis=1).max()),
        frobenius=float(np.linalg.norm(a)),
        entrywise_l1=float(abs_a.sum()),
        entrywise_linf=float(abs_a.max()),
        op=float(np.linalg.svd(a, compute_uv=False)[0]),
    )


def hadamard(a, b) -> np.ndarray:
    """Entrywise product of two same-shape matrices."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def hadamard_inverse(a) -> np.ndarray:
    """Entrywise reciprocal; every entry of ``a`` must be nonzero."""
    a = _as_matrix(a)
    zeros = np.argwhere(a == 0.0)
    if zeros.size:
        i, j = zeros[0]
        raise ValueError(
            f"hadamard inverse undefined: zero entry at row {i}, column {j}"
        )
    return 1.0 / a


def top_k_eigenvectors(g, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-``k`` eigenpairs (algebraically largest) of a symmetric matrix.

    ``g`` must be symmetric within a small tolerance and is symmetrized by
    averaging before factorization.  It need not be positive semidefinite;
    "top" means largest signed eigenvalues.

    Returns
    -------
    (frame, eigenvalues)
        ``frame`` is d x k with orthonormal columns; ``eigenvalues`` is
        nonincreasing, ``eigenvalues[j]`` matching ``frame[:, j]``.
    """
    g = _as_matrix(g, "g")
    d = g.shape[0]
    if g.shape[1] != d:
        raise ValueError(f"matrix must be square, got {g.shape}")
    if not 1 <= k <= d:
        raise ValueError(f"k={k} outside [1, {d}]")
    asym = np.abs(g - g.T).max()
    if asym > 1e-10 * max(1.0, np.abs(g).max()):
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:.3e})")
    g = (g + g.T) / 2.0
    try:
        # finiteness was already validated above; skip scipy's second pass
        vals, vecs = scipy.linalg.eigh(
            g, subset_by_index=[d - k, d - 1], check_finite=False
        )
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover
        raise SvdError(f"eigendecomposition of {d}x{d} matrix failed: {exc}") from exc
    order = np.argsort(vals)[::-1]  # ascending from LAPACK -> descending
    return vecs[:, order], vals[order]
