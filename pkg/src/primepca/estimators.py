"""Eigenspace estimators for partially observed data.

Two one-shot spectral estimators plus the iterative refinement algorithm:

* :func:`ipw_covariance` reweights the zero-filled sample covariance by
  inverse observation probabilities estimated under homogeneous missingness.
* :func:`init_covariance` replaces those weights with per-entry empirical
  co-observation weights, which remain valid under heterogeneous missingness;
  its top eigenvectors (:func:`init_estimator`) are the standard initializer.
* :func:`prime_pca` alternates a row-screening step with :func:`refine`,
  which imputes missing entries by regressing each row's observed entries on
  the current frame and then re-extracts the leading right singular space of
  the imputed matrix.

All entry points are pure functions of immutable inputs.  The per-row
regressions inside :func:`refine` are independent; they are executed as
batched SVDs grouped by observed-row size, so results do not depend on any
execution schedule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import PartialMatrix, ScoreMatrix, coobservation_counts, observed_fraction
from .linalg import (
    DEFAULT_SVD_TOL,
    require_frame,
    sin_theta_loss,
    top_k_eigenvectors,
)

__all__ = [
    "ScreeningEmptyError",
    "PrimeConfig",
    "TrajectoryReport",
    "homogeneous_weights",
    "ipw_covariance",
    "init_weights",
    "init_covariance",
    "init_estimator",
    "refine",
    "screen_rows",
    "prime_pca",
    "estimate_scores",
    "reconstruct_covariance",
    "incoherence",
    "center_columns",
]


class ScreeningEmptyError(RuntimeError):
    """Row screening retained nothing, so refinement cannot proceed."""


@dataclass(frozen=True)
class PrimeConfig:
    """Knobs of the iterative refinement loop.

    ``sigma_star`` controls row screening (larger admits more rows);
    ``kappa_star`` stops the loop once consecutive iterates are closer than
    this in subspace loss.  Use ``kappa_star=0`` to always run ``n_iter``
    refinements, e.g. in exact-recovery studies; the default suits noisy
    data.  ``center`` removes per-column means of the observed entries
    before estimation.
    """

    k: int
    n_iter: int = 1000
    sigma_star: float = 3.0
    kappa_star: float = 1e-6
    center: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.n_iter < 1:
            raise ValueError(f"n_iter must be >= 1, got {self.n_iter}")
        if not self.sigma_star > 0:
            raise ValueError(f"sigma_star must be > 0, got {self.sigma_star}")
        if self.kappa_star < 0:
            raise ValueError(f"kappa_star must be >= 0, got {self.kappa_star}")


@dataclass(frozen=True)
class TrajectoryReport:
    """Everything recorded along one :func:`prime_pca` run.

    Arrays have one entry per executed iteration; ``losses`` is present only
    when a reference frame was supplied, and ``initial_loss`` then holds the
    loss of the starting iterate.
    """

    frame: np.ndarray
    iterations: int
    stop_reason: str  # "converged" | "max_iter"
    step_changes: np.ndarray
    screened_sizes: np.ndarray
    losses: np.ndarray | None = None
    initial_loss: float | None = None


# ---------------------------------------------------------------------------
# One-shot weighted covariance estimators
# ---------------------------------------------------------------------------


def homogeneous_weights(p_hat: float, d: int) -> np.ndarray:
    """Inverse-probability weights for a single observation rate ``p_hat``.

    Off-diagonal entries are ``1/p_hat**2`` (pairs are co-observed with
    probability ``p_hat**2``), diagonal entries ``1/p_hat``.
    """
    if not 0.0 < p_hat <= 1.0:
        raise ValueError(f"p_hat must lie in (0, 1], got {p_hat}")
    w = np.full((d, d), p_hat**-2)
    np.fill_diagonal(w, 1.0 / p_hat)
    return w


def ipw_covariance(pm: PartialMatrix) -> np.ndarray:
    """Bias-corrected covariance estimate under homogeneous missingness.

    The zero-filled second-moment matrix is reweighted entrywise so that,
    conditionally on the data, its expectation over masks equals the
    fully observed sample covariance.  Fails if nothing is observed.
    """
    p_hat = observed_fraction(pm)
    if p_hat == 0.0:
        raise ValueError("cannot estimate covariance: no observed entries")
    gram = pm.values.T @ pm.values / pm.n
    return gram * homogeneous_weights(p_hat, pm.d)


def init_weights(pm: PartialMatrix) -> np.ndarray:
    """Empirical co-observation weights ``n / count(j, k)``, 0 where never co-observed."""
    counts = coobservation_counts(pm).astype(float)
    with np.errstate(divide="ignore"):
        w = np.where(counts > 0, pm.n / np.where(counts > 0, counts, 1.0), 0.0)
    return w


def init_covariance(pm: PartialMatrix) -> np.ndarray:
    """Heterogeneity-robust weighted covariance (may be indefinite).

    Equivalent to averaging each product ``y_ij * y_ik`` over exactly the
    rows where both columns were observed.
    """
    gram = pm.values.T @ pm.values / pm.n
    return gram * init_weights(pm)


def init_estimator(pm: PartialMatrix, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-``k`` eigenpairs of :func:`init_covariance`: the standard initializer."""
    if not 1 <= k <= pm.d:
        raise ValueError(f"k={k} outside [1, {pm.d}]")
    return top_k_eigenvectors(init_covariance(pm), k)


def center_columns(pm: PartialMatrix) -> PartialMatrix:
    """Subtract each column's mean over its observed entries."""
    counts = pm.mask.sum(axis=0)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, pm.values.sum(axis=0) / np.maximum(counts, 1), 0.0)
    return PartialMatrix.from_dense(pm.values - means, pm.mask)


# ---------------------------------------------------------------------------
# Row bookkeeping for the batched per-row regressions
# ---------------------------------------------------------------------------


def _row_groups(mask: np.ndarray) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Bucket rows by observed count m: list of (m, row_ids, col_ids (r, m))."""
    counts = mask.sum(axis=1)
    groups = []
    for m in np.unique(counts):
        if m == 0:
            continue
        rows = np.flatnonzero(counts == m)
        cols = np.nonzero(mask[rows])[1].reshape(rows.size, int(m))
        groups.append((int(m), rows, cols))
    return groups


def _lstsq_batch(u, s, vt, b, tol: float) -> np.ndarray:
    """Minimum-norm least-squares solutions from batched SVD factors.

    Singular values at or below ``tol * s_max`` (per problem) are dropped, so
    rank-deficient sub-frames degrade to the tolerance pseudoinverse instead
    of blowing up.
    """
    cutoff = tol * s[:, :1]
    safe = np.where(s > 0, s, 1.0)
    sinv = np.where(s > cutoff, 1.0 / safe, 0.0)
    t1 = np.einsum("rmk,rm->rk", u, b)
    return np.einsum("rkj,rk->rj", vt, t1 * sinv)


def _regress_rows(
    v: np.ndarray,
    values: np.ndarray,
    groups,
    tol: float = DEFAULT_SVD_TOL,
) -> np.ndarray:
    """Score of every grouped row: regress its observed entries on ``v``'s rows."""
    out = np.zeros((values.shape[0], v.shape[1]))
    for m, rows, cols in groups:
        a = v[cols]
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        b = values[rows[:, None], cols]
        out[rows] = _lstsq_batch(u, s, vt, b, tol)
    return out


def _extract_frame(values, mask, scores, v, k) -> np.ndarray:
    """Top-k right singular space of the imputed matrix.

    The imputed matrix keeps observed entries and fills the rest with the
    projection ``scores @ v.T``; its leading right singular vectors are read
    off the eigendecomposition of the d x d Gram matrix, which is much
    cheaper than a full SVD for tall matrices and yields the same subspace.
    """
    y_hat = np.where(mask, values, scores @ v.T)
    frame, _ = top_k_eigenvectors(y_hat.T @ y_hat, k)
    return frame


# ---------------------------------------------------------------------------
# Refinement loop
# ---------------------------------------------------------------------------


def refine(k: int, v_in, pm: PartialMatrix) -> np.ndarray:
    """One refinement pass: impute against ``v_in``, re-extract the top space.

    Every row must have at least one observed entry.  Each row's observed
    entries are regressed on the corresponding rows of ``v_in`` (tolerance
    pseudoinverse), missing entries are imputed from the fitted projection,
    and the output frame is the top-``k`` right singular space of the
    completed matrix.
    """
    if not 1 <= k <= min(pm.n, pm.d):
        raise ValueError(f"k={k} outside [1, min(n, d)={min(pm.n, pm.d)}]")
    v_in = require_frame(v_in, "v_in")
    if v_in.shape != (pm.d, k):
        raise ValueError(f"v_in shape {v_in.shape} does not match ({pm.d}, {k})")
    counts = pm.observed_counts()
    if counts.min() == 0:
        bad = int(np.argmin(counts))
        raise ValueError(f"row {bad} has no observed entries")
    groups = _row_groups(pm.mask)
    scores = _regress_rows(v_in, pm.values, groups)
    return _extract_frame(pm.values, pm.mask, scores, v_in, k)


def screen_rows(k: int, v, pm: PartialMatrix, sigma_star: float) -> np.ndarray:
    """Rows informative enough for a well-posed regression on ``v``.

    Keeps row i when it has strictly more than ``k`` observed entries and the
    k-th singular value of the observed sub-frame is at least
    ``sqrt(|J_i| / d) / sigma_star`` (ties retained).  Returns sorted row
    indices; an empty result is returned as-is, callers decide whether that
    is fatal.
    """
    if not sigma_star > 0:
        raise ValueError(f"sigma_star must be > 0, got {sigma_star}")
    v = require_frame(v, "v")
    if v.shape != (pm.d, k):
        raise ValueError(f"v shape {v.shape} does not match ({pm.d}, {k})")
    retained = []
    for m, rows, cols in _row_groups(pm.mask):
        if m <= k:
            continue
        s = np.linalg.svd(v[cols], compute_uv=False)
        keep = s[:, k - 1] >= np.sqrt(m / pm.d) / sigma_star
        retained.append(rows[keep])
    if not retained:
        return np.empty(0, dtype=int)
    return np.sort(np.concatenate(retained))


def _screen_and_refine(v, values, mask, groups, k, d, sigma_star, tol):
    """Fused screening + refinement used inside the iteration loop.

    Reuses one batched SVD per row-size group for both the screening
    criterion and the per-row regression.  Returns (next frame, number of
    retained rows); the caller treats zero retained rows as an error.
    """
    kept_rows = []
    kept_scores = []
    for m, rows, cols in groups:
        if m <= k:
            continue
        a = v[cols]
        u, s, vt = np.linalg.svd(a, full_matrices=False)
        keep = s[:, k - 1] >= np.sqrt(m / d) / sigma_star
        if not keep.any():
            continue
        rows_k = rows[keep]
        b = values[rows_k[:, None], cols[keep]]
        kept_scores.append(_lstsq_batch(u[keep], s[keep], vt[keep], b, tol))
        kept_rows.append(rows_k)
    if not kept_rows:
        return None, 0
    rows_all = np.concatenate(kept_rows)
    scores_all = np.concatenate(kept_scores)
    frame = _extract_frame(values[rows_all], mask[rows_all], scores_all, v, k)
    return frame, rows_all.size


def prime_pca(
    cfg: PrimeConfig,
    v0,
    pm: PartialMatrix,
    truth=None,
) -> TrajectoryReport:
    """Iterative eigenspace estimation by screening and refinement.

    Starting from the orthonormal ``v0``, each iteration screens rows against
    the current iterate (see :func:`screen_rows`), refines on the retained
    rows, and stops early once the subspace loss between consecutive iterates
    drops below ``cfg.kappa_star``.  If ``truth`` is given, the loss of every
    iterate against it is recorded.

    Raises
    ------
    ScreeningEmptyError
        If at some iteration no row passes screening.
    """
    v0 = require_frame(v0, "v0")
    if v0.shape != (pm.d, cfg.k):
        raise ValueError(f"v0 shape {v0.shape} does not match ({pm.d}, {cfg.k})")
    if truth is not None:
        truth = require_frame(truth, "truth")
        if truth.shape != v0.shape:
            raise ValueError(f"truth shape {truth.shape} does not match {v0.shape}")
    if cfg.center:
        pm = center_columns(pm)
    groups = _row_groups(pm.mask)

    v_prev = v0
    steps: list[float] = []
    sizes: list[int] = []
    losses: list[float] = []
    initial_loss = None if truth is None else sin_theta_loss(v0, truth)
    stop_reason = "max_iter"
    for t in range(1, cfg.n_iter + 1):
        v_next, n_kept = _screen_and_refine(
            v_prev, pm.values, pm.mask, groups, cfg.k, pm.d, cfg.sigma_star,
            DEFAULT_SVD_TOL,
        )
        if n_kept == 0:
            raise ScreeningEmptyError(
                f"screening retained no rows at iteration {t} "
                f"(k={cfg.k}, sigma_star={cfg.sigma_star})"
            )
        step = sin_theta_loss(v_next, v_prev)
        steps.append(step)
        sizes.append(n_kept)
        if truth is not None:
            losses.append(sin_theta_loss(v_next, truth))
        v_prev = v_next
        if step < cfg.kappa_star:
            stop_reason = "converged"
            break
    return TrajectoryReport(
        frame=v_prev,
        iterations=len(steps),
        stop_reason=stop_reason,
        step_changes=np.array(steps),
        screened_sizes=np.array(sizes, dtype=int),
        losses=None if truth is None else np.array(losses),
        initial_loss=initial_loss,
    )


# ---------------------------------------------------------------------------
# Scores and derived quantities
# ---------------------------------------------------------------------------


def estimate_scores(v, pm: PartialMatrix, k: int) -> ScoreMatrix:
    """Per-row scores against the frame ``v`` for sufficiently observed rows.

    Rows with at most ``k`` observed entries are dropped; every retained
    row's observed entries are regressed on the corresponding rows of ``v``.
    """
    v = require_frame(v, "v")
    if v.shape != (pm.d, k):
        raise ValueError(f"v shape {v.shape} does not match ({pm.d}, {k})")
    retained = np.flatnonzero(pm.observed_counts() > k)
    sub = pm.restrict_rows(retained)
    scores = _regress_rows(v, sub.values, _row_groups(sub.mask))
    return ScoreMatrix(scores=scores, rows=retained)


def reconstruct_covariance(
    v, scores: ScoreMatrix, n: int
) -> tuple[np.ndarray, np.ndarray]:
    """Rank-``K`` covariance estimate from fitted rows, with its spectrum.

    Averages the outer products of the fitted rows ``v @ u_i`` over all ``n``
    rows of the original matrix (rows without scores contribute zero).
    Returns the d x d estimate and its ``K`` leading eigenvalues, descending.
    """
    v = require_frame(v, "v")
    if scores.scores.shape[1] != v.shape[1]:
        raise ValueError(
            f"scores have {scores.scores.shape[1]} components, frame has "
            f"{v.shape[1]}"
        )
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    small = scores.scores.T @ scores.scores / n  # K x K; same nonzero spectrum
    sigma_y = v @ small @ v.T
    eigvals = np.sort(np.linalg.eigvalsh((small + small.T) / 2.0))[::-1]
    return sigma_y, eigvals


def incoherence(v) -> float:
    """``sqrt(d)`` times the largest absolute entry of the frame.

    Equals 1 for maximally spread sign frames and ``sqrt(d)`` for a standard
    basis vector; large values flag coordinates that dominate the subspace.
    """
    v = require_frame(v, "v")
    return float(np.sqrt(v.shape[0]) * np.abs(v).max())
