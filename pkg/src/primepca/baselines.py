"""Matrix-completion baselines: soft- and hard-thresholded iterative SVD.

Both methods iterate "fill the missing entries from the current completion,
then shrink the singular values": the soft variant subtracts ``lam`` from
every singular value (capped at ``rank_max`` factors), the hard variant
keeps exactly the top ``k`` singular values.  The completion is initialized
with zeros at the missing entries and iterated until the relative Frobenius
change falls below ``thresh``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .data import PartialMatrix
from .linalg import sin_theta_loss, top_k_eigenvectors

__all__ = [
    "ImputeConfig",
    "soft_impute",
    "hard_impute",
    "oracle_lambda",
    "default_lambda_grid",
]


@dataclass(frozen=True)
class ImputeConfig:
    """Settings shared by the completion baselines.

    ``lam`` is the per-iteration singular-value shrinkage (soft variant
    only), ``rank_max`` caps the number of retained factors, and iteration
    stops when the completed matrix changes by less than ``thresh`` in
    relative Frobenius norm.
    """

    lam: float = 0.0
    rank_max: int = 20
    thresh: float = 1e-5
    max_iter: int = 100

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if self.rank_max < 1:
            raise ValueError(f"rank_max must be >= 1, got {self.rank_max}")
        if not self.thresh > 0:
            raise ValueError(f"thresh must be > 0, got {self.thresh}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")


def _svt_path(
    pm: PartialMatrix, lam: float, rank: int, max_iter: int, thresh: float
) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray, float]]:
    """Yield (completion, shrunk singular values, right factors, rel change).

    Each step thresholds the SVD of ``observed entries + current fill``.  The
    top factors are read off the eigendecomposition of the d x d Gram matrix,
    which matches a full SVD on the leading ``rank`` factors at much lower
    cost for tall inputs.
    """
    values, mask = pm.values, pm.mask
    rank = min(rank, pm.n, pm.d)
    x = values.copy()
    for _ in range(max_iter):
        z = np.where(mask, values, x)
        gram = z.T @ z
        vecs, eigvals = top_k_eigenvectors(gram, rank)
        sigma = np.sqrt(np.maximum(eigvals, 0.0))
        shrunk = np.maximum(sigma - lam, 0.0)
        nonzero = sigma > 1e-12 * max(sigma[0], 1e-300)
        ratio = np.where(nonzero, shrunk / np.where(nonzero, sigma, 1.0), 0.0)
        x_new = ((z @ vecs) * ratio) @ vecs.T
        denom = max(float(np.linalg.norm(x)), 1e-30)
        rel = float(np.linalg.norm(x_new - x)) / denom
        x = x_new
        yield x, shrunk, vecs, rel
        if rel < thresh:
            return


def soft_impute(
    pm: PartialMatrix, cfg: ImputeConfig, k: int
) -> tuple[np.ndarray, np.ndarray]:
    """Nuclear-norm-shrunk completion and its top-``k`` right singular frame.

    Returns the final low-rank iterate (missing entries imputed, observed
    entries approximated) and the ``k`` leading right singular vectors of it.
    """
    if not 1 <= k <= min(cfg.rank_max, pm.n, pm.d):
        raise ValueError(
            f"k={k} outside [1, min(rank_max, n, d)="
            f"{min(cfg.rank_max, pm.n, pm.d)}]"
        )
    x = pm.values
    vecs = None
    for x, _, vecs, _ in _svt_path(pm, cfg.lam, cfg.rank_max, cfg.max_iter, cfg.thresh):
        pass
    assert vecs is not None  # max_iter >= 1
    return x, vecs[:, :k].copy()


def hard_impute(
    pm: PartialMatrix, k: int, cfg: ImputeConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-rank completion: rank-``k`` truncated SVD iteration, no shrinkage.

    The returned matrix keeps the observed entries exactly and fills the rest
    from the final rank-``k`` iterate; the frame holds that iterate's right
    singular vectors.  ``cfg.lam`` and ``cfg.rank_max`` are ignored.
    """
    if not 1 <= k <= min(pm.n, pm.d):
        raise ValueError(f"k={k} outside [1, min(n, d)={min(pm.n, pm.d)}]")
    x = pm.values
    vecs = None
    for x, _, vecs, _ in _svt_path(pm, 0.0, k, cfg.max_iter, cfg.thresh):
        pass
    assert vecs is not None
    completed = np.where(pm.mask, pm.values, x)
    return completed, vecs[:, :k].copy()


def svt_objective(pm: PartialMatrix, x: np.ndarray, shrunk: np.ndarray, lam: float) -> float:
    """Penalized completion objective: half squared fit error + lam * nuclear norm."""
    resid = np.where(pm.mask, pm.values - x, 0.0)
    return 0.5 * float((resid**2).sum()) + lam * float(shrunk.sum())


def default_lambda_grid(pm: PartialMatrix, size: int = 20) -> np.ndarray:
    """Log-spaced shrinkage grid from ``sigma_1 * 1e-3`` up to ``sigma_1``."""
    sigma1 = float(np.linalg.svd(pm.values, compute_uv=False)[0])
    if sigma1 == 0.0:
        return np.zeros(size)
    return np.geomspace(sigma1 * 1e-3, sigma1, size)


def oracle_lambda(
    pm: PartialMatrix,
    truth,
    k: int,
    grid=None,
    cfg: ImputeConfig | None = None,
) -> tuple[float, float]:
    """Exhaustive shrinkage selection against a reference frame.

    Runs :func:`soft_impute` for every grid value and returns the
    ``(lam, loss)`` pair minimizing the subspace loss of the fitted frame
    against ``truth``; ties go to the smaller ``lam``.
    """
    if cfg is None:
        cfg = ImputeConfig()
    if grid is None:
        grid = default_lambda_grid(pm)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid must be nonempty")
    best_lam, best_loss = None, np.inf
    for lam in np.sort(grid):
        _, frame = soft_impute(pm, dataclasses.replace(cfg, lam=float(lam)), k)
        loss = sin_theta_loss(frame, truth)
        if loss < best_loss:
            best_lam, best_loss = float(lam), loss
    return best_lam, best_loss
