"""Independent brute-force oracles used to cross-check the library.

These deliberately avoid the code paths under test: the eigensolver is a
plain cyclic Jacobi iteration, and the helpers below build random frames the
slow, obvious way.
"""

from __future__ import annotations

import numpy as np


def jacobi_eigh(a, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a small symmetric matrix by Jacobi rotations.

    Returns (eigenvalues descending, eigenvectors as columns).
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    assert a.shape == (n, n) and np.allclose(a, a.T)
    v = np.eye(n)
    scale = max(np.abs(a).max(), 1e-300)
    for _ in range(max_sweeps):
        off = np.abs(a - np.diag(np.diag(a))).max()
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-18 * scale:
                    continue
                theta = 0.5 * np.arctan2(2.0 * a[p, q], a[q, q] - a[p, p])
                c, s = np.cos(theta), np.sin(theta)
                # a <- J^T a J with the rotation in the (p, q) plane
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    order = np.argsort(np.diag(a))[::-1]
    return np.diag(a)[order], v[:, order]


def random_frame(rng: np.random.Generator, d: int, k: int) -> np.ndarray:
    """Haar-ish random d x k frame via QR of a Gaussian matrix."""
    q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return q


def random_orthogonal(rng: np.random.Generator, k: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    return q


def sin_theta_via_gram(u, v) -> float:
    """Subspace loss from the eigenvalues of (u^T v)(u^T v)^T."""
    m = np.asarray(u).T @ np.asarray(v)
    cos_sq, _ = jacobi_eigh(m @ m.T)
    cos_sq = np.clip(cos_sq, 0.0, 1.0)
    return float(np.sqrt(np.sum(1.0 - cos_sq)))
