import numpy as np
import pytest

from primepca.linalg import (
    hadamard,
    hadamard_inverse,
    is_orthonormal,
    operator_norms,
    principal_angle_cosines,
    procrustes_align,
    pseudoinverse,
    sin_theta_loss,
    thin_svd,
    top_k_eigenvectors,
    two_to_inf_distance,
)

from oracles import jacobi_eigh, random_frame, random_orthogonal, sin_theta_via_gram


# ---------------------------------------------------------------------------
# thin_svd
# ---------------------------------------------------------------------------


def test_thin_svd_identity():
    f = thin_svd(np.eye(3), 3)
    assert np.allclose(f.singular_values, [1.0, 1.0, 1.0])
    assert np.allclose(f.left @ np.diag(f.singular_values) @ f.right.T, np.eye(3))


def test_thin_svd_diagonal_truncated():
    f = thin_svd(np.diag([3.0, 2.0, 1.0]), 2)
    assert np.allclose(f.singular_values, [3.0, 2.0])
    assert np.allclose(np.abs(f.right), np.eye(3)[:, :2], atol=1e-12)


def test_thin_svd_matches_gram_eigendecomposition():
    a = np.random.default_rng(7).standard_normal((5, 4))
    f = thin_svd(a)
    lam, vecs = jacobi_eigh(a.T @ a)
    assert np.allclose(f.singular_values**2, lam, rtol=1e-10)
    # random spectrum has distinct values, so vectors match up to sign
    for j in range(4):
        assert abs(f.right[:, j] @ vecs[:, j]) == pytest.approx(1.0, abs=1e-10)


def test_thin_svd_invariants():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((6, 4))
    f = thin_svd(a)
    op = f.singular_values[0]
    assert np.all(np.diff(f.singular_values) <= 0)
    assert is_orthonormal(f.left) and is_orthonormal(f.right)
    recon = f.left @ np.diag(f.singular_values) @ f.right.T
    assert np.linalg.norm(recon - a) <= 1e-8 * np.linalg.norm(a)
    for j in range(4):
        resid = a @ f.right[:, j] - f.singular_values[j] * f.left[:, j]
        assert np.linalg.norm(resid) <= 1e-8 * op


def test_thin_svd_rank_bound():
    with pytest.raises(ValueError):
        thin_svd(np.eye(3), 4)
    with pytest.raises(ValueError):
        thin_svd(np.array([[np.nan, 0.0], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# pseudoinverse
# ---------------------------------------------------------------------------


def test_pseudoinverse_diagonal():
    assert np.allclose(pseudoinverse(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))


def test_pseudoinverse_zero_matrix():
    assert np.array_equal(pseudoinverse(np.zeros((3, 2))), np.zeros((2, 3)))


def test_pseudoinverse_penrose_identities():
    a = np.random.default_rng(3).standard_normal((3, 2))
    ai = pseudoinverse(a)
    assert np.allclose(a @ ai @ a, a, atol=1e-8)
    assert np.allclose(ai @ a @ ai, ai, atol=1e-8)
    assert np.allclose((a @ ai).T, a @ ai, atol=1e-8)
    assert np.allclose((ai @ a).T, ai @ a, atol=1e-8)


def test_pseudoinverse_rank_deficient_is_finite():
    a = np.ones((4, 3))  # rank 1
    ai = pseudoinverse(a)
    assert np.isfinite(ai).all()
    assert np.allclose(a @ ai @ a, a, atol=1e-10)


# ---------------------------------------------------------------------------
# principal angles / sin-theta loss
# ---------------------------------------------------------------------------


def test_principal_angles_identical_subspaces():
    v = random_frame(np.random.default_rng(0), 5, 2)
    assert np.allclose(principal_angle_cosines(v, v), [1.0, 1.0])


def test_principal_angles_orthogonal_lines():
    e1 = np.eye(3)[:, :1]
    e2 = np.eye(3)[:, 1:2]
    assert principal_angle_cosines(e1, e2)[0] == pytest.approx(0.0, abs=1e-14)


def test_principal_angles_diagonal_line():
    e1 = np.eye(3)[:, :1]
    diag = np.array([[1.0], [1.0], [0.0]]) / np.sqrt(2)
    assert principal_angle_cosines(e1, diag)[0] == pytest.approx(1 / np.sqrt(2))


def test_sin_theta_rotation_gives_zero_loss():
    rng = np.random.default_rng(1)
    v = random_frame(rng, 6, 2)
    o = random_orthogonal(rng, 2)
    assert sin_theta_loss(v, v @ o) <= 1e-10


def test_sin_theta_orthogonal_spikes():
    # the two equally plausible leading directions differing in one sign
    d = 6
    alpha = np.zeros((d, 1))
    alpha[0, 0] = alpha[1, 0] = 1 / np.sqrt(2)
    alpha_prime = alpha.copy()
    alpha_prime[1, 0] *= -1
    assert sin_theta_loss(alpha, alpha_prime) == pytest.approx(1.0, abs=1e-12)


def test_sin_theta_matches_gram_oracle():
    rng = np.random.default_rng(42)
    u = random_frame(rng, 6, 2)
    v = random_frame(rng, 6, 2)
    assert sin_theta_loss(u, v) == pytest.approx(sin_theta_via_gram(u, v), abs=1e-12)


def test_sin_theta_dimension_mismatch():
    with pytest.raises(ValueError):
        sin_theta_loss(np.eye(4)[:, :2], np.eye(5)[:, :2])


# ---------------------------------------------------------------------------
# Procrustes alignment / two-to-infinity distance
# ---------------------------------------------------------------------------


def test_procrustes_identity():
    v = random_frame(np.random.default_rng(2), 7, 3)
    assert np.allclose(procrustes_align(v, v), np.eye(3), atol=1e-12)


def test_procrustes_recovers_exact_rotation():
    rng = np.random.default_rng(5)
    v2 = random_frame(rng, 7, 3)
    o = random_orthogonal(rng, 3)
    assert np.allclose(procrustes_align(v2 @ o, v2), o, atol=1e-10)


def test_procrustes_beats_random_search():
    rng = np.random.default_rng(8)
    v2 = random_frame(rng, 7, 2)
    v1, _ = np.linalg.qr(v2 + 0.3 * rng.standard_normal((7, 2)))
    w = procrustes_align(v1, v2)
    best = np.linalg.norm(v1 - v2 @ w)
    for _ in range(1000):
        cand = random_orthogonal(rng, 2)
        assert best <= np.linalg.norm(v1 - v2 @ cand) + 1e-12


def test_two_to_inf_rotation_invariance():
    rng = np.random.default_rng(9)
    v = random_frame(rng, 8, 3)
    o1, o2 = random_orthogonal(rng, 3), random_orthogonal(rng, 3)
    assert two_to_inf_distance(v @ o1, v @ o2) <= 1e-10


def test_two_to_inf_sign_enumeration_oracle():
    # K = 1 frames along the first two axes of the plane: the optimal signed
    # alignment is found by enumerating both candidates.
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    expected = min(
        np.sqrt(((e1 - e2 * w) ** 2).sum(axis=1).max()) for w in (-1.0, 1.0)
    )
    assert two_to_inf_distance(e1, e2) == pytest.approx(expected)
    assert expected == pytest.approx(1.0)


def test_two_to_inf_matches_rowwise_recomputation():
    rng = np.random.default_rng(12)
    v2 = random_frame(rng, 9, 2)
    v1, _ = np.linalg.qr(v2 + 0.1 * rng.standard_normal((9, 2)))
    w = procrustes_align(v1, v2)
    diff = v1 - v2 @ w
    expected = max(np.linalg.norm(diff[i]) for i in range(9))
    assert two_to_inf_distance(v1, v2) == pytest.approx(expected, abs=1e-14)


# ---------------------------------------------------------------------------
# operator norms / hadamard
# ---------------------------------------------------------------------------


def test_operator_norms_identity():
    n = operator_norms(np.eye(4))
    assert n.one_to_one == n.inf_to_inf == n.two_to_inf == n.op == 1.0
    assert n.frobenius == pytest.approx(2.0)


def test_operator_norms_hand_case():
    n = operator_norms(np.array([[1.0, -2.0], [3.0, 4.0]]))
    assert n.one_to_one == 6.0
    assert n.inf_to_inf == 7.0
    assert n.two_to_inf == 5.0
    assert n.entrywise_l1 == 10.0
    assert n.entrywise_linf == 4.0
    assert n.frobenius == pytest.approx(np.sqrt(30.0))


def test_operator_norms_all_ones():
    d = 6
    n = operator_norms(np.ones((d, d)))
    assert n.one_to_one == d
    assert n.two_to_inf == pytest.approx(np.sqrt(d))
    assert n.op == pytest.approx(d)


def test_hadamard_with_ones():
    a = np.arange(6.0).reshape(2, 3)
    assert np.array_equal(hadamard(a, np.ones((2, 3))), a)
    with pytest.raises(ValueError):
        hadamard(a, np.ones((3, 2)))


def test_hadamard_inverse():
    assert np.array_equal(hadamard_inverse(np.ones((2, 2))), np.ones((2, 2)))
    inv = hadamard_inverse(np.array([[2.0, 4.0], [5.0, 10.0]]))
    assert np.array_equal(inv, np.array([[0.5, 0.25], [0.2, 0.1]]))


def test_hadamard_inverse_names_zero_entry():
    with pytest.raises(ValueError, match=r"row 1, column 0"):
        hadamard_inverse(np.array([[1.0, 2.0], [0.0, 3.0]]))


# ---------------------------------------------------------------------------
# top-k eigenvectors
# ---------------------------------------------------------------------------


def test_top_k_diagonal():
    frame, vals = top_k_eigenvectors(np.diag([5.0, 3.0, 1.0]), 2)
    assert np.allclose(vals, [5.0, 3.0])
    assert np.allclose(np.abs(frame), np.eye(3)[:, :2], atol=1e-12)


def test_top_k_spiked_identity():
    d = 6
    beta = np.zeros(d)
    beta[0] = beta[1] = 1 / np.sqrt(2)
    frame, vals = top_k_eigenvectors(np.eye(d) + np.outer(beta, beta), 1)
    assert vals[0] == pytest.approx(2.0)
    assert abs(frame[:, 0] @ beta) == pytest.approx(1.0, abs=1e-12)


def test_top_k_matches_jacobi_oracle():
    rng = np.random.default_rng(21)
    g = rng.standard_normal((8, 8))
    g = g + g.T
    frame, vals = top_k_eigenvectors(g, 8)
    lam, vecs = jacobi_eigh(g)
    assert np.allclose(vals, lam, atol=1e-10)
    for j in range(8):
        assert abs(frame[:, j] @ vecs[:, j]) == pytest.approx(1.0, abs=1e-9)
    resid = g @ frame - frame * vals
    assert np.abs(resid).max() <= 1e-8 * np.abs(lam).max()


def test_top_k_algebraically_largest_on_indefinite_input():
    _, vals = top_k_eigenvectors(np.diag([-5.0, 2.0, 1.0]), 2)
    assert np.allclose(vals, [2.0, 1.0])


def test_top_k_rejects_asymmetric_and_bad_k():
    with pytest.raises(ValueError, match="symmetric"):
        top_k_eigenvectors(np.array([[0.0, 1.0], [0.0, 0.0]]), 1)
    with pytest.raises(ValueError):
        top_k_eigenvectors(np.eye(3), 4)
