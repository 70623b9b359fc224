import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantized_euler.basis import build_basis, coeffs_to_matrix, matrix_to_coeffs
from quantized_euler.laplacian import apply_laplacian, build_laplacian, solve_poisson

from .helpers import dense_laplacian, random_coeffs, random_su


def test_n3_examples():
    B, L = build_basis(3), build_laplacian(3)
    T10 = B.matrix(1, 0).astype(complex)
    assert np.allclose(L.apply(T10), -2 * T10, atol=1e-14)
    for m in (2, -2):
        T = B.matrix(2, m).astype(complex)
        assert np.allclose(L.apply(T), -6 * T, atol=1e-14)
    I = np.eye(3, dtype=complex)
    assert np.allclose(L.apply(I), I)
    assert np.allclose(L.solve(I), I)


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        build_laplacian(1)
    with pytest.raises(ValueError):
        build_laplacian(4).apply(np.zeros((3, 3)))


@pytest.mark.parametrize("N", [2, 5, 8, 16])
def test_matches_dense_oracle(N):
    D = dense_laplacian(N)
    L = build_laplacian(N)
    rng = np.random.default_rng(N)
    W = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    assert np.allclose(L.apply(W).ravel(), D @ W.ravel(), atol=1e-12 * N * N)
    for d in range(-(N - 1), N):
        B = L.block(d)
        assert np.allclose(B, B.T)
    ev = np.sort(np.linalg.eigvalsh(D))
    expected = np.sort(np.concatenate([[1.0]] + [np.full(2 * l + 1, -l * (l + 1.0)) for l in range(1, N)]))
    assert np.allclose(ev, expected, atol=1e-10 * N * N)


@pytest.mark.parametrize("N", [3, 9, 33, 64])
def test_spectral_property(N):
    B, L = build_basis(N), build_laplacian(N)
    worst = 0.0
    for l in range(1, N):
        for m in range(-l, l + 1):
            T = 1j * B.matrix(l, m)
            worst = max(worst, np.abs(L.apply(T) + l * (l + 1) * T).max() / (l * (l + 1)))
            worst = max(worst, np.abs(L.solve(T) * -(l * (l + 1)) - T).max())
    assert worst < 1e-10


def test_spectral_identity_on_coefficients():
    N = 9
    B, L = build_basis(N), build_laplacian(N)
    c = random_coeffs(N - 1, 1)
    got = matrix_to_coeffs(apply_laplacian(L, coeffs_to_matrix(c, B)), B)
    ll = np.arange(N)[:, None] * (np.arange(N)[:, None] + 1.0)
    assert np.allclose(got.data, -ll * c.data, atol=1e-12)
    assert not apply_laplacian(L, np.zeros((N, N))).any()


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), N=st.integers(2, 40))
def test_inverse_consistency_and_su_preservation(seed, N):
    L = build_laplacian(N)
    W = random_su(N, seed)
    P = solve_poisson(L, W)
    assert np.allclose(L.apply(P), W, atol=1e-11)
    assert np.allclose(solve_poisson(L, L.apply(W)), W, atol=1e-11)
    for X in (P, L.apply(W)):
        scale = max(1.0, np.linalg.norm(X))
        assert np.abs(X + X.conj().T).max() < 1e-14 * scale
        assert abs(np.trace(X)) < 1e-14 * scale


def test_identity_component_passes_through():
    N = 7
    L = build_laplacian(N)
    W = random_su(N, 0) + 2.5j * np.eye(N)
    P = L.solve(W)
    assert np.trace(P) / N == pytest.approx(2.5j)


def test_operator_is_immutable():
    L = build_laplacian(6)
    before = [a.copy() for a in (L.diag, L.off, L.low, L.piv)]
    for k in range(5):
        L.solve(random_su(6, k))
    for a, b in zip(before, (L.diag, L.off, L.low, L.piv)):
        assert np.array_equal(a, b)
    with pytest.raises(ValueError):
        L.piv[0, 0] = 1.0


def test_solve_out_argument():
    L = build_laplacian(5)
    W = random_su(5, 3)
    out = np.empty((5, 5), dtype=complex)
    assert L.solve(W, out=out) is out
    assert np.allclose(out, L.solve(W))
