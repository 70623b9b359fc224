import numpy as np

from quantized_euler.basis import SpectralCoeffs


def random_coeffs(l_max: int, seed: int) -> SpectralCoeffs:
    """Random coefficients obeying the reality condition."""
    rng = np.random.default_rng(seed)
    c = SpectralCoeffs.zeros(l_max)
    for l in range(1, l_max + 1):
        c[l, 0] = rng.standard_normal()
        for m in range(1, l + 1):
            z = complex(*rng.standard_normal(2))
            c[l, m] = z
            c[l, -m] = (-1) ** m * np.conj(z)
    return c


def random_su(N: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    A = A - A.conj().T
    A[np.diag_indices(N)] -= np.trace(A) / N
    return A


def dense_laplacian(N: int) -> np.ndarray:
    """Laplacian as an N^2 x N^2 matrix straight from the component formula.

    Acts on row-major ``vec(W)``; weights are ``M = s - i``. The identity is
    made an eigenvector with eigenvalue 1 by a rank-one term.
    """
    s = (N - 1) / 2
    ss = s * (s + 1)
    M = s - np.arange(N)
    D = np.zeros((N * N, N * N))
    idx = lambda i, j: i * N + j
    for i in range(N):
        for j in range(N):
            D[idx(i, j), idx(i, j)] = -2 * (ss - M[i] * M[j])
            for di in (-1, 1):
                a, b = i + di, j + di
                if 0 <= a < N and 0 <= b < N:
                    # raising both weights when di = -1, lowering when di = +1
                    Ma, Mb = M[a], M[b]
                    c = np.sqrt(ss - M[i] * Ma) * np.sqrt(ss - M[j] * Mb)
                    D[idx(i, j), idx(a, b)] = c
    e = np.eye(N).ravel() / np.sqrt(N)
    return D + np.outer(e, e)
