"""Generalized symmetric-definite eigenproblem for the adaptation projection."""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

RIDGE_SCALE = 1e-9


@dataclass(frozen=True)
class Projection:
    """Projection columns ``matrix`` (dim x k) and their ascending eigenvalues."""

    matrix: np.ndarray
    eigenvalues: np.ndarray

    @property
    def k(self) -> int:
        return self.matrix.shape[1]


def centering_matrix(n: int) -> np.ndarray:
    return np.eye(n) - np.full((n, n), 1.0 / n)


def _finite(name, M):
    if not np.all(np.isfinite(M)):
        raise FloatingPointError(f"{name} has non-finite entries")
    return M


def assemble_pencil(features, mstar, graph=None, lam: float = 0.1):
    """Build ``S1 = X (M* + G) X^T + lam I`` and ``S2 = X H X^T``.

    ``features`` is the (dim, n) data matrix, or the kernel matrix in
    kernelized mode.  ``graph`` is an ``(n, n)`` Laplacian or None.
    """
    X = np.asarray(features, dtype=float)
    M = np.asarray(mstar, dtype=float)
    n = X.shape[1]
    if M.shape != (n, n):
        raise ValueError(f"M* has shape {M.shape}, expected {(n, n)}")
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if graph is not None:
        G = np.asarray(graph, dtype=float)
        if G.shape != (n, n):
            raise ValueError(f"graph term has shape {G.shape}, expected {(n, n)}")
        M = M + G
    S1 = X @ M @ X.T + lam * np.eye(X.shape[0])
    S1 = (S1 + S1.T) / 2.0
    Xc = X - X.mean(axis=1, keepdims=True)
    S2 = Xc @ Xc.T
    S2 = (S2 + S2.T) / 2.0
    return _finite("S1", S1), _finite("S2", S2)


def solve_generalized(S1, S2, k: int) -> Projection:
    """k smallest eigenpairs of the pencil ``(S1, S2 + eps I)``.

    ``eps = 1e-9 * tr(S2) / dim`` keeps the right-hand side positive
    definite.  The pencil is reduced with a Cholesky factor ``S2 + eps I =
    R^T R`` to the standard problem ``R^{-T} S1 R^{-1} v = phi v``, and
    ``A = R^{-1} V`` then satisfies ``A^T (S2 + eps I) A = I``.  Each column
    is signed so its largest-magnitude entry is positive.
    """
    S1 = np.asarray(S1, dtype=float)
    S2 = np.asarray(S2, dtype=float)
    dim = S1.shape[0]
    if S1.shape != (dim, dim) or S2.shape != (dim, dim):
        raise ValueError(f"pencil shapes differ: {S1.shape} vs {S2.shape}")
    if not 1 <= k <= dim:
        raise ValueError(f"k must be in 1..{dim}, got {k}")

    eps = RIDGE_SCALE * np.trace(S2) / dim
    B = S2 + eps * np.eye(dim)
    try:
        R = scipy.linalg.cholesky(B, lower=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"S2 + eps*I is not positive definite (eps={eps:.3g}, "
            f"min diag={np.min(np.diag(S2)):.3g}): {exc}"
        ) from exc

    # C = R^{-T} S1 R^{-1}
    tmp = scipy.linalg.solve_triangular(R, S1, trans="T")
    C = scipy.linalg.solve_triangular(R, tmp.T, trans="T").T
    C = (C + C.T) / 2.0
    phi, V = np.linalg.eigh(C)
    order = np.argsort(phi, kind="stable")[:k]
    phi, V = phi[order], V[:, order]
    A = scipy.linalg.solve_triangular(R, V)

    pivot = np.argmax(np.abs(A), axis=0)
    signs = np.sign(A[pivot, np.arange(k)])
    signs[signs == 0] = 1.0
    return Projection(A * signs, phi)


def project(features, proj: Projection) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if proj.matrix.shape[0] != X.shape[0]:
        raise ValueError(
            f"projection expects dimension {proj.matrix.shape[0]}, data has {X.shape[0]}"
        )
    return proj.matrix.T @ X
