"""Dense matrix kernels: exponentials, ZOH integrals, eigenvalues, factorizations.

Thin wrappers around numpy/scipy routines that add the validation and error
contracts the rest of the package relies on.  Everything here is pure,
operates on small dense float arrays, and raises ``ValueError`` for malformed
input and ``numpy.linalg.LinAlgError`` for rank/consistency failures.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

__all__ = [
    "as_matrix",
    "as_square",
    "as_vector",
    "expm",
    "zoh_integral",
    "eigenvalues",
    "min_eig_sym",
    "chol_pd_check",
    "solve_linear",
    "least_norm_solve",
]

#: relative pivot floor for the positive-definiteness check
_CHOL_PIVOT_RTOL = 1e-12
#: residual guard for solve_linear, relative to ||b||
_SOLVE_RESIDUAL_RTOL = 1e-10
#: consistency guard for least_norm_solve, relative to ||b||
_LSTSQ_RESIDUAL_RTOL = 1e-8


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a 2-D float array with finite entries."""
    M = np.asarray(a, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {M.shape}")
    if M.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    return M


def as_square(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a square 2-D float array with finite entries."""
    M = as_matrix(a, name)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    return M


def as_vector(a, name: str = "vector") -> np.ndarray:
    """Coerce ``a`` to a 1-D float array with finite entries."""
    v = np.asarray(a, dtype=float)
    if v.ndim != 1:
        v = v.reshape(-1)
    if v.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite entries")
    return v


def expm(M) -> np.ndarray:
    """Matrix exponential ``e^M`` (scaling-and-squaring Pade, via scipy)."""
    return scipy.linalg.expm(as_square(M))


def zoh_integral(A, B, h: float) -> np.ndarray:
    """Exact zero-order-hold input integral ``int_0^h e^{A s} B ds``.

    Computed as the top-right block of ``expm(h * [[A, B], [0, 0]])``, which
    is exact up to the accuracy of the matrix exponential and valid for
    singular ``A``.

    Parameters
    ----------
    A : (n, n) array_like
    B : (n, m) array_like
    h : float
        Strictly positive step length.
    """
    A = as_square(A, "A")
    B = as_matrix(B, "B")
    n, m = B.shape
    if A.shape[0] != n:
        raise ValueError(f"A and B have incompatible shapes {A.shape} / {B.shape}")
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")
    blk = np.zeros((n + m, n + m))
    blk[:n, :n] = A
    blk[:n, n:] = B
    return scipy.linalg.expm(h * blk)[:n, n:]


def eigenvalues(M) -> np.ndarray:
    """Eigenvalues of a square matrix as a complex array (unordered)."""
    return np.linalg.eigvals(as_square(M))


def min_eig_sym(M) -> float:
    """Smallest eigenvalue of the symmetric part ``(M + M^T) / 2``.

    The input is expected to be symmetric up to roundoff; it is symmetrized
    before the eigenvalue solve.
    """
    S = _sym_part(as_square(M))
    return float(np.linalg.eigvalsh(S)[0])


def chol_pd_check(M) -> tuple[bool, np.ndarray | None]:
    """Positive-definiteness test via Cholesky with a relative pivot floor.

    Returns ``(True, L)`` with ``M ~ L @ L.T`` (lower triangular ``L``) when
    the symmetrized input is positive definite with every pivot above
    ``1e-12 * ||M||_2``, and ``(False, None)`` otherwise.  Never raises for
    finite input.
    """
    S = _sym_part(as_square(M))
    n = S.shape[0]
    floor = _CHOL_PIVOT_RTOL * np.linalg.norm(S, 2)
    L = np.zeros_like(S)
    for j in range(n):
        pivot = S[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > floor:
            return False, None
        L[j, j] = math.sqrt(pivot)
        for i in range(j + 1, n):
            L[i, j] = (S[i, j] - L[i, :j] @ L[j, :j]) / L[j, j]
    return True, L


def solve_linear(A, b) -> np.ndarray:
    """Solve ``A x = b`` for square ``A``, guarding the residual.

    Raises ``numpy.linalg.LinAlgError`` when ``A`` is singular or when the
    computed solution leaves a residual above ``1e-10 * ||b||``.
    """
    A = as_square(A, "A")
    b = as_vector(b, "b")
    if b.size != A.shape[0]:
        raise ValueError(f"b has size {b.size}, expected {A.shape[0]}")
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"solve_linear: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("solve_linear: non-finite solution (singular matrix)")
    if np.linalg.norm(A @ x - b) > _SOLVE_RESIDUAL_RTOL * np.linalg.norm(b):
        raise np.linalg.LinAlgError("solve_linear: residual too large (matrix numerically singular)")
    return x


def least_norm_solve(A, b) -> np.ndarray:
    """Minimum-norm solution of the consistent system ``A x = b``.

    Uses the SVD-based least-squares solver; among all solutions of a
    consistent (possibly rank-deficient) system it returns the one of
    smallest Euclidean norm.  Raises ``numpy.linalg.LinAlgError`` when the
    system is inconsistent beyond ``1e-8 * ||b||``.
    """
    A = as_matrix(A, "A")
    b = as_vector(b, "b")
    if b.size != A.shape[0]:
        raise ValueError(f"b has size {b.size}, expected {A.shape[0]}")
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.norm(A @ x - b) > _LSTSQ_RESIDUAL_RTOL * np.linalg.norm(b):
        raise np.linalg.LinAlgError("least_norm_solve: system is inconsistent")
    return x


def _sym_part(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)
