"""Small dense linear-algebra and integration helpers.

Everything here works on plain ``numpy`` arrays; dimensions in this package
never exceed a few dozen, so no attempt is made at sparse or blocked
algorithms.
"""

import numpy as np

from .exceptions import DimensionMismatch, NotHurwitz, NumericalBlowup, RankDeficient

RANK_COND_LIMIT = 1e12


def is_hurwitz(A, margin=1e-9):
    """True when every eigenvalue of ``A`` has real part below ``-margin``."""
    A = np.asarray(A, dtype=float)
    return bool(np.all(np.linalg.eigvals(A).real < -margin))


def lyapunov_solve(A, Qm):
    """Solve ``A^T P + P A + Qm = 0`` for symmetric positive definite ``P``.

    The equation is vectorised column-wise into the Kronecker-sum system
    ``(I (x) A^T + A^T (x) I) vec(P) = -vec(Qm)`` and solved densely.

    Raises
    ------
    NotHurwitz
        If ``A`` has an eigenvalue with non-negative real part, or the
        Kronecker-sum system is numerically singular.
    """
    A = np.asarray(A, dtype=float)
    Qm = np.asarray(Qm, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or Qm.shape != (n, n):
        raise DimensionMismatch(f"lyapunov_solve needs square A and Qm, got {A.shape}, {Qm.shape}")
    if not is_hurwitz(A, margin=0.0):
        raise NotHurwitz(f"matrix is not Hurwitz (eigenvalues {np.linalg.eigvals(A)})")
    eye = np.eye(n)
    K = np.kron(eye, A.T) + np.kron(A.T, eye)
    if np.linalg.cond(K) > RANK_COND_LIMIT:
        raise NotHurwitz("Lyapunov operator is ill-conditioned; A is too close to instability")
    p = np.linalg.solve(K, -Qm.reshape(-1, order="F"))
    P = p.reshape(n, n, order="F")
    return 0.5 * (P + P.T)


def pinv_left(B):
    """Left pseudo-inverse ``(B^T B)^{-1} B^T`` of a full-column-rank matrix."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    BtB = B.T @ B
    if B.shape[0] < B.shape[1] or np.linalg.cond(BtB) > RANK_COND_LIMIT:
        raise RankDeficient(f"matrix of shape {B.shape} does not have full column rank")
    return np.linalg.solve(BtB, B.T)


def kron(A, B):
    """Kronecker product; 1-D inputs are treated as row vectors."""
    return np.kron(np.atleast_2d(A), np.atleast_2d(B))


def min_eig_sym(M):
    """Smallest eigenvalue of a symmetric matrix (or a stack of them).

    The input is symmetrised as ``(M + M^T) / 2`` first, so slight
    floating-point asymmetry is harmless.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise DimensionMismatch(f"min_eig_sym needs square matrices, got shape {M.shape}")
    S = 0.5 * (M + np.swapaxes(M, -1, -2))
    return np.linalg.eigvalsh(S)[..., 0]


def rk4_step(f, t, y, h):
    """One classical fourth-order Runge-Kutta step of ``y' = f(t, y)``."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = f(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = f(t + h, y + h * k3)
    y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y_next)):
        raise NumericalBlowup(f"non-finite state after RK4 step at t={t + h:.6g}")
    return y_next
