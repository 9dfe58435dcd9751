"""Switched plant, common reference model, matched gains and control law.

Subsystems are identified by 1-based ids in schedules and user-facing
output; array storage inside the package is 0-based.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DimensionMismatch, MatchingInfeasible, NotHurwitz
from .numerics import is_hurwitz, pinv_left

MATCHING_TOL = 1e-9
HURWITZ_MARGIN = 1e-9


def vec(K):
    """Column-stacking vectorisation."""
    return np.asarray(K, dtype=float).reshape(-1, order="F")


def unvec(v, rows):
    v = np.asarray(v, dtype=float)
    return v.reshape(rows, -1, order="F")


@dataclass(frozen=True, eq=False)
class Subsystem:
    """One mode ``x' = A x + B u`` of the switched plant.

    ``A`` is known to the simulator only; controller and estimator code
    never read it.
    """

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n:
            raise DimensionMismatch(f"subsystem needs A n x n and B n x m, got {A.shape}, {B.shape}")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.B.shape[1]


@dataclass(frozen=True, eq=False)
class ReferenceModel:
    """Common reference ``x_m' = A_m x_m + B_m r``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        n = A.shape[0]
        if A.shape != (n, n) or B.shape[0] != n:
            raise DimensionMismatch(f"reference model needs A_m n x n and B_m n x m, got {A.shape}, {B.shape}")

    def check_hurwitz(self):
        if not is_hurwitz(self.A, HURWITZ_MARGIN):
            eig = np.linalg.eigvals(self.A)
            raise NotHurwitz(f"reference matrix A_m is not Hurwitz (eigenvalues {np.round(eig, 6).tolist()})")


@dataclass(frozen=True, eq=False)
class MatchedGains:
    K_x: np.ndarray  # n x m
    K_r: np.ndarray  # m x m
    phi: np.ndarray  # vec(K_x), length m*n


@dataclass(frozen=True)
class SwitchSchedule:
    """Piecewise-constant, right-continuous switching signal.

    ``sequence[k]`` is active on ``[instants[k-1], instants[k])`` with
    ``instants[-1]`` read as ``t0``; so ``len(sequence) == len(instants) + 1``.
    """

    t0: float
    instants: tuple
    sequence: tuple

    def __post_init__(self):
        object.__setattr__(self, "instants", tuple(float(t) for t in self.instants))
        object.__setattr__(self, "sequence", tuple(int(s) for s in self.sequence))
        if len(self.sequence) != len(self.instants) + 1:
            raise ConfigError(
                f"schedule needs one more subsystem id than switching instants "
                f"({len(self.sequence)} ids, {len(self.instants)} instants)"
            )
        prev = self.t0
        for tk in self.instants:
            if not tk > prev:
                raise ConfigError(f"switching instants must be strictly increasing after t0 (got {tk} after {prev})")
            prev = tk
        for a, b in zip(self.sequence, self.sequence[1:]):
            if a == b:
                raise ConfigError(f"consecutive schedule entries repeat subsystem {a}")

    @classmethod
    def periodic(cls, t0, interval, pattern, t_end):
        """Switch every ``interval`` seconds, cycling through ``pattern``."""
        if interval <= 0:
            raise ConfigError("switching interval must be positive")
        pattern = [int(p) for p in pattern]
        count = int(np.floor((t_end - t0) / interval + 1e-9))
        instants = [t0 + k * interval for k in range(1, count + 1)]
        instants = [tk for tk in instants if tk < t_end - 1e-12]
        sequence = [pattern[k % len(pattern)] for k in range(len(instants) + 1)]
        return cls(t0, tuple(instants), tuple(sequence))

    def active(self, t):
        """Subsystem id active at time ``t`` (right-continuous)."""
        k = int(np.searchsorted(self.instants, t, side="right"))
        return self.sequence[k]

    def segment_start(self, t):
        """Left endpoint of the switching interval containing ``t``."""
        k = int(np.searchsorted(self.instants, t, side="right"))
        return self.t0 if k == 0 else self.instants[k - 1]

    def intervals(self, t_end):
        """List of ``(start, stop, id)`` covering ``[t0, t_end]``."""
        bounds = [self.t0, *[t for t in self.instants if t < t_end], t_end]
        return [(bounds[k], bounds[k + 1], self.sequence[k]) for k in range(len(bounds) - 1)]


def solve_matching(sub, ref, tol=MATCHING_TOL):
    """Gains with ``A_i + B_i K_x^T = A_m`` and ``B_i K_r^T = B_m``."""
    if sub.A.shape != ref.A.shape or sub.B.shape != ref.B.shape:
        raise DimensionMismatch("subsystem and reference model dimensions differ")
    Bp = pinv_left(sub.B)
    KxT = Bp @ (ref.A - sub.A)
    KrT = Bp @ ref.B
    res_x = np.abs(sub.A + sub.B @ KxT - ref.A).max()
    res_r = np.abs(sub.B @ KrT - ref.B).max()
    if res_x > tol or res_r > tol:
        raise MatchingInfeasible(
            f"no exact matching gains: residuals {res_x:.3e} (state), {res_r:.3e} (reference)"
        )
    return MatchedGains(K_x=KxT.T.copy(), K_r=KrT.T.copy(), phi=vec(KxT.T))


def reference_gain(sub, ref):
    """``K_r`` from the input-matching equation; uses only ``B_i`` and ``B_m``."""
    return (pinv_left(sub.B) @ ref.B).T


def regressor(x, m):
    """``Z = I_m (x) x^T``, an ``m x mn`` matrix with ``Z vec(K) = K^T x``."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    Z = np.zeros((m, m * n))
    for j in range(m):
        Z[j, j * n:(j + 1) * n] = x
    return Z


def control_input(x, r, phi_hat, K_r):
    """Certainty-equivalence control split as ``u = u_k + u_e``.

    Returns ``(u, u_k, u_e)`` with ``u_k = K_r^T r`` and ``u_e = Z(x) phi_hat``.
    """
    K_r = np.atleast_2d(K_r)
    u_k = K_r.T @ np.atleast_1d(r)
    u_e = regressor(x, K_r.shape[0]) @ phi_hat
    return u_k + u_e, u_k, u_e


def plant_derivative(sub, x, u):
    return sub.A @ x + sub.B @ u


def reference_derivative(ref, x_m, r):
    return ref.A @ x_m + ref.B @ np.atleast_1d(r)


def tracking_error(x, x_m):
    return np.asarray(x, dtype=float) - np.asarray(x_m, dtype=float)
