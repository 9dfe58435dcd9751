"""Second-layer Gramian filters and online intermittent-excitation detection.

    Q' = -k_s Q + Z_f^T Z_f
    G' = -k_s G + Z_f^T u_ei

``Q`` is positive semi-definite by construction and ``G = Q phi_i`` along
exact trajectories. A subsystem counts as excited (``s_i = 1``) the first
time ``lambda_min(Q)`` exceeds a small threshold while it is active; at that
instant ``Q`` and ``G`` are frozen into ``S_Qbar_i`` and ``S_Gbar_i``.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import NotYetExcited
from .numerics import min_eig_sym

DEFAULT_EPSILON_IIE = 1e-6


@dataclass(eq=False)
class GramianState:
    Q: np.ndarray
    G: np.ndarray
    k_s: float

    @classmethod
    def zeros(cls, mn, k_s):
        return cls(np.zeros((mn, mn)), np.zeros(mn), float(k_s))


@dataclass(eq=False)
class GramianMemoryStack:
    Q: np.ndarray  # (M, mn, mn)
    G: np.ndarray  # (M, mn)

    @classmethod
    def zeros(cls, M, mn):
        return cls(np.zeros((M, mn, mn)), np.zeros((M, mn)))


@dataclass(eq=False)
class IIEState:
    """Per-subsystem excitation flags and frozen snapshots.

    ``T`` holds detection offsets ``t - t0`` (NaN until detected).
    """

    s: np.ndarray
    T: np.ndarray
    S_Qbar: np.ndarray
    S_Gbar: np.ndarray
    epsilon: float = DEFAULT_EPSILON_IIE
    t_detect: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.t_detect is None:
            self.t_detect = np.full(self.s.shape[0], np.nan)

    @classmethod
    def zeros(cls, M, mn, epsilon=DEFAULT_EPSILON_IIE):
        return cls(np.zeros(M, dtype=int), np.full(M, np.nan), np.zeros((M, mn, mn)), np.zeros((M, mn)), float(epsilon))

    @property
    def all_excited(self):
        return bool(np.all(self.s == 1))

    @property
    def T_f(self):
        """Latest detection offset, defined once every subsystem is excited."""
        return float(np.max(self.T)) if self.all_excited else None

    def degree(self, i):
        """``lambda_min(S_Qbar_i)``, the excitation level captured at detection."""
        if not self.s[i]:
            raise NotYetExcited(f"subsystem {i + 1} has not met the excitation condition")
        return float(min_eig_sym(self.S_Qbar[i]))


def gramian_derivatives(gs, Z_f, u_ei):
    """``(Q', G')`` for the current filtered regressor and target."""
    k = gs.k_s
    return -k * gs.Q + Z_f.T @ Z_f, -k * gs.G + Z_f.T @ u_ei


def check_iie(gs, iie, i, t, t0=0.0):
    """Latch the excitation flag of active subsystem ``i`` if ``Q`` is PD enough.

    Detection requires ``lambda_min(Q) > epsilon`` strictly. Returns True when
    detection happens on this call.
    """
    if iie.s[i]:
        return False
    if min_eig_sym(gs.Q) > iie.epsilon:
        iie.s[i] = 1
        iie.T[i] = t - t0
        iie.t_detect[i] = t
        iie.S_Qbar[i] = 0.5 * (gs.Q + gs.Q.T)
        iie.S_Gbar[i] = gs.G
        return True
    return False


def gramian_save(gs, stack, i):
    stack.Q[i] = gs.Q
    stack.G[i] = gs.G


def gramian_load(gs, stack, i):
    gs.Q[...] = stack.Q[i]
    gs.G[...] = stack.G[i]


def verify_gain_condition(iie, k_sw, i, eta):
    """Check ``k_sw * lambda_min(S_Qbar_i) >= eta``; returns ``(ok, margin)``."""
    margin = k_sw * iie.degree(i) - eta
    return bool(margin >= 0.0), float(margin)


def auto_eta(iie, k_sw, fraction=0.9):
    """Default convergence parameter ``eta_i = 0.9 k_sw lambda_min(S_Qbar_i)``."""
    k_sw = np.broadcast_to(np.asarray(k_sw, dtype=float), iie.s.shape)
    out = np.full(iie.s.shape[0], np.nan)
    for i in np.flatnonzero(iie.s):
        out[i] = fraction * k_sw[i] * iie.degree(i)
    return out
