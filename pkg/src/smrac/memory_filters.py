"""First-layer filters and their per-subsystem memory stacks.

The live filter states ``e_f``, ``u_ef`` and ``Z_f`` obey

    e_f'  = -k_f e_f  + e
    u_ef' = -k_f u_ef + u_e
    Z_f'  = -k_f Z_f  + Z

and are swapped with per-subsystem slots at every switching instant. The
filtered error derivative ``e_df`` is never integrated (that would need
``e'``); it is reconstructed algebraically from ``e`` and ``e_f``, see
:func:`edf_update`.

Array fields of :class:`FilterBank` may be views into a larger state
vector, so every update here writes in place.
"""

from dataclasses import dataclass, field

import numpy as np

from .numerics import pinv_left


@dataclass(eq=False)
class FilterBank:
    e_f: np.ndarray
    u_ef: np.ndarray
    Z_f: np.ndarray
    k_f: float
    e_df: np.ndarray = None
    # values captured at the most recent load, needed by edf_update
    t_load: float = 0.0
    e_load: np.ndarray = None
    e_f_load: np.ndarray = None
    e_df_load: np.ndarray = None

    def __post_init__(self):
        n = self.e_f.shape[0]
        for name in ("e_df", "e_load", "e_f_load", "e_df_load"):
            if getattr(self, name) is None:
                setattr(self, name, np.zeros(n))

    @classmethod
    def zeros(cls, n, m, k_f, t0=0.0, e0=None):
        bank = cls(np.zeros(n), np.zeros(m), np.zeros((m, m * n)), float(k_f), t_load=float(t0))
        if e0 is not None:
            bank.e_load[:] = e0
        return bank


@dataclass(eq=False)
class FilterMemoryStack:
    """Filter values saved at each subsystem's most recent switch-out.

    ``u_ei`` holds the regression target ``u_ei(t_k^-)``, which satisfies
    ``u_ei = Z_f phi_i`` and is what the inactive-phase estimator uses by
    default.
    """

    e_df: np.ndarray
    e_f: np.ndarray
    u_ef: np.ndarray
    Z_f: np.ndarray
    u_ei: np.ndarray
    saved: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.saved is None:
            self.saved = np.zeros(self.e_df.shape[0], dtype=bool)

    @classmethod
    def zeros(cls, M, n, m):
        mn = m * n
        return cls(np.zeros((M, n)), np.zeros((M, n)), np.zeros((M, m)), np.zeros((M, m, mn)), np.zeros((M, m)))


def filter_derivatives(bank, e, u_e, Z):
    """Time derivatives ``(e_f', u_ef', Z_f')`` of the stable first-order filters."""
    k = bank.k_f
    return -k * bank.e_f + e, -k * bank.u_ef + u_e, -k * bank.Z_f + Z


def edf_update(bank, e_now, t):
    """Filtered error derivative at time ``t`` from algebraic signals only.

    Solves ``e_df' = -k_f e_df + e'`` in closed form over the current
    interval ``[t_k, t)`` by integrating by parts:

        e_df(t) = e(t) - k_f e_f(t)
                  + exp(-k_f (t - t_k)) (e_df(t_k) - e(t_k) + k_f e_f(t_k))

    ``bank.e_f`` must already hold ``e_f(t)``. The result is stored in
    ``bank.e_df`` and returned.
    """
    k = bank.k_f
    decay = np.exp(-k * (t - bank.t_load))
    carry = bank.e_df_load - bank.e_load + k * bank.e_f_load
    bank.e_df[...] = e_now - k * bank.e_f + decay * carry
    return bank.e_df


def derived_signals(bank, ref, B):
    """Return ``(h, h_B, u_ei)``.

    ``h = e_df - A_m e_f``, ``h_B = (B^T B)^{-1} B^T h`` and
    ``u_ei = u_ef - h_B``; along exact trajectories ``u_ei = Z_f phi_i``.
    """
    h = bank.e_df - ref.A @ bank.e_f
    h_B = pinv_left(B) @ h
    return h, h_B, bank.u_ef - h_B


def save_on_switch_out(bank, stack, i, u_ei):
    """Record the outgoing subsystem's filter values (index ``i``, 0-based)."""
    stack.e_df[i] = bank.e_df
    stack.e_f[i] = bank.e_f
    stack.u_ef[i] = bank.u_ef
    stack.Z_f[i] = bank.Z_f
    stack.u_ei[i] = u_ei
    stack.saved[i] = True


def load_on_switch_in(bank, stack, i, e_now, t_k):
    """Restore subsystem ``i``'s filters and cache the interval's left endpoint."""
    bank.e_f[...] = stack.e_f[i]
    bank.u_ef[...] = stack.u_ef[i]
    bank.Z_f[...] = stack.Z_f[i]
    bank.e_df[...] = stack.e_df[i]
    bank.t_load = float(t_k)
    bank.e_load = np.array(e_now, dtype=float)
    bank.e_f_load = bank.e_f.copy()
    bank.e_df_load = bank.e_df.copy()
