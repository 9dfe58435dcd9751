"""Switched parameter-estimation law with memory.

All ``M`` estimates evolve at every instant. The active subsystem ``i``
uses live signals,

    phi_hat_i' = Gamma_i (C_e + C_l + C_ll + s_i C_sw),

and every inactive subsystem keeps learning from what its stacks recorded
at its last switch-out,

    phi_hat_i' = Gamma_i (Cbar_l + Cbar_ll + s_i C_sw).

The memoryless baseline keeps only the error-feedback term while active
and freezes inactive estimates.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch

TARGETS = ("u_ei", "e_df")
MODES = ("memory", "baseline")


@dataclass(eq=False)
class EstimatorGains:
    Gamma: np.ndarray  # (M, mn, mn), symmetric PD
    k_l: np.ndarray    # (M,)
    k_ll: np.ndarray
    k_sw: np.ndarray

    @classmethod
    def uniform(cls, M, mn, gamma=1.0, k_l=1.0, k_ll=1.0, k_sw=1.0):
        return cls(
            np.repeat(gamma * np.eye(mn)[None], M, axis=0),
            np.full(M, float(k_l)),
            np.full(M, float(k_ll)),
            np.full(M, float(k_sw)),
        )


@dataclass(eq=False)
class AdaptationTerms:
    """Additive pieces of one estimate's update direction.

    For an inactive subsystem ``C_e`` is zero and ``C_l``, ``C_ll`` hold the
    memory-based terms. ``prediction_error`` is ``Z_f phi_hat - target``,
    i.e. ``Z_f phi_tilde`` (live or stored regressor).
    """

    C_e: np.ndarray
    C_l: np.ndarray
    C_ll: np.ndarray
    C_sw: np.ndarray
    prediction_error: np.ndarray
    active: bool

    @property
    def total(self):
        return self.C_e + self.C_l + self.C_ll + self.C_sw


def switching_term(iie, i, phi_hat, k_sw):
    if not iie.s[i]:
        return np.zeros_like(phi_hat)
    return k_sw * (iie.S_Gbar[i] - iie.S_Qbar[i] @ phi_hat)


def error_feedback_term(Z, e, P, B):
    """``-Z^T B^T P e``: gradient of the tracking-error energy w.r.t. ``phi_hat``."""
    return -(Z.T @ (B.T @ (P @ e)))


def adaptation_terms_active(Z, e, P, B, Z_f, u_ei, Q, G, iie, i, phi_hat, gains):
    pred = Z_f @ phi_hat - u_ei
    return AdaptationTerms(
        C_e=error_feedback_term(Z, e, P, B),
        C_l=-gains.k_l[i] * (Z_f.T @ pred),
        C_ll=gains.k_ll[i] * (G - Q @ phi_hat),
        C_sw=switching_term(iie, i, phi_hat, gains.k_sw[i]),
        prediction_error=pred,
        active=True,
    )


def memory_target(fstack, i, target="u_ei"):
    if target == "u_ei":
        return fstack.u_ei[i]
    if target == "e_df":
        if fstack.e_df.shape[1] != fstack.u_ei.shape[1]:
            raise DimensionMismatch("inactive_target 'e_df' needs as many inputs as states (m == n)")
        return fstack.e_df[i]
    raise ValueError(f"unknown inactive target {target!r}; expected one of {TARGETS}")


def adaptation_terms_inactive(fstack, gstack, iie, i, phi_hat, gains, target="u_ei"):
    S_Zf = fstack.Z_f[i]
    pred = S_Zf @ phi_hat - memory_target(fstack, i, target)
    return AdaptationTerms(
        C_e=np.zeros_like(phi_hat),
        C_l=-gains.k_l[i] * (S_Zf.T @ pred),
        C_ll=gains.k_ll[i] * (gstack.G[i] - gstack.Q[i] @ phi_hat),
        C_sw=switching_term(iie, i, phi_hat, gains.k_sw[i]),
        prediction_error=pred,
        active=False,
    )


def estimate_derivative(terms, Gamma):
    return Gamma @ terms.total


def baseline_estimate_derivative(terms, Gamma):
    """Plain gradient MRAC: ``Gamma C_e`` while active, zero otherwise."""
    if not terms.active:
        return np.zeros_like(terms.C_e)
    return Gamma @ terms.C_e


def inactive_coefficients(fstack, gstack, iie, gains, target="u_ei"):
    """Affine form ``phi_hat_i' = b_i - H_i phi_hat_i`` of the inactive law.

    The stacks are constant between switching instants (and detections), so
    ``H`` and ``b`` only change at those events. ``Gamma`` is folded in.
    """
    M = gstack.G.shape[0]
    H = np.empty_like(gstack.Q)
    b = np.empty_like(gstack.G)
    for i in range(M):
        S_Zf = fstack.Z_f[i]
        Hi = gains.k_l[i] * (S_Zf.T @ S_Zf) + gains.k_ll[i] * gstack.Q[i]
        bi = gains.k_l[i] * (S_Zf.T @ memory_target(fstack, i, target)) + gains.k_ll[i] * gstack.G[i]
        if iie.s[i]:
            Hi = Hi + gains.k_sw[i] * iie.S_Qbar[i]
            bi = bi + gains.k_sw[i] * iie.S_Gbar[i]
        H[i] = gains.Gamma[i] @ Hi
        b[i] = gains.Gamma[i] @ bi
    return H, b
