"""Closed-loop simulation of the switched plant under memory-based MRAC.

One flat state vector carries everything that is integrated::

    [x, x_m, e_f, u_ef, vec_r(Z_f), vec_r(Q), G, phi_hat_1, ..., phi_hat_M]

It is advanced with fixed-step RK4 while the active subsystem is frozen;
switching instants sit on the step grid, and at each one the outgoing
subsystem's filters and Gramians are pushed to memory and the incoming
subsystem's are restored. ``x`` and every ``phi_hat_i`` are continuous
across switches.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ._jit import njit
from .analysis import LyapunovContext, lyapunov_value
from .estimator import MODES, TARGETS, EstimatorGains, inactive_coefficients
from .excitation import (
    DEFAULT_EPSILON_IIE,
    GramianMemoryStack,
    GramianState,
    IIEState,
    auto_eta,
    check_iie,
    gramian_load,
    gramian_save,
)
from .exceptions import ConfigError, DimensionMismatch, NumericalBlowup, RankDeficient
from .memory_filters import (
    FilterBank,
    FilterMemoryStack,
    derived_signals,
    edf_update,
    load_on_switch_in,
    save_on_switch_out,
)
from .numerics import min_eig_sym, pinv_left
from .system_model import ReferenceModel, Subsystem, SwitchSchedule, reference_gain, solve_matching
from .trace import Trace

log = logging.getLogger(__name__)

BLOWUP_LIMIT = 1e12
GRID_TOL = 1e-9


@dataclass(eq=False)
class ReferenceSignal:
    """``r(t) = rbar + delta(t - t_s)`` on every channel, ``t_s`` the last switch.

    ``delta(tau) = amplitude * exp(-decay * tau) * sum_k sin(f_k * tau)``.
    """

    rbar: np.ndarray
    amplitude: float = 10.0
    decay: float = 0.1
    frequencies: tuple = (2.0, 3.0, 4.0, 5.0, 6.0)

    def __post_init__(self):
        self.rbar = np.atleast_1d(np.asarray(self.rbar, dtype=float))
        self.frequencies = tuple(float(f) for f in self.frequencies)


@njit(cache=True)
def probing_signal(tau, amplitude, decay, frequencies):
    acc = 0.0
    for f in frequencies:
        acc += math.sin(f * tau)
    return amplitude * math.exp(-decay * tau) * acc


def reference_input(t, schedule, signal):
    """Reference ``r(t)``; the probing term restarts at every switching instant."""
    tau = t - schedule.segment_start(t)
    freqs = np.asarray(signal.frequencies, dtype=float)
    return signal.rbar + probing_signal(tau, signal.amplitude, signal.decay, freqs)


def _per_subsystem(value, M, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(M, float(arr))
    if arr.shape != (M,):
        raise ConfigError(f"{name} needs a scalar or {M} values, got shape {arr.shape}")
    return arr.copy()


@dataclass(eq=False)
class SimulationConfig:
    subsystems: list
    reference: ReferenceModel
    schedule: SwitchSchedule
    signal: ReferenceSignal = None
    h: float = 1e-3
    t_end: float = 240.0
    k_f: float = 1.0
    k_s: float = 1.0
    k_l: np.ndarray = 1.0
    k_ll: np.ndarray = 1.0
    k_sw: np.ndarray = 1.0
    Gamma: np.ndarray = 1.0
    eta: np.ndarray = None  # None: 0.9 k_sw lambda_min(S_Qbar_i), fixed after the run
    Q_m: np.ndarray = None
    x0: np.ndarray = None
    xm0: np.ndarray = None
    phi_hat0: np.ndarray = None
    epsilon_iie: float = DEFAULT_EPSILON_IIE
    mode: str = "memory"
    inactive_target: str = "u_ei"
    adaptation_sign: float = 1.0

    def __post_init__(self):
        self.subsystems = list(self.subsystems)
        if not self.subsystems:
            raise ConfigError("at least one subsystem is required")
        n, m, M = self.n, self.m, self.M
        mn = m * n
        for k, sub in enumerate(self.subsystems, start=1):
            if sub.A.shape != (n, n) or sub.B.shape != (n, m):
                raise DimensionMismatch(f"subsystem {k} has shapes {sub.A.shape}, {sub.B.shape}; expected ({n}, {n}), ({n}, {m})")
        if self.reference.A.shape != (n, n) or self.reference.B.shape != (n, m):
            raise DimensionMismatch("reference model dimensions do not match the subsystems")
        if self.signal is None:
            self.signal = ReferenceSignal(np.zeros(m))
        if self.signal.rbar.shape == (1,) and m > 1:
            self.signal.rbar = np.full(m, self.signal.rbar[0])
        if self.signal.rbar.shape != (m,):
            raise DimensionMismatch(f"rbar needs {m} entries")
        self.h = float(self.h)
        self.t_end = float(self.t_end)
        self.k_f = float(self.k_f)
        self.k_s = float(self.k_s)
        self.k_l = _per_subsystem(self.k_l, M, "k_l")
        self.k_ll = _per_subsystem(self.k_ll, M, "k_ll")
        self.k_sw = _per_subsystem(self.k_sw, M, "k_sw")
        G = np.asarray(self.Gamma, dtype=float)
        if G.ndim == 0:
            G = float(G) * np.eye(mn)
        if G.ndim == 2:
            G = np.repeat(G[None], M, axis=0)
        if G.shape != (M, mn, mn):
            raise DimensionMismatch(f"Gamma needs shape ({mn}, {mn}) or ({M}, {mn}, {mn}), got {G.shape}")
        self.Gamma = G
        if self.eta is not None:
            self.eta = _per_subsystem(self.eta, M, "eta")
        self.Q_m = np.eye(n) if self.Q_m is None else np.atleast_2d(np.asarray(self.Q_m, dtype=float))
        self.x0 = np.zeros(n) if self.x0 is None else np.atleast_1d(np.asarray(self.x0, dtype=float))
        self.xm0 = np.zeros(n) if self.xm0 is None else np.atleast_1d(np.asarray(self.xm0, dtype=float))
        if self.phi_hat0 is None:
            self.phi_hat0 = np.zeros((M, mn))
        self.phi_hat0 = np.asarray(self.phi_hat0, dtype=float).reshape(M, mn) if np.size(self.phi_hat0) == M * mn else np.asarray(self.phi_hat0, dtype=float)
        if self.phi_hat0.shape != (M, mn):
            raise DimensionMismatch(f"phi_hat0 needs shape ({M}, {mn})")
        if self.x0.shape != (n,) or self.xm0.shape != (n,) or self.Q_m.shape != (n, n):
            raise DimensionMismatch("initial conditions or Q_m have the wrong size")
        self.epsilon_iie = float(self.epsilon_iie)
        self.adaptation_sign = float(self.adaptation_sign)

    @property
    def n(self):
        return self.subsystems[0].A.shape[0]

    @property
    def m(self):
        return self.subsystems[0].B.shape[1]

    @property
    def M(self):
        return len(self.subsystems)

    @property
    def mn(self):
        return self.m * self.n

    @property
    def steps(self):
        return int(round((self.t_end - self.schedule.t0) / self.h))

    def problems(self):
        """Every violated precondition, as human-readable strings."""
        out = []
        for k, sub in enumerate(self.subsystems, start=1):
            try:
                pinv_left(sub.B)
            except RankDeficient:
                out.append(f"RankDeficient: B of subsystem {k} does not have full column rank")
        try:
            self.reference.check_hurwitz()
        except ConfigError as exc:
            out.append(f"NotHurwitz: {exc}")
        for k, sub in enumerate(self.subsystems, start=1):
            try:
                solve_matching(sub, self.reference)
            except RankDeficient:
                pass
            except ConfigError as exc:
                out.append(f"MatchingInfeasible: subsystem {k}: {exc}")
        if not self.h > 0:
            out.append("step h must be positive")
        else:
            t0 = self.schedule.t0
            for tk in (*self.schedule.instants, self.t_end):
                q = (tk - t0) / self.h
                if abs(q - round(q)) > GRID_TOL * max(1.0, abs(q)):
                    out.append(f"time {tk} is not on the integration grid (t0={t0}, h={self.h})")
        if self.t_end < self.schedule.t0:
            out.append("t_end precedes t0")
        if self.schedule.instants and self.t_end < self.schedule.instants[-1]:
            out.append("t_end precedes the last switching instant")
        bad_ids = sorted({s for s in self.schedule.sequence if not 1 <= s <= self.M})
        if bad_ids:
            out.append(f"schedule refers to unknown subsystems {bad_ids}")
        for name in ("k_f", "k_s"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be positive")
        for name in ("k_l", "k_ll", "k_sw"):
            if not np.all(getattr(self, name) > 0):
                out.append(f"{name} must be positive")
        for k, G in enumerate(self.Gamma, start=1):
            if not np.allclose(G, G.T, atol=1e-12) or min_eig_sym(G) <= 0:
                out.append(f"Gamma of subsystem {k} must be symmetric positive definite")
        if not np.allclose(self.Q_m, self.Q_m.T) or min_eig_sym(self.Q_m) <= 0:
            out.append("Q_m must be symmetric positive definite")
        if self.mode not in MODES:
            out.append(f"mode must be one of {MODES}")
        if self.inactive_target not in TARGETS:
            out.append(f"inactive_target must be one of {TARGETS}")
        elif self.inactive_target == "e_df" and self.m != self.n:
            out.append("inactive_target 'e_df' needs m == n")
        if not self.epsilon_iie > 0:
            out.append("epsilon_iie must be positive")
        if self.adaptation_sign not in (1.0, -1.0):
            out.append("adaptation_sign must be +1 or -1")
        return out

    def validate(self):
        """Raise the first violated precondition as its specific exception."""
        for sub in self.subsystems:
            pinv_left(sub.B)
        self.reference.check_hurwitz()
        for sub in self.subsystems:
            solve_matching(sub, self.reference)
        probs = self.problems()
        if probs:
            raise ConfigError("; ".join(probs))

    def to_dict(self):
        """Plain nested dict/list form, matching the scenario file layout."""
        sched = self.schedule
        return {
            "reference_model": {"A": self.reference.A.tolist(), "B": self.reference.B.tolist()},
            "subsystems": [{"A": s.A.tolist(), "B": s.B.tolist()} for s in self.subsystems],
            "schedule": {"t0": sched.t0, "instants": list(sched.instants), "sequence": list(sched.sequence)},
            "gains": {
                "k_f": self.k_f,
                "k_s": self.k_s,
                "k_l": self.k_l.tolist(),
                "k_ll": self.k_ll.tolist(),
                "k_sw": self.k_sw.tolist(),
                "Gamma": self.Gamma.tolist(),
                "eta": "auto" if self.eta is None else self.eta.tolist(),
                "Q_m": self.Q_m.tolist(),
                "adaptation_sign": self.adaptation_sign,
            },
            "initial_conditions": {
                "x0": self.x0.tolist(),
                "xm0": self.xm0.tolist(),
                "phi_hat0": self.phi_hat0.tolist(),
            },
            "signal": {
                "rbar": self.signal.rbar.tolist(),
                "delta_amplitude": self.signal.amplitude,
                "delta_decay": self.signal.decay,
                "delta_frequencies": list(self.signal.frequencies),
            },
            "simulation": {
                "h": self.h,
                "t_end": self.t_end,
                "epsilon_iie": self.epsilon_iie,
                "mode": self.mode,
                "inactive_target": self.inactive_target,
            },
        }

    def replace(self, **changes):
        kw = {name: getattr(self, name) for name in self.__dataclass_fields__}
        kw.update(changes)
        if "t_end" in changes and "schedule" not in changes:
            s = self.schedule
            keep = [tk for tk in s.instants if tk < kw["t_end"] - 1e-12]
            kw["schedule"] = SwitchSchedule(s.t0, tuple(keep), s.sequence[: len(keep) + 1])
        return SimulationConfig(**kw)


@njit(cache=True)
def closed_loop_rhs(t, y, ipar, fpar, A, B, K_rT, B_pinv, BtP, A_m, B_m, rbar, freqs,
                    edf_carry, Gamma_a, sw_H, sw_b, inact_H, inact_b):
    """Time derivative of the flat closed-loop state with the active mode frozen.

    ``ipar = [n, m, M, active, memory]``;
    ``fpar = [k_f, k_s, t_load, t_s, amplitude, decay, k_l_a, k_ll_a]``.
    ``inact_H``/``inact_b`` already include ``Gamma`` (zero in baseline mode).
    """
    n, m, M, active, memory = ipar[0], ipar[1], ipar[2], ipar[3], ipar[4]
    k_f, k_s, t_load, t_s = fpar[0], fpar[1], fpar[2], fpar[3]
    mn = m * n
    o_uef = 3 * n
    o_zf = o_uef + m
    o_q = o_zf + m * mn
    o_g = o_q + mn * mn
    o_phi = o_g + mn

    x = y[0:n]
    xm = y[n:2 * n]
    e_f = y[2 * n:3 * n]
    u_ef = y[o_uef:o_zf]
    Z_f = y[o_zf:o_q].reshape((m, mn))
    Q = y[o_q:o_g].reshape((mn, mn))
    G = y[o_g:o_phi]
    phi = y[o_phi:].reshape((M, mn))

    e = x - xm
    Z = np.zeros((m, mn))
    for j in range(m):
        Z[j, j * n:(j + 1) * n] = x
    phi_a = phi[active].copy()
    r = rbar + probing_signal(t - t_s, fpar[4], fpar[5], freqs)
    u_e = Z @ phi_a
    u = u_e + K_rT @ r

    e_df = e - k_f * e_f + math.exp(-k_f * (t - t_load)) * edf_carry
    u_ei = u_ef - B_pinv @ (e_df - A_m @ e_f)
    Z_fT = Z_f.T.copy()

    out = np.empty_like(y)
    out[0:n] = A @ x + B @ u
    out[n:2 * n] = A_m @ xm + B_m @ r
    out[2 * n:3 * n] = e - k_f * e_f
    out[o_uef:o_zf] = u_e - k_f * u_ef
    out[o_zf:o_q] = (Z - k_f * Z_f).reshape(m * mn)
    out[o_q:o_g] = (Z_fT @ Z_f - k_s * Q).reshape(mn * mn)
    out[o_g:o_phi] = Z_fT @ u_ei - k_s * G

    dphi = out[o_phi:].reshape((M, mn))
    for i in range(M):
        dphi[i] = inact_b[i] - inact_H[i] @ phi[i]
    C = -(Z.T @ (BtP @ e))
    if memory:
        C += fpar[6] * (Z_fT @ (u_ei - Z_f @ phi_a))
        C += fpar[7] * (G - Q @ phi_a)
        C += sw_b - sw_H @ phi_a
    dphi[active] = Gamma_a @ C
    return out


@njit(cache=True)
def closed_loop_rk4(t, y, h, ipar, fpar, A, B, K_rT, B_pinv, BtP, A_m, B_m, rbar, freqs,
                    edf_carry, Gamma_a, sw_H, sw_b, inact_H, inact_b):
    """:func:`closed_loop_rhs` advanced by one RK4 step, same arithmetic as ``rk4_step``."""
    k1 = closed_loop_rhs(t, y, ipar, fpar, A, B, K_rT, B_pinv, BtP, A_m, B_m, rbar, freqs,
                         edf_carry, Gamma_a, sw_H, sw_b, inact_H, inact_b)
    k2 = closed_loop_rhs(t + 0.5 * h, y + (0.5 * h) * k1, ipar, fpar, A, B, K_rT, B_pinv, BtP, A_m, B_m,
                         rbar, freqs, edf_carry, Gamma_a, sw_H, sw_b, inact_H, inact_b)
    k3 = closed_loop_rhs(t + 0.5 * h, y + (0.5 * h) * k2, ipar, fpar, A, B, K_rT, B_pinv, BtP, A_m, B_m,
                         rbar, freqs, edf_carry, Gamma_a, sw_H, sw_b, inact_H, inact_b)
    k4 = closed_loop_rhs(t + h, y + h * k3, ipar, fpar, A, B, K_rT, B_pinv, BtP, A_m, B_m,
                         rbar, freqs, edf_carry, Gamma_a, sw_H, sw_b, inact_H, inact_b)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass
class SwitchEvent:
    t: float
    outgoing: int
    incoming: int
    V_before: float
    V_after: float


@dataclass(eq=False)
class SimulationResult:
    config: SimulationConfig
    trace: Trace
    iie: IIEState
    fstack: FilterMemoryStack
    gstack: GramianMemoryStack
    lyapunov: LyapunovContext
    phi_true: np.ndarray
    eta: np.ndarray
    events: list = field(default_factory=list)

    @property
    def summary(self):
        tr = self.trace
        return {
            "T": [None if not np.isfinite(v) else float(v) for v in self.iie.T],
            "all_excited": self.iie.all_excited,
            "final_phi_err": tr.phi_err[-1].tolist(),
            "final_e_norm": float(tr.e_norm[-1]),
            "excitation_degree": [self.iie.degree(i) if self.iie.s[i] else None for i in range(self.config.M)],
            "gain_margin": [
                float(self.config.k_sw[i] * self.iie.degree(i) - self.eta[i]) if self.iie.s[i] else None
                for i in range(self.config.M)
            ],
            "switches": len(self.events),
        }


class Simulator:
    """Stateful stepper; :meth:`run` drives it from ``t0`` to ``t_end``."""

    def __init__(self, config):
        config.validate()
        self.config = cfg = config
        n, m, M, mn = cfg.n, cfg.m, cfg.M, cfg.mn
        ref = cfg.reference
        # true parameters: diagnostics only
        self.phi_true = np.array([solve_matching(s, ref).phi for s in cfg.subsystems])
        self.K_r = np.array([reference_gain(s, ref) for s in cfg.subsystems])
        self.B_pinv = np.array([pinv_left(s.B) for s in cfg.subsystems])
        self.lyapunov = LyapunovContext.build(ref.A, cfg.Q_m, cfg.Gamma)
        self.gains = EstimatorGains(cfg.adaptation_sign * cfg.Gamma, cfg.k_l, cfg.k_ll, cfg.k_sw)

        self.o_uef = 3 * n
        self.o_zf = self.o_uef + m
        self.o_q = self.o_zf + m * mn
        self.o_g = self.o_q + mn * mn
        self.o_phi = self.o_g + mn
        self.dim = self.o_phi + M * mn
        self.y = np.zeros(self.dim)
        self.x = self.y[0:n]
        self.xm = self.y[n:2 * n]
        self.phi = self.y[self.o_phi:].reshape(M, mn)
        self.x[:] = cfg.x0
        self.xm[:] = cfg.xm0
        self.phi[:] = cfg.phi_hat0

        t0 = cfg.schedule.t0
        self.bank = FilterBank(
            self.y[2 * n:3 * n], self.y[self.o_uef:self.o_zf], self.y[self.o_zf:self.o_q].reshape(m, mn),
            cfg.k_f, t_load=t0,
        )
        self.bank.e_load = self.x - self.xm
        self.gramian = GramianState(self.y[self.o_q:self.o_g].reshape(mn, mn), self.y[self.o_g:self.o_phi], cfg.k_s)
        self.fstack = FilterMemoryStack.zeros(M, n, m)
        self.gstack = GramianMemoryStack.zeros(M, mn)
        self.iie = IIEState.zeros(M, mn, cfg.epsilon_iie)

        self.k = 0
        self._t0, self._h = t0, cfg.h
        self.t = t0
        self.active = cfg.schedule.sequence[0] - 1
        self.segment_start = t0
        self._switch_at = {
            int(round((tk - t0) / cfg.h)): cfg.schedule.sequence[j + 1] - 1
            for j, tk in enumerate(cfg.schedule.instants)
        }
        self._freqs = np.asarray(cfg.signal.frequencies, dtype=float)
        self.events = []

        N = cfg.steps + 1
        self._hist_y = np.empty((N, self.dim))
        self._hist_edf = np.empty((N, n))
        self._hist_r = np.empty((N, m))
        self._hist_sigma = np.empty(N, dtype=int)
        self._hist_s = np.empty((N, M), dtype=int)

        self._refresh_coefficients()
        self._check_excitation()
        self._record()

    # -- kernel arguments ---------------------------------------------------

    def _refresh_coefficients(self):
        cfg = self.config
        i = self.active
        sub = cfg.subsystems[i]
        memory = cfg.mode == "memory"
        M, mn = cfg.M, cfg.mn
        if memory:
            inact_H, inact_b = inactive_coefficients(self.fstack, self.gstack, self.iie, self.gains, cfg.inactive_target)
        else:
            inact_H, inact_b = np.zeros((M, mn, mn)), np.zeros((M, mn))
        if self.iie.s[i]:
            sw_H = cfg.k_sw[i] * self.iie.S_Qbar[i]
            sw_b = cfg.k_sw[i] * self.iie.S_Gbar[i]
        else:
            sw_H, sw_b = np.zeros((mn, mn)), np.zeros(mn)
        b = self.bank
        carry = b.e_df_load - b.e_load + b.k_f * b.e_f_load
        ipar = np.array([cfg.n, cfg.m, M, i, int(memory)], dtype=np.int64)
        fpar = np.array([cfg.k_f, cfg.k_s, b.t_load, self.segment_start,
                         cfg.signal.amplitude, cfg.signal.decay, cfg.k_l[i], cfg.k_ll[i]])
        self.kernel_args = (
            ipar, fpar, sub.A, sub.B, np.ascontiguousarray(self.K_r[i].T), self.B_pinv[i],
            np.ascontiguousarray(sub.B.T @ self.lyapunov.P), cfg.reference.A, cfg.reference.B,
            cfg.signal.rbar, self._freqs, carry, np.ascontiguousarray(self.gains.Gamma[i]),
            sw_H, sw_b, inact_H, inact_b,
        )

    def derivative(self, t, y):
        return closed_loop_rhs(t, y, *self.kernel_args)

    # -- protocol -----------------------------------------------------------

    def current_r(self):
        sig = self.config.signal
        return sig.rbar + probing_signal(self.t - self.segment_start, sig.amplitude, sig.decay, self._freqs)

    def u_ei(self):
        sub = self.config.subsystems[self.active]
        return derived_signals(self.bank, self.config.reference, sub.B)[2]

    def lyapunov_now(self):
        return float(lyapunov_value(self.x - self.xm, self.phi - self.phi_true, self.lyapunov))

    def handle_switch(self, incoming):
        """Save outgoing memory, switch, restore incoming memory (0-based index)."""
        q = self.active
        if incoming == q:
            raise ConfigError("switch to the already active subsystem")
        t_k = self.t
        V_before = self.lyapunov_now()
        save_on_switch_out(self.bank, self.fstack, q, self.u_ei())
        gramian_save(self.gramian, self.gstack, q)
        self.active = incoming
        e_now = self.x - self.xm
        load_on_switch_in(self.bank, self.fstack, incoming, e_now, t_k)
        gramian_load(self.gramian, self.gstack, incoming)
        self.segment_start = t_k
        self._refresh_coefficients()
        self.events.append(SwitchEvent(t_k, q + 1, incoming + 1, V_before, self.lyapunov_now()))
        log.debug("t=%.6g switch %d -> %d", t_k, q + 1, incoming + 1)

    def _check_excitation(self):
        i = self.active
        if self.iie.s[i]:
            return
        if check_iie(self.gramian, self.iie, i, self.t, self.config.schedule.t0):
            log.info("t=%.6g subsystem %d excited (lambda_min(Q)=%.3e)", self.t, i + 1, self.iie.degree(i))
            self._refresh_coefficients()

    def _record(self):
        k = self.k
        self._hist_y[k] = self.y
        self._hist_edf[k] = self.bank.e_df
        self._hist_r[k] = self.current_r()
        self._hist_sigma[k] = self.active + 1
        self._hist_s[k] = self.iie.s

    def step(self):
        cfg = self.config
        y_next = closed_loop_rk4(self.t, self.y, cfg.h, *self.kernel_args)
        if not np.max(np.abs(y_next)) < BLOWUP_LIMIT:
            raise NumericalBlowup(f"state norm exceeded {BLOWUP_LIMIT:g} at t={self.t + cfg.h:.6g}")
        self.y[:] = y_next
        Q = self.gramian.Q
        Q[...] = 0.5 * (Q + Q.T)
        self.k += 1
        self.t = self._t0 + self.k * self._h
        edf_update(self.bank, self.x - self.xm, self.t)
        incoming = self._switch_at.get(self.k)
        if incoming is not None:
            self.handle_switch(incoming)
        self._check_excitation()
        self._record()

    def run(self):
        steps = self.config.steps
        while self.k < steps:
            self.step()
        return self.result()

    # -- output -------------------------------------------------------------

    def result(self):
        cfg = self.config
        n, m, M, mn = cfg.n, cfg.m, cfg.M, cfg.mn
        K = self.k + 1
        Y = self._hist_y[:K]
        t = cfg.schedule.t0 + np.arange(K) * cfg.h
        sigma = self._hist_sigma[:K]
        x, xm = Y[:, 0:n], Y[:, n:2 * n]
        e = x - xm
        phi_hat = Y[:, self.o_phi:].reshape(K, M, mn)
        phi_tilde = phi_hat - self.phi_true
        Q = Y[:, self.o_q:self.o_g].reshape(K, mn, mn)
        Z_f = Y[:, self.o_zf:self.o_q].reshape(K, m, mn)
        e_f = Y[:, 2 * n:3 * n]
        u_ef = Y[:, self.o_uef:self.o_zf]
        e_df = self._hist_edf[:K]
        r = self._hist_r[:K]
        idx = sigma - 1
        phi_active = phi_hat[np.arange(K), idx]
        u = np.einsum("kjn,kn->kj", phi_active.reshape(K, m, n), x)
        u += np.einsum("kij,ki->kj", self.K_r[idx], r)
        h_vec = e_df - e_f @ cfg.reference.A.T
        u_ei = u_ef - np.einsum("kmn,kn->km", self.B_pinv[idx], h_vec)
        trace = Trace(
            t=t,
            sigma=sigma.copy(),
            x=x.copy(),
            xm=xm.copy(),
            e_norm=np.linalg.norm(e, axis=1),
            u=u,
            V=lyapunov_value(e, phi_tilde, self.lyapunov),
            lmin_Q=min_eig_sym(Q),
            phi_hat=phi_hat.copy(),
            phi_err=np.linalg.norm(phi_tilde, axis=2),
            s=self._hist_s[:K].copy(),
            internals={
                "e_f": e_f.copy(), "u_ef": u_ef.copy(), "Z_f": Z_f.copy(), "Q": Q.copy(),
                "G": Y[:, self.o_g:self.o_phi].copy(), "e_df": e_df.copy(), "u_ei": u_ei, "r": r.copy(),
            },
        )
        eta = auto_eta(self.iie, cfg.k_sw) if cfg.eta is None else cfg.eta.copy()
        return SimulationResult(
            config=cfg, trace=trace, iie=self.iie, fstack=self.fstack, gstack=self.gstack,
            lyapunov=self.lyapunov, phi_true=self.phi_true, eta=eta, events=list(self.events),
        )


def run_scenario(config):
    """Simulate ``config`` from ``t0`` to ``t_end`` and return the result."""
    return Simulator(config).run()
