"""Lyapunov diagnostics and convergence metrics over completed traces.

The common Lyapunov function is

    V = 1/2 e^T P e + 1/2 sum_i phi_tilde_i^T Gamma_i^{-1} phi_tilde_i

with ``P`` solving ``A_m^T P + P A_m = -Q_m``. Everything here is post
processing: it reads traces and final estimator memory, never the plant.
"""

from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import ConfigMismatch, IIEIncomplete
from .numerics import lyapunov_solve, min_eig_sym

MONOTONIC_REL_TOL = 1e-7
BOUND_SLACK = 1e-6


@dataclass(eq=False)
class LyapunovContext:
    P: np.ndarray
    Q_m: np.ndarray
    Gamma_inv: np.ndarray  # (M, mn, mn)

    @classmethod
    def build(cls, A_m, Q_m, Gamma):
        P = lyapunov_solve(A_m, Q_m)
        Gamma_inv = np.linalg.inv(np.asarray(Gamma, dtype=float))
        Gamma_inv = 0.5 * (Gamma_inv + np.swapaxes(Gamma_inv, -1, -2))
        return cls(P, np.asarray(Q_m, dtype=float), Gamma_inv)

    @property
    def lambda_m(self):
        return float(min(min_eig_sym(self.P), np.min(min_eig_sym(self.Gamma_inv))))

    @property
    def lambda_M(self):
        top_P = np.linalg.eigvalsh(self.P)[-1]
        top_G = np.max(np.linalg.eigvalsh(self.Gamma_inv)[..., -1])
        return float(max(top_P, top_G))

    @property
    def gamma1(self):
        """Overshoot constant ``sqrt(lambda_M / lambda_m)`` of the decay bound."""
        return float(np.sqrt(self.lambda_M / self.lambda_m))


def lyapunov_value(e, phi_tilde, ctx):
    """``V`` for one point or a batch (``e``: (..., n), ``phi_tilde``: (..., M, mn))."""
    e = np.asarray(e, dtype=float)
    phi_tilde = np.asarray(phi_tilde, dtype=float)
    v_e = 0.5 * np.einsum("...i,ij,...j->...", e, ctx.P, e)
    v_phi = 0.5 * np.einsum("...ki,kij,...kj->...", phi_tilde, ctx.Gamma_inv, phi_tilde)
    return v_e + v_phi


def sandwich_check(trace, ctx, rel_tol=1e-12):
    """Check ``lambda_m/2 |xi|^2 <= V <= lambda_M/2 |xi|^2`` on every row.

    Returns ``(ok, worst_margin)`` where the margin is the smallest gap to
    either bound, normalised by ``|xi|^2``.
    """
    xi2 = trace.xi_norm**2
    lower = 0.5 * ctx.lambda_m * xi2
    upper = 0.5 * ctx.lambda_M * xi2
    slack = rel_tol * np.maximum(xi2, 1e-300)
    ok = bool(np.all(lower <= trace.V + slack) and np.all(trace.V <= upper + slack))
    scale = np.maximum(xi2, 1e-300)
    margin = float(np.min(np.minimum(trace.V - lower, upper - trace.V) / scale))
    return ok, margin


@dataclass
class MonotonicityResult:
    worst_increment: float
    budget: float
    passed: bool
    at_time: float = None


def monotonicity_check(V, t=None, rel_tol=MONOTONIC_REL_TOL):
    """Largest step-to-step increase of ``V`` against a ``rel_tol * max(V)`` budget."""
    V = np.asarray(V, dtype=float)
    if V.size < 2:
        return MonotonicityResult(0.0, rel_tol * float(np.max(np.abs(V), initial=0.0)), True)
    dV = np.diff(V)
    k = int(np.argmax(dV))
    worst = float(dV[k])
    budget = rel_tol * float(np.max(V))
    at = None if t is None else float(t[k + 1])
    return MonotonicityResult(worst, budget, worst <= budget, at)


@dataclass
class DecayFit:
    rate: float
    envelope_rate: float
    gamma1: float
    bound_ok: bool
    xi_start: float
    xi_end: float

    @property
    def ratio(self):
        return self.xi_end / self.xi_start if self.xi_start > 0 else float("nan")


def decay_fit(trace, T_f, gamma1=1.0, t0=None):
    """Exponential decay of ``|xi|`` on ``[t0 + T_f, t_end]``.

    ``rate`` is minus the least-squares slope of ``log |xi|``.
    ``envelope_rate`` is the largest ``g`` with
    ``|xi(t)| <= gamma1 |xi(t0+T_f)| exp(-g (t - t0 - T_f))`` on every sample;
    ``bound_ok`` says it is positive.
    """
    if T_f is None or not np.isfinite(T_f):
        raise IIEIncomplete("excitation was not detected for every subsystem")
    t0 = float(trace.t[0]) if t0 is None else float(t0)
    start = int(np.searchsorted(trace.t, t0 + T_f - 1e-12))
    if start >= len(trace) or not np.all(trace.s[start] == 1):
        raise IIEIncomplete(f"not every subsystem is excited at t0 + T_f = {t0 + T_f:.6g}")
    t = trace.t[start:]
    xi = trace.xi_norm[start:]
    if t.size < 2:
        return DecayFit(0.0, 0.0, gamma1, False, float(xi[0]), float(xi[-1]))
    tiny = np.finfo(float).tiny
    logs = np.log(np.maximum(xi, tiny))
    dt = t[1:] - t[0]
    rate = float(-np.polyfit(t - t[0], logs, 1)[0])
    if abs(rate) < 1e-13:
        rate = 0.0
    headroom = np.log(gamma1 * max(xi[0], tiny) * (1.0 + BOUND_SLACK)) - logs[1:]
    envelope_rate = float(np.min(headroom / dt))
    return DecayFit(rate, envelope_rate, float(gamma1), envelope_rate > 0, float(xi[0]), float(xi[-1]))


def inactive_intervals(schedule, t_end, i_id):
    """Inactive stretches of subsystem ``i_id`` after its first activation."""
    out = []
    seen = False
    for start, stop, sid in schedule.intervals(t_end):
        if sid == i_id:
            seen = True
        elif seen:
            if out and np.isclose(out[-1][1], start):
                out[-1] = (out[-1][0], stop)
            else:
                out.append((start, stop))
    return out


def inactive_changes(trace, schedule, t_end):
    """Per subsystem id: ``[(start, stop, |phi_tilde| at start, at stop), ...]``."""
    result = {}
    for i in range(trace.M):
        rows = []
        for start, stop in inactive_intervals(schedule, t_end, i + 1):
            ka = int(np.searchsorted(trace.t, start - 1e-9))
            kb = int(np.searchsorted(trace.t, stop - 1e-9))
            kb = min(kb, len(trace) - 1)
            rows.append((start, stop, float(trace.phi_err[ka, i]), float(trace.phi_err[kb, i])))
        result[i + 1] = rows
    return result


def alpha_reference(ctx, iie, fstack, gstack, eta):
    """Conservative decay rate from the stability proof, for reference only.

    For each choice of active subsystem ``a``:
    ``alpha_a = min(lambda_min(Q_m), 2 eta_a, 2 sum_{i != a} min(lZ_i, lQ_i, eta_i)) / lambda_M``.
    The returned ``alpha`` is the minimum over ``a``; ``gamma2 = alpha / 2``.
    """
    M = gstack.Q.shape[0]
    lam_Z = np.array([float(min_eig_sym(fstack.Z_f[i].T @ fstack.Z_f[i])) for i in range(M)])
    lam_Q = np.array([float(min_eig_sym(gstack.Q[i])) for i in range(M)])
    eta = np.asarray(eta, dtype=float)
    lam_Qm = float(min_eig_sym(ctx.Q_m))
    alphas = []
    for a in range(M):
        rho_a = 2.0 * eta[a]
        rho_i = 2.0 * sum(min(lam_Z[i], lam_Q[i], eta[i]) for i in range(M) if i != a)
        alphas.append(min(lam_Qm, rho_a, rho_i) / ctx.lambda_M)
    alpha = float(np.nanmin(alphas)) if np.any(np.isfinite(alphas)) else float("nan")
    return {
        "alpha": alpha,
        "gamma2": alpha / 2.0,
        "lambda_mZ": lam_Z.tolist(),
        "lambda_mQ": lam_Q.tolist(),
    }


@dataclass
class ConvergenceReport:
    T: list
    t_detect: list
    excitation_degree: list  # lambda_min(S_Qbar_i)
    excitation_integral: list  # lambda_min of the active-phase integral of Z_f^T Z_f up to T_i
    eta: list
    gain_margin: list
    gain_ok: list
    all_excited: bool
    T_f: float
    gamma1: float
    decay_rate: float
    envelope_rate: float
    bound_ok: bool
    xi_ratio: float
    monotonic: dict
    sandwich_ok: bool
    alpha_reference: dict
    final_phi_err: list
    final_e_norm: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def excitation_integral(trace, i, T_i, t0):
    """``lambda_min`` of the active-phase integral of ``Z_f^T Z_f`` over ``[t0, t0 + T_i]``."""
    Zf = trace.internals["Z_f"]
    stop = int(np.searchsorted(trace.t, t0 + T_i + 1e-12))
    mask = (trace.sigma[:stop] == i + 1).astype(float)
    integrand = np.einsum("kji,kjl->kil", Zf[:stop], Zf[:stop]) * mask[:, None, None]
    if stop < 2:
        return 0.0
    gram = np.trapezoid(integrand, trace.t[:stop], axis=0)
    return float(min_eig_sym(gram))


def convergence_report(result):
    """Assemble Lyapunov and excitation diagnostics for a finished run."""
    cfg, trace, iie, ctx = result.config, result.trace, result.iie, result.lyapunov
    M = cfg.M
    t0 = cfg.schedule.t0
    eta = result.eta
    notes = []
    margins, oks, degrees, integrals = [], [], [], []
    for i in range(M):
        if iie.s[i]:
            degrees.append(iie.degree(i))
            margin = cfg.k_sw[i] * degrees[-1] - eta[i]
            margins.append(float(margin))
            oks.append(bool(margin >= 0))
            integrals.append(excitation_integral(trace, i, iie.T[i], t0) if trace.internals else None)
        else:
            degrees.append(None)
            margins.append(None)
            oks.append(None)
            integrals.append(None)
            notes.append(f"subsystem {i + 1} never met the excitation condition")
    mono = monotonicity_check(trace.V, trace.t)
    sandwich_ok, _ = sandwich_check(trace, ctx)
    T_f = iie.T_f
    if T_f is not None:
        fit = decay_fit(trace, T_f, ctx.gamma1, t0)
        rate, env, bound_ok, ratio = fit.rate, fit.envelope_rate, fit.bound_ok, fit.ratio
    else:
        rate, env, bound_ok, ratio = None, None, False, None
    eta_for_alpha = np.where(np.isfinite(eta), eta, 0.0)
    return ConvergenceReport(
        T=[None if not np.isfinite(v) else float(v) for v in iie.T],
        t_detect=[None if not np.isfinite(v) else float(v) for v in iie.t_detect],
        excitation_degree=degrees,
        excitation_integral=integrals,
        eta=[None if not np.isfinite(v) else float(v) for v in eta],
        gain_margin=margins,
        gain_ok=oks,
        all_excited=iie.all_excited,
        T_f=T_f,
        gamma1=ctx.gamma1,
        decay_rate=rate,
        envelope_rate=env,
        bound_ok=bound_ok,
        xi_ratio=ratio,
        monotonic=asdict(mono),
        sandwich_ok=sandwich_ok,
        alpha_reference=alpha_reference(ctx, iie, result.fstack, result.gstack, eta_for_alpha),
        final_phi_err=trace.phi_err[-1].tolist(),
        final_e_norm=float(trace.e_norm[-1]),
        notes=notes,
    )


@dataclass
class Comparison:
    phi_err_delta: np.ndarray  # memory minus baseline, (N, M)
    ise_memory: float
    ise_baseline: float
    final_sum_memory: float
    final_sum_baseline: float
    inactive_memory: dict
    inactive_baseline: dict

    @property
    def memory_better(self):
        return self.final_sum_memory <= self.final_sum_baseline

    def to_dict(self):
        return _jsonable({
            "ise_memory": self.ise_memory,
            "ise_baseline": self.ise_baseline,
            "final_sum_phi_err_memory": self.final_sum_memory,
            "final_sum_phi_err_baseline": self.final_sum_baseline,
            "memory_better": self.memory_better,
            "max_abs_phi_err_delta": np.max(np.abs(self.phi_err_delta), axis=0),
            "final_phi_err_delta": self.phi_err_delta[-1],
            "inactive_memory": {str(k): v for k, v in self.inactive_memory.items()},
            "inactive_baseline": {str(k): v for k, v in self.inactive_baseline.items()},
        })


def compare_runs(memory, baseline):
    """Contrast two runs whose configurations differ at most in estimator mode."""
    a = memory.config.to_dict()
    b = baseline.config.to_dict()
    a.get("simulation", {}).pop("mode", None)
    b.get("simulation", {}).pop("mode", None)
    if a != b:
        raise ConfigMismatch("runs differ in more than the estimator mode")
    tm, tb = memory.trace, baseline.trace
    cfg = memory.config
    return Comparison(
        phi_err_delta=tm.phi_err - tb.phi_err,
        ise_memory=float(np.trapezoid(tm.e_norm**2, tm.t)),
        ise_baseline=float(np.trapezoid(tb.e_norm**2, tb.t)),
        final_sum_memory=float(np.sum(tm.phi_err[-1])),
        final_sum_baseline=float(np.sum(tb.phi_err[-1])),
        inactive_memory=inactive_changes(tm, cfg.schedule, cfg.t_end),
        inactive_baseline=inactive_changes(tb, cfg.schedule, cfg.t_end),
    )
