import numpy as np
import pytest

from conftest import small_config
from smrac import analysis, run_scenario
from smrac.engine import ReferenceSignal, SimulationConfig, Simulator, reference_input
from smrac.estimator import (
    adaptation_terms_active,
    adaptation_terms_inactive,
    baseline_estimate_derivative,
    estimate_derivative,
)
from smrac.exceptions import ConfigError, DimensionMismatch, NumericalBlowup
from smrac.excitation import gramian_derivatives
from smrac.memory_filters import FilterBank, derived_signals, filter_derivatives
from smrac.system_model import (
    ReferenceModel,
    Subsystem,
    SwitchSchedule,
    control_input,
    plant_derivative,
    reference_derivative,
    regressor,
)


def modular_rhs(sim):
    """Closed-loop derivative assembled from the per-module reference functions."""
    cfg = sim.config
    i = sim.active
    sub = cfg.subsystems[i]
    x, xm = sim.x.copy(), sim.xm.copy()
    e = x - xm
    r = sim.current_r()
    phi = sim.phi.copy()
    u, _, u_e = control_input(x, r, phi[i], sim.K_r[i])
    Z = regressor(x, cfg.m)
    bank = sim.bank
    d_ef, d_uef, d_Zf = filter_derivatives(bank, e, u_e, Z)
    _, _, u_ei = derived_signals(bank, cfg.reference, sub.B)
    dQ, dG = gramian_derivatives(sim.gramian, bank.Z_f, u_ei)
    dphi = np.zeros_like(phi)
    for k in range(cfg.M):
        if k == i:
            terms = adaptation_terms_active(
                Z, e, sim.lyapunov.P, sub.B, bank.Z_f, u_ei, sim.gramian.Q, sim.gramian.G, sim.iie, k, phi[k], sim.gains
            )
        else:
            terms = adaptation_terms_inactive(sim.fstack, sim.gstack, sim.iie, k, phi[k], sim.gains, cfg.inactive_target)
        if cfg.mode == "memory":
            dphi[k] = estimate_derivative(terms, sim.gains.Gamma[k])
        else:
            dphi[k] = baseline_estimate_derivative(terms, sim.gains.Gamma[k])
    return np.concatenate([
        plant_derivative(sub, x, u), reference_derivative(cfg.reference, xm, r),
        d_ef, d_uef, d_Zf.ravel(), dQ.ravel(), dG, dphi.ravel(),
    ])


@pytest.mark.parametrize("mode", ["memory", "baseline"])
def test_kernel_matches_modules(mode):
    cfg = small_config(t_end=2.0, interval=0.5, mode=mode, epsilon_iie=1e-4)
    sim = Simulator(cfg)
    checked = 0
    while sim.k < cfg.steps:
        sim.step()
        if sim.k % 97 == 0:
            fast = sim.derivative(sim.t, sim.y)
            slow = modular_rhs(sim)
            assert np.allclose(fast, slow, rtol=1e-10, atol=1e-12)
            checked += 1
    assert checked >= 10
    assert sim.iie.s.any() and len(sim.events) == 3


def test_continuity_across_switches():
    res = run_scenario(small_config(t_end=2.0, interval=0.5))
    tr = res.trace
    for ev in res.events:
        k = int(round(ev.t / res.config.h))
        # plant state and estimates are integrated through the switch without resets
        assert np.abs(tr.x[k] - tr.x[k - 1]).max() < 0.05
        assert np.abs(tr.phi_hat[k] - tr.phi_hat[k - 1]).max() < 0.05
        assert ev.V_before == pytest.approx(ev.V_after, rel=1e-12)
        assert tr.sigma[k] == ev.incoming and tr.sigma[k - 1] == ev.outgoing


def test_deterministic_in_process():
    a = run_scenario(small_config(t_end=1.0))
    b = run_scenario(small_config(t_end=1.0))
    assert np.array_equal(a.trace.to_table(), b.trace.to_table())


def test_memory_identities_on_small_plant():
    res = run_scenario(small_config(t_end=3.0, interval=0.75))
    tr = res.trace
    phi = res.phi_true[tr.sigma - 1]
    assert np.abs(tr.internals["u_ei"] - np.einsum("kij,kj->ki", tr.internals["Z_f"], phi)).max() < 1e-9
    assert np.abs(tr.internals["G"] - np.einsum("kij,kj->ki", tr.internals["Q"], phi)).max() < 1e-9
    assert analysis.monotonicity_check(tr.V).passed


def test_edf_target_mode_differs_from_default():
    # the literal e_df target carries no monotonicity guarantee; it must run and change the estimates
    A_m = -np.eye(2)
    B_m = np.eye(2)
    subs = [Subsystem(-2 * np.eye(2), B_m), Subsystem(np.array([[0.0, 1.0], [-1.0, -1.0]]), B_m)]
    cfg = SimulationConfig(
        subsystems=subs, reference=ReferenceModel(A_m, B_m),
        schedule=SwitchSchedule.periodic(0.0, 0.5, [1, 2], 2.0), t_end=2.0,
        signal=ReferenceSignal(np.zeros(2)), inactive_target="e_df", x0=np.array([1.0, -1.0]),
    )
    literal = run_scenario(cfg)
    default = run_scenario(cfg.replace(inactive_target="u_ei"))
    assert np.all(np.isfinite(literal.trace.V))
    assert analysis.monotonicity_check(default.trace.V).passed
    assert not np.allclose(literal.trace.phi_hat[-1], default.trace.phi_hat[-1])


def test_reference_signal_restarts():
    sched = SwitchSchedule(0.0, (1.0,), (1, 2))
    sig = ReferenceSignal(np.array([0.5]), 10.0, 0.1, (2.0, 3.0))
    assert reference_input(0.0, sched, sig) == pytest.approx([0.5])
    assert reference_input(1.0, sched, sig) == pytest.approx([0.5])
    tau = 0.3
    expected = 0.5 + 10 * np.exp(-0.1 * tau) * (np.sin(2 * tau) + np.sin(3 * tau))
    assert reference_input(1.3, sched, sig) == pytest.approx([expected])


def test_config_problems_listed():
    cfg = small_config(t_end=1.0005, h=1e-3)
    assert any("grid" in p for p in cfg.problems())
    with pytest.raises(ConfigError):
        cfg.validate()
    bad = small_config(k_l=-1.0, mode="other")
    probs = bad.problems()
    assert any("k_l" in p for p in probs) and any("mode" in p for p in probs)
    with pytest.raises(DimensionMismatch):
        small_config(x0=np.zeros(3))
    with pytest.raises(ConfigError):
        small_config(k_sw=[1.0, 2.0, 3.0])


def test_replace_truncates_schedule():
    cfg = small_config(t_end=2.0, interval=0.5)
    short = cfg.replace(t_end=0.75)
    assert short.schedule.instants == (0.5,)
    assert short.schedule.sequence == (1, 2)


def test_blowup_is_reported():
    cfg = small_config(t_end=5.0, Gamma=1e6, adaptation_sign=-1.0)
    with pytest.raises(NumericalBlowup):
        run_scenario(cfg)


def test_initial_state_and_filter_bank_views():
    sim = Simulator(small_config())
    assert isinstance(sim.bank, FilterBank)
    sim.bank.e_f[:] = 3.0
    assert np.all(sim.y[4:6] == 3.0)
