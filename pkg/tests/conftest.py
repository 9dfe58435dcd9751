import time

import numpy as np
import pytest

from smrac import default_config, run_scenario
from smrac.engine import ReferenceSignal, SimulationConfig
from smrac.system_model import ReferenceModel, Subsystem, SwitchSchedule

_CRITERIA = {}


def record_criterion(key, passed, detail):
    """Remember one acceptance verdict; printed in the terminal summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] {key}: {detail}"
    _CRITERIA[key] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA, key=lambda k: int(k.split()[0][1:])):
        terminalreporter.write_line(_CRITERIA[key])


@pytest.fixture(scope="session")
def default_cfg():
    return default_config()


@pytest.fixture(scope="session")
def memory_run(default_cfg):
    start = time.perf_counter()
    result = run_scenario(default_cfg)
    result.elapsed = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def baseline_run(default_cfg):
    return run_scenario(default_cfg.replace(mode="baseline"))


def small_config(t_end=2.0, interval=0.5, h=1e-3, **kw):
    """Two-subsystem scalar-input plant with short switching intervals."""
    A_m = np.array([[0.0, 1.0], [-2.0, -3.0]])
    B_m = np.array([[0.0], [1.0]])
    subs = [
        Subsystem(np.array([[0.0, 1.0], [1.0, -1.0]]), B_m),
        Subsystem(np.array([[0.0, 1.0], [-1.0, 0.5]]), 2.0 * B_m),
    ]
    schedule = SwitchSchedule.periodic(0.0, interval, [1, 2], t_end)
    base = dict(
        subsystems=subs,
        reference=ReferenceModel(A_m, B_m),
        schedule=schedule,
        signal=ReferenceSignal(np.zeros(1), 5.0, 0.2, (1.0, 2.0, 3.0)),
        h=h,
        t_end=t_end,
        x0=np.array([0.5, -0.2]),
    )
    base.update(kw)
    return SimulationConfig(**base)


def random_stable_config(rng, t_end=20.0, interval=5.0):
    """Random matched switched plant around a random Hurwitz reference model.

    ``B_i = B_m M_i`` with invertible ``M_i`` so exact matching exists.
    """
    n = int(rng.integers(2, 4))
    m = int(rng.integers(1, min(n, 2) + 1))
    M = int(rng.integers(2, 4))
    poles = -rng.uniform(0.5, 4.0, n)
    T = rng.normal(size=(n, n)) + 2.0 * np.eye(n)
    A_m = T @ np.diag(poles) @ np.linalg.inv(T)
    B_m = rng.normal(size=(n, m))
    while np.linalg.matrix_rank(B_m) < m:
        B_m = rng.normal(size=(n, m))
    subs = []
    for _ in range(M):
        Mi = rng.normal(size=(m, m)) + 2.0 * np.eye(m)
        B = B_m @ Mi
        K_x = rng.uniform(-2.0, 2.0, size=(n, m))
        subs.append(Subsystem(A_m - B @ K_x.T, B))
    pattern = list(range(1, M + 1))
    schedule = SwitchSchedule.periodic(0.0, interval, pattern, t_end)
    return SimulationConfig(
        subsystems=subs,
        reference=ReferenceModel(A_m, B_m),
        schedule=schedule,
        signal=ReferenceSignal(rng.uniform(-1.0, 1.0, m), 5.0, 0.1, (2.0, 3.0, 4.0, 5.0, 6.0)),
        h=2e-3,
        t_end=t_end,
        x0=rng.uniform(-1.0, 1.0, n),
    )
