import numpy as np
import pytest

from smrac.exceptions import NotYetExcited
from smrac.excitation import (
    GramianMemoryStack,
    GramianState,
    IIEState,
    auto_eta,
    check_iie,
    gramian_derivatives,
    gramian_load,
    gramian_save,
    verify_gain_condition,
)


def test_gramian_derivatives():
    gs = GramianState.zeros(2, 0.5)
    gs.Q[:] = np.eye(2)
    Z_f = np.array([[1.0, 2.0]])
    dQ, dG = gramian_derivatives(gs, Z_f, np.array([3.0]))
    assert np.allclose(dQ, -0.5 * np.eye(2) + [[1.0, 2.0], [2.0, 4.0]])
    assert np.allclose(dG, [3.0, 6.0])


def test_detection_is_strict_and_latches():
    gs = GramianState.zeros(2, 1.0)
    iie = IIEState.zeros(2, 2, epsilon=1e-6)
    gs.Q[:] = 1e-6 * np.eye(2)
    assert not check_iie(gs, iie, 0, 1.0)
    gs.Q[:] = 2e-6 * np.eye(2)
    gs.G[:] = [1.0, 2.0]
    assert check_iie(gs, iie, 0, 1.5, t0=0.5)
    assert iie.s.tolist() == [1, 0]
    assert iie.T[0] == 1.0 and iie.t_detect[0] == 1.5
    gs.Q[:] = np.eye(2)
    assert not check_iie(gs, iie, 0, 2.0)
    assert iie.degree(0) == pytest.approx(2e-6)
    assert np.allclose(iie.S_Gbar[0], [1.0, 2.0])
    assert iie.T_f is None
    with pytest.raises(NotYetExcited):
        iie.degree(1)


def test_gain_condition_and_auto_eta():
    iie = IIEState.zeros(2, 1)
    iie.s[:] = 1
    iie.S_Qbar[:] = [[[2.0]], [[4.0]]]
    iie.T[:] = [0.1, 0.3]
    assert iie.T_f == 0.3
    ok, margin = verify_gain_condition(iie, 0.5, 0, 0.9)
    assert ok and margin == pytest.approx(0.1)
    assert not verify_gain_condition(iie, 0.5, 0, 1.1)[0]
    assert np.allclose(auto_eta(iie, 1.0), [1.8, 3.6])


def test_stack_round_trip():
    gs = GramianState.zeros(2, 1.0)
    stack = GramianMemoryStack.zeros(3, 2)
    gs.Q[:] = [[1.0, 0.5], [0.5, 2.0]]
    gs.G[:] = [1.0, -1.0]
    gramian_save(gs, stack, 2)
    gramian_load(gs, stack, 0)
    assert np.all(gs.Q == 0) and np.all(gs.G == 0)
    gramian_load(gs, stack, 2)
    assert gs.Q[1, 1] == 2.0 and gs.G[1] == -1.0
