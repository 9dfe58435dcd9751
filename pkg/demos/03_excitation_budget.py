"""
How much probing is enough
==========================

Detection needs ``lambda_min(Q) > epsilon``. Shrinking the amplitude of
the decaying probing signal delays detection; below some level a
subsystem never gets excited within its 30 s window.
"""

# %%
import numpy as np

import smrac
from smrac.engine import ReferenceSignal

cfg = smrac.default_config(t_end=120.0)

for amplitude in (10.0, 1.0, 0.1, 0.01):
    sig = ReferenceSignal(cfg.signal.rbar, amplitude, cfg.signal.decay, cfg.signal.frequencies)
    res = smrac.run_scenario(cfg.replace(signal=sig))
    times = ["  --  " if np.isnan(t) else f"{t:6.3f}" for t in res.iie.t_detect]
    print(f"amplitude {amplitude:5.2f}: detection times {' '.join(times)}")

# %%
# Raising the threshold delays detection but freezes a better conditioned
# snapshot; its smallest eigenvalue caps the usable convergence rate.
for eps in (1e-8, 1e-6, 1e-4):
    res = smrac.run_scenario(cfg.replace(epsilon_iie=eps))
    print(f"epsilon {eps:.0e}: T_1 = {res.iie.T[0]:.3f} s, lambda_min(S_Qbar_1) = {res.iie.degree(0):.2e}")
