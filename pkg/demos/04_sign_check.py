"""
A check that can fail
=====================

The monotonicity diagnostic is only useful if it notices a broken loop.
Reversing the adaptation direction makes ``V`` grow within a second.
"""

# %%
import smrac
from smrac import analysis
from smrac.exceptions import NumericalBlowup

cfg = smrac.default_config(t_end=1.0)
for sign in (1.0, -1.0):
    res = smrac.run_scenario(cfg.replace(adaptation_sign=sign))
    mono = analysis.monotonicity_check(res.trace.V, res.trace.t)
    print(f"sign {sign:+.0f}: max dV {mono.worst_increment:+.2e}, passed = {mono.passed}")

# %%
# Left running, the reversed loop diverges and the simulator stops.
try:
    smrac.run_scenario(smrac.default_config(t_end=10.0, adaptation_sign=-1.0))
except NumericalBlowup as exc:
    print("stopped:", exc)
