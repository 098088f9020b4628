"""Crossing of the excited and ground channel elements on a short thermal chain.

The dense engine evolves emitter plus eight sites exactly.  With the lower
band edge filled, the emitter can end up more excited when starting in the
ground state than when starting excited.
"""

# %%
import numpy as np

from spinbath.blp import backflow_witness
from spinbath.channel import rates_analytic, time_grid
from spinbath.dense import tomography
from spinbath.model import EnvInitialState, SystemSpec

# %%
t = time_grid(10, 0.05)
env = EnvInitialState.thermal(10.0)
for Dh in (-2.0, -1.9, -1.8, -1.7, -1.6):
    traj = tomography(SystemSpec.from_detuning(8, 0.4, Dh, m0=4, h=1.0), env, t)
    gap = traj.a - traj.c
    cross = t[np.argmax(gap < 0)] if np.any(gap < 0) else None
    print(f"Delta_h={Dh:+.1f}  min(a-c)={gap.min():+.3f}  crossing at tJ={cross}")

# %% [markdown]
# Take the first detuning with a crossing and compare where divisibility
# breaks with where trace-distance backflow starts.

# %%
spec = SystemSpec.from_detuning(8, 0.4, -1.8, m0=4, h=1.0)
traj = tomography(spec, env, t)
rates = rates_analytic(traj)
intervals, _ = backflow_witness(traj)
print("gamma1 first negative at tJ =", t[np.argmax(rates.gamma1 < 0)])
print("divergent samples at tJ =", t[rates.divergent])
print("first backflow interval starts at tJ =", intervals[0].start if intervals else None)
