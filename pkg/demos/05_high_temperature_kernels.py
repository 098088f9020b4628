"""Environment correlation functions at high temperature.

The string operator makes the chain state non-Gaussian for the emitter, but
the correlation functions remain Gaussian traces that need only N x N
matrices.
"""

# %%
import numpy as np

from spinbath.correlations import (
    closed_form_infinite_T,
    complex_kernels,
    correlation_gaussian,
    correlation_time,
)
from spinbath.model import SystemSpec

# %%
t = np.linspace(0, 6, 241)
spec = SystemSpec(N=120, Omega=0.4, Delta=0.0, m0=60)
series = correlation_gaussian(spec, beta=0.05, t_grid=t)
ref = closed_form_infinite_T(spec, t)
print("sum rule error:", series.sum_rule_error())
print("max | |alpha+| - exp(-t^2)/2 | for tJ<=3:", np.abs(np.abs(series.alpha_plus) - np.abs(ref.alpha_plus))[t <= 3].max())

# %% [markdown]
# Correlation times at the band centre and at the band edge.  For centre
# coupling the Gaussian envelope does not care about the detuning.  Edge
# coupling has a power-law tail and no finite decay time.

# %%
for Dh in (0.0, -2.0):
    s = SystemSpec.from_detuning(120, 0.4, Dh, m0=60, h=1.0)
    kp, _ = complex_kernels(correlation_gaussian(s, 0.05, t), s.Delta)
    ct = correlation_time(t, kp, Omega=s.Omega)
    print(f"centre Delta_h={Dh:+.1f}: tau_c={ct.tau_c:.3f}, Omega*tau_c={ct.omega_tau_c:.3f}")

t_long = np.linspace(0, 60, 3001)
edge = SystemSpec.from_detuning(2000, 0.4, -2.0, m0=1)
kp, _ = complex_kernels(closed_form_infinite_T(edge, t_long), edge.Delta)
print("edge coupling:", correlation_time(t_long, kp, Omega=0.4))
