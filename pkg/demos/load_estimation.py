"""Momentum-residual load estimation.

First a robot held still under a constant load, for three residual gains;
then the residual against the true mapped load during the default
closed-loop run.
"""
import numpy as np

from msrm import Scenario, run_scenario
from msrm.estimator import residual_reference, static_step_response

load = np.array([0.12, 0.0, 0.12, 0.0])
print("static step, kappa1 channel (N m)")
print(f"{'t (s)':>6}" + "".join(f"{'K_I=' + format(k, 'g'):>12}" for k in (10, 100, 1000)))
traces = {k: static_step_response(load, k, 1e-3, 0.1) for k in (10.0, 100.0, 1000.0)}
for i in (0, 5, 10, 20, 50, 100):
    t = traces[10.0][0][i]
    print(f"{t:6.3f}" + "".join(f"{traces[k][1][i, 0]:12.5f}" for k in traces))
for k, (t, r) in traces.items():
    err = np.abs(r - residual_reference(load, k, t[:, None])).max()
    print(f"K_I={k:g}: max deviation from the first-order response {err:.1e}")

res = run_scenario(Scenario())
print("\nclosed loop, default pulses (kappa1 channel)")
for t in (1.0, 2.1, 2.5, 2.9, 4.5, 5.0, 7.0, 9.0):
    k = int(np.searchsorted(res.t, t))
    print(f"t={t:4.1f} s  true {res.tau_e[k, 0]:+.4f}  residual {res.r[k, 0]:+.4f}")
