"""Track the straight pose under the default load pulses with the three
controllers and a perturbed plant, and print the error integrals.

    python3 demos/controller_comparison.py [uncertainty]
"""
import sys

from msrm import Scenario, run_scenario

pu = float(sys.argv[1]) if len(sys.argv) > 1 else 0.25

print(f"plant inertia and stiffness scaled by {1 + pu:g}")
print(f"{'controller':>10} {'IAE':>10} {'ITAE':>10} {'ISE':>10} {'max |e| (1/m)':>14}")
rows = {}
for name in ("ABSM", "SM", "PD"):
    res = run_scenario(Scenario(controller=name, uncertainty=pu))
    m = res.metrics
    rows[name] = m
    peak = abs(res.e_p[:, [0, 2]]).max()
    print(f"{name:>10} {m.iae:10.4g} {m.itae:10.4g} {m.ise:10.4g} {peak:14.4g}")

print(f"IAE ratio SM / ABSM: {rows['SM'].iae / rows['ABSM'].iae:.1f}")
