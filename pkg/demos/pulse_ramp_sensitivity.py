"""How the edge time of the load pulses affects the adaptive controller.

The residual follows the load through a first-order filter, so a sharp
pulse edge leaves a short burst of estimation error that the adaptation
loop tries to absorb. With very sharp edges and a strongly perturbed plant
this burst can excite a sustained oscillation; ramped edges avoid it.
"""
from msrm import Pulse, Scenario, run_scenario
from msrm.scenario import DEFAULT_SCHEDULE

pu = 0.25
print(f"{'ramp (s)':>9} {'ABSM IAE':>10} {'SM IAE':>8} {'SM/ABSM':>8}")
for ramp in (0.0, 0.05, 0.1, 0.25):
    sched = tuple(Pulse(p.start, p.end, p.wrench, ramp) for p in DEFAULT_SCHEDULE)
    iae = {c: run_scenario(Scenario(controller=c, uncertainty=pu,
                                    force_schedule=sched)).metrics.iae
           for c in ("ABSM", "SM")}
    print(f"{ramp:9.2f} {iae['ABSM']:10.4g} {iae['SM']:8.4g} {iae['SM'] / iae['ABSM']:8.1f}")
