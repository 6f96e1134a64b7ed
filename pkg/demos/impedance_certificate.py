"""Stability certificates of the built-in impedance profiles and of a
profile whose stiffness changes too fast to be certified."""
from msrm import CertificationError
from msrm.impedance import (ImpedanceProfile, ScalarSignal, certify, default_time_grid,
                            feasible_alpha_interval, invariable_profile, select_alpha,
                            variable_profile)

grid = default_time_grid(10.0)

for prof in (variable_profile(), invariable_profile()):
    lo, hi = feasible_alpha_interval(prof, grid)
    alpha = select_alpha(prof, grid)
    rep = certify(prof, grid, alpha)
    print(f"{prof.name:>10}: certified alpha in [{lo:.4g}, {hi:.4g}], chosen {alpha:.4f}")
    print(f"{'':>10}  B-margin {rep.b_margin:.2e}  Q-margin {rep.q_margin:.4f}  "
          f"min eig(mu) {rep.mu_margin:.3f}  passed {rep.passed}")

rep = certify(variable_profile(), grid, 2 * select_alpha(variable_profile(), grid))
print(f"variable at twice the alpha: passed {rep.passed}, first violation at "
      f"t={rep.violation_time:.3f} s (eigenvalue {rep.violation_eigenvalue:.3g})")

fast = ImpedanceProfile(inertia=ScalarSignal(1.0), damping=ScalarSignal(0.5),
                        stiffness=ScalarSignal(0.2, 0.19, 50.0), name="fast stiffness")
try:
    select_alpha(fast, grid)
except CertificationError as exc:
    print(f"{fast.name}: rejected ({exc})")
