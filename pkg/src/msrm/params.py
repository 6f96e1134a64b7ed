"""Physical constants of the two-segment soft manipulator."""
from dataclasses import dataclass, replace

from .errors import DomainError


@dataclass(frozen=True)
class RobotParams:
    """Structural parameters of the manipulator.

    Lengths and masses are per segment; stiffnesses and inertias are shared
    by both segments. Defaults are the prototype values (SI units).
    """

    r_disk: float = 0.03
    lengths: tuple = (0.15, 0.15)
    masses: tuple = (0.25, 0.25)
    k_bend: float = 0.5
    k_torsion: float = 1.0
    j_bend: float = 4.5e-3
    j_torsion: float = 9e-4
    g: float = 9.81

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        object.__setattr__(self, "masses", tuple(float(v) for v in self.masses))
        if len(self.lengths) != 2 or len(self.masses) != 2:
            raise DomainError("lengths and masses need one entry per segment")
        values = (self.r_disk, *self.lengths, *self.masses, self.k_bend,
                  self.k_torsion, self.j_bend, self.j_torsion, self.g)
        if min(values) <= 0:
            raise DomainError(f"all robot parameters must be positive, got {self}")


def perturb_params(params, fraction):
    """Return the "true plant" parameters with inertial and elastic terms
    scaled by ``1 + fraction``. Geometry and gravity are left untouched."""
    if not 0 <= fraction < 1:
        raise DomainError(f"uncertainty fraction must lie in [0, 1), got {fraction}")
    s = 1.0 + fraction
    return replace(
        params,
        masses=tuple(m * s for m in params.masses),
        k_bend=params.k_bend * s,
        k_torsion=params.k_torsion * s,
        j_bend=params.j_bend * s,
        j_torsion=params.j_torsion * s,
    )
