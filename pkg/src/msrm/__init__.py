"""Simulation and control of a two-segment cable-driven soft manipulator.

Constant-curvature kinematics, pseudo-rigid-body dynamics, sliding-mode
and computed-torque tracking controllers, a certified variable-impedance
outer loop and a generalized-momentum load estimator, plus a scenario
harness with a command-line interface.
"""
from .errors import (CertificationError, ConfigError, DomainError, SimulationError,
                     SingularityWarning)
from .params import RobotParams, perturb_params
from .scenario import Pulse, Scenario, force_at, load_scenario
from .simulation import rk4_step, run_scenario

__all__ = [
    "CertificationError", "ConfigError", "DomainError", "SimulationError",
    "SingularityWarning", "RobotParams", "perturb_params", "Pulse", "Scenario",
    "force_at", "load_scenario", "rk4_step", "run_scenario",
]
__version__ = "0.1.0"
