"""Fixed-step closed-loop simulation.

Stacked state (24 values)::

    [Omega, Omega_dot, D_hat, Omega_ref, Omega_ref_dot, drive]

``drive`` is ``int (tau_c - N) dt`` over the current step; it is reset every
step and handed to the momentum estimator.

Loop order per step: read plant state -> estimator output from the previous
step, held over the step -> RK4 over (plant, controller, adaptation,
reference, drive integral), with the controller and the configuration
impedance evaluated at every stage -> estimator update on the post-step
state.
"""
import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import controllers as ctl
from .dynamics import dynamics_terms, mass_matrix, solve_spd
from .errors import DomainError, SimulationError
from .estimator import estimator_init, estimator_update
from . import _kernels as _k
from .impedance import (JDOT_STEP, default_time_grid, invariable_profile, select_alpha,
                        task_matrices, variable_profile)
from .kinematics import configuration_to_actuators, jacobian_config_to_task, tip_pose
from .metrics import metric_iae, metric_ise, metric_itae, metric_rmse
from .params import RobotParams, perturb_params
from .scenario import force_at

COORDS = ("kappa1", "phi1", "kappa2", "phi2")
CURVATURE = [0, 2]
CSV_COLUMNS = (
    ["t"]
    + [f"omega_{c}" for c in COORDS]
    + [f"omega_dot_{c}" for c in COORDS]
    + [f"e_p_{c}" for c in COORDS]
    + [f"s_{c}" for c in COORDS]
    + [f"tau_c_{c}" for c in COORDS]
    + [f"r_{c}" for c in COORDS]
    + ["v3_dot"]
    + [f"cable_{i}{j}" for i in (1, 2) for j in (1, 2, 3)]
    + [f"task_err_{c}" for c in ("x", "y", "z", "wx", "wy", "wz")]
)

_S = {name: slice(4 * i, 4 * i + 4) for i, name in
      enumerate(("omega", "omega_dot", "d_hat", "ref", "ref_dot", "drive"))}


def rk4_step(x, f, t, dt, k1=None):
    """Classical Runge-Kutta step of ``x' = f(t, x)``.

    ``k1`` may be supplied when ``f(t, x)`` was already evaluated. A
    non-finite stage derivative raises :class:`SimulationError`.
    """
    def stage(tt, xx):
        k = f(tt, xx)
        if not math.isfinite(k.sum()):
            raise SimulationError(f"non-finite derivative at t={tt:.6g}", time=tt)
        return k

    if k1 is None:
        k1 = stage(t, x)
    elif not math.isfinite(k1.sum()):
        raise SimulationError(f"non-finite derivative at t={t:.6g}", time=t)
    h = 0.5 * dt
    k2 = stage(t + h, x + h * k1)
    k3 = stage(t + h, x + h * k2)
    k4 = stage(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class MetricsSummary:
    controller: str
    scenario: str
    rmse: tuple
    iae: float
    itae: float
    ise: float

    def to_dict(self):
        return {"scenario": self.scenario, "controller": self.controller,
                "rmse": dict(zip(COORDS, self.rmse)),
                "iae": self.iae, "itae": self.itae, "ise": self.ise}


def summarize(t, e_p, controller, scenario_name):
    curv = e_p[:, CURVATURE]
    return MetricsSummary(
        controller=controller, scenario=scenario_name,
        rmse=tuple(float(v) for v in metric_rmse(t, e_p)),
        iae=metric_iae(t, curv), itae=metric_itae(t, curv), ise=metric_ise(t, curv))


@dataclass
class SimulationResult:
    scenario: object
    alpha: float
    t: np.ndarray
    omega: np.ndarray
    omega_dot: np.ndarray
    omega_ref: np.ndarray
    e_p: np.ndarray
    s: np.ndarray
    tau_c: np.ndarray
    tau_e: np.ndarray
    r: np.ndarray
    d_hat: np.ndarray
    v3: np.ndarray
    # v3_dot is the design bound -E^T Phi E; v3_dot_actual is dV3/dt along
    # the simulated trajectory (slowly varying D assumed)
    v3_dot: np.ndarray
    v3_dot_actual: np.ndarray
    cables: np.ndarray
    task_error: np.ndarray
    metrics: MetricsSummary = None
    extras: dict = field(default_factory=dict)

    def table(self):
        return np.column_stack([self.t, self.omega, self.omega_dot, self.e_p, self.s,
                                self.tau_c, self.r, self.v3_dot, self.cables,
                                self.task_error])

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.table():
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


class ClosedLoop:
    """Right-hand side of the stacked closed-loop system for one scenario."""

    def __init__(self, scenario, params=None, absm=None, pd=None):
        self.sc = scenario
        self.nominal = params or RobotParams()
        self.plant = perturb_params(self.nominal, scenario.uncertainty)
        self.estimator_model = self.plant if scenario.estimator_true_model else self.nominal
        self.absm = absm or ctl.ABSMParams()
        self.pd = pd or ctl.PDParams()
        self.omega_d = np.array(scenario.omega_d)
        self.schedule = scenario.force_schedule
        self._exact_model = self.plant == self.nominal
        if scenario.adaptation == "scaled":
            self.gain = ctl.inertia_scaled_gain(mass_matrix(self.omega_d, self.nominal),
                                                self.absm.eta)
        else:
            self.gain = self.absm.eta
        self.alpha = None
        self.profile = None
        if scenario.impedance == "variable":
            alpha = scenario.alpha
            if alpha is None:
                alpha = select_alpha(variable_profile(),
                                     default_time_grid(scenario.duration))
            self.alpha = alpha
            self.profile = variable_profile(alpha)
        elif scenario.impedance == "invariable":
            self.profile = invariable_profile()
        # estimator output held over the current step
        self._tau_est = np.zeros(4)

    def begin_step(self, t, x, r):
        """Hold the estimated load over the coming step."""
        self._tau_est = r

    def load_estimate(self, t, omega):
        if self.sc.feed_ground_truth_load:
            return self.external_torque(t, omega)
        return self._tau_est

    def reference_acceleration(self, t, ref, ref_dot, tau_est):
        """Admittance model ``M_c a + C_c ref_dot + K_c (ref - omega_d) = tau_est``
        with the impedance mapped at the current reference state."""
        if self.profile is None:
            return np.zeros(4)
        Mt, Ct, Kt = task_matrices(self.profile, t)
        a = _k.admittance_acceleration(ref, ref_dot, self.omega_d, tau_est,
                                       *self.nominal.lengths, Mt, Ct, Kt,
                                       self.sc.ridge, JDOT_STEP)
        if not math.isfinite(a.sum()):
            raise DomainError(f"configuration impedance lost positive definiteness at t={t:.6g}")
        return a

    def external_torque(self, t, omega):
        if not any(p.start <= t < p.end for p in self.schedule):
            return np.zeros(4)
        F = force_at(self.schedule, t)
        return jacobian_config_to_task(omega, self.nominal).T @ F

    def evaluate(self, t, x):
        """Stage derivative plus the diagnostics needed for a record."""
        omega, omega_dot = x[_S["omega"]], x[_S["omega_dot"]]
        d_hat = x[_S["d_hat"]]
        ref, ref_dot = x[_S["ref"]], x[_S["ref_dot"]]
        nom = dynamics_terms(omega, omega_dot, self.nominal)
        true = nom if self._exact_model else dynamics_terms(omega, omega_dot, self.plant)
        tau_est = self.load_estimate(t, omega)
        ref_ddot = self.reference_acceleration(t, ref, ref_dot, tau_est)

        err = ctl.compute_errors(omega, omega_dot, ref, ref_dot, self.absm)
        d_hat_dot = np.zeros(4)
        name = self.sc.controller
        if name == "ABSM":
            tau_c = ctl.absm_control(err, ref_ddot, nom, d_hat, tau_est, self.absm)
            d_hat_dot = ctl.absm_adaptation(err.s, nom.M, self.gain)
        elif name == "SM":
            tau_c = ctl.sm_control(err, ref_ddot, nom, tau_est, self.absm)
        elif name == "PD":
            tau_c = ctl.pd_control(err, ref_ddot, nom, self.pd)
        else:
            tau_c = np.zeros(4)

        tau_e = self.external_torque(t, omega)
        omega_ddot = solve_spd(true.M, tau_c + tau_e - true.coriolis_force - true.N)
        N_est = nom.N if self.estimator_model is self.nominal else true.N
        dx = np.concatenate([omega_dot, omega_ddot, d_hat_dot, ref_dot, ref_ddot,
                             tau_c - N_est])
        aux = dict(err=err, tau_c=tau_c, tau_e=tau_e, nom=nom, true=true,
                   omega_ddot=omega_ddot, ref_ddot=ref_ddot, d_hat_dot=d_hat_dot)
        return dx, aux

    def derivative(self, t, x):
        return self.evaluate(t, x)[0]

    def lumped_uncertainty(self, aux, omega_dot):
        """``D`` such that the plant reads ``M C N``-nominal = tau_c + tau_e - D."""
        nom, true = aux["nom"], aux["true"]
        return ((true.M - nom.M) @ aux["omega_ddot"]
                + (true.C - nom.C) @ omega_dot + (true.N - nom.N))


def initial_state(scenario):
    x = np.zeros(24)
    x[_S["omega"]] = scenario.initial_configuration()
    x[_S["omega_dot"]] = scenario.omega_dot0
    x[_S["ref"]] = scenario.omega_d
    return x


def run_scenario(scenario, params=None, absm=None, pd=None):
    """Integrate the closed loop and return traces plus metrics.

    Raises :class:`SimulationError` with the failing time if the state
    becomes non-finite.
    """
    loop = ClosedLoop(scenario, params, absm, pd)
    dt, n = scenario.dt, scenario.n_steps
    every = scenario.record_every
    x = initial_state(scenario)
    est = estimator_init(x[_S["omega"]], x[_S["omega_dot"]], loop.estimator_model,
                         scenario.ki)
    omega_d = np.array(scenario.omega_d)
    chi_d = tip_pose(omega_d, loop.nominal)
    r_disk = loop.nominal.r_disk
    lengths = np.array(loop.nominal.lengths)

    n_rec = n // every + 1
    rec = {key: np.empty((n_rec, w)) for key, w in (
        ("omega", 4), ("omega_dot", 4), ("omega_ref", 4), ("e_p", 4), ("s", 4),
        ("tau_c", 4), ("tau_e", 4), ("r", 4), ("d_hat", 4), ("v3", 1), ("v3_dot", 1),
        ("v3_dot_actual", 1),
        ("cables", 6), ("task_error", 6))}
    times = np.empty(n_rec)

    def record(j, t, x, aux, r):
        err = aux["err"]
        omega = x[_S["omega"]]
        D = loop.lumped_uncertainty(aux, x[_S["omega_dot"]])
        D_tilde = D - x[_S["d_hat"]]
        v3, v3_dot = ctl.lyapunov_v3_and_derivative(err, D_tilde, loop.absm, loop.gain)
        rec["v3_dot_actual"][j] = ctl.lyapunov_v3_rate(
            err, aux["omega_ddot"] - aux["ref_ddot"], D_tilde, aux["d_hat_dot"],
            loop.absm, loop.gain)
        times[j] = t
        rec["omega"][j] = omega
        rec["omega_dot"][j] = x[_S["omega_dot"]]
        rec["omega_ref"][j] = x[_S["ref"]]
        rec["e_p"][j] = err.e_p
        rec["s"][j] = err.s
        rec["tau_c"][j] = aux["tau_c"]
        rec["tau_e"][j] = aux["tau_e"]
        rec["r"][j] = r
        rec["d_hat"][j] = x[_S["d_hat"]]
        rec["v3"][j] = v3
        rec["v3_dot"][j] = v3_dot
        q = configuration_to_actuators(omega[[0, 2]], omega[[1, 3]], lengths, r_disk)
        rec["cables"][j] = q.ravel()
        chi = tip_pose(omega, loop.nominal)
        rec["task_error"][j] = chi - chi_d

    t = 0.0
    try:
        for k in range(n):
            t = k * dt
            loop.begin_step(t, x, est.r)
            k1, aux = loop.evaluate(t, x)
            if k % every == 0:
                record(k // every, t, x, aux, est.r)
            x[_S["drive"]] = 0.0
            x = rk4_step(x, loop.derivative, t, dt, k1=k1)
            est = estimator_update(est, x[_S["omega"]], x[_S["omega_dot"]], None, dt,
                                   loop.estimator_model, drive_integral=x[_S["drive"]])
        if n % every == 0:
            t = n * dt
            loop.begin_step(t, x, est.r)
            _, aux = loop.evaluate(t, x)
            record(n // every, t, x, aux, est.r)
        else:
            n_rec -= 1
    except DomainError as exc:
        # the state left the model's domain (a diverging run)
        raise SimulationError(f"state left the model domain at t={t:.6g}: {exc}",
                              time=t) from exc

    res = SimulationResult(
        scenario=scenario, alpha=loop.alpha, t=times[:n_rec],
        **{key: (v[:n_rec, 0] if v.shape[1] == 1 else v[:n_rec]) for key, v in rec.items()})
    res.metrics = summarize(res.t, res.e_p, scenario.controller, scenario.name)
    return res


def final_state(result):
    return np.concatenate([result.omega[-1], result.omega_dot[-1]])
