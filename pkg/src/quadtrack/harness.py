"""Scenario orchestration: reference trajectory, the closed-loop stepping
order, telemetry, and the condition report emitted with every run."""

from dataclasses import dataclass

import numpy as np

from . import observer as obs_mod
from . import position as pos_mod
from .analysis import (c_upper_limit, condition_matrices, lemma1_constants)
from .attitude import alignment, omega_r, omega_r_hat_rate, torque
from .attitude_reference import (ReferenceFilterState, desired_omega,
                                 desired_rotation, filter_step)
from .config import ScenarioConfig, TrajectorySpec  # noqa: F401 (re-export)
from .geometry import project_to_so3
from .plant import EZ, ControlInput, RigidBodyState, step
from .position import TrajectoryPoint
from .sensing import _channel_rngs, apparent_acceleration_reference

PROJECT_EVERY = 100

TELEMETRY_FIELDS = [
    "t", "att_err", "z_norm", "omega_tilde_norm", "b_tilde_norm",
    "x_tilde_norm", "eta_norm", "y_norm", "f", "tau_x", "tau_y", "tau_z",
    "V1", "V2", "V3", "gap_residual", "f_margin_low", "f_margin_high",
]


class DivergenceError(RuntimeError):
    """A state went non-finite; carries the telemetry gathered so far."""

    def __init__(self, msg, telemetry):
        super().__init__(msg)
        self.telemetry = telemetry


@dataclass
class Telemetry:
    """Column-named per-step log; ``data`` has one row per control step."""

    fields: list
    data: np.ndarray

    def column(self, name):
        return self.data[:, self.fields.index(name)]

    @property
    def t(self):
        return self.data[:, 0]


def trajectory_point(spec, t):
    """Sample the desired trajectory with exact derivatives.

    The figure-eight track is x_d = [ax cos(wt), ay sin(wt) cos(wt), h]
    with w = 2 pi / period; yaw is held at spec.psi_d.
    """
    if spec.kind == "hover":
        return TrajectoryPoint(
            np.array([0.0, 0.0, spec.altitude]), np.zeros(3), np.zeros(3),
            psi_d=spec.psi_d)
    w = 2.0 * np.pi / spec.period
    ax, ay = spec.amplitude_x, spec.amplitude_y
    # ay sin(wt) cos(wt) = (ay/2) sin(2wt)
    x_d = np.array([ax * np.cos(w * t),
                    0.5 * ay * np.sin(2.0 * w * t),
                    spec.altitude])
    xdot_d = np.array([-ax * w * np.sin(w * t),
                       ay * w * np.cos(2.0 * w * t), 0.0])
    xddot_d = np.array([-ax * w ** 2 * np.cos(w * t),
                        -2.0 * ay * w ** 2 * np.sin(2.0 * w * t), 0.0])
    return TrajectoryPoint(x_d, xdot_d, xddot_d, psi_d=spec.psi_d)


def lemniscate(t, spec=None):
    return trajectory_point(spec or TrajectorySpec(), t)


def _rotation_gap(R, R_d):
    """Spectral norm ||R - R_d|| = 2 sin(theta/2) of the relative rotation."""
    cos_th = 0.5 * (np.trace(R_d.T @ R) - 1.0)
    cos_th = min(1.0, max(-1.0, cos_th))
    return 2.0 * np.sin(0.5 * np.arccos(cos_th))


def _varpi_of(vectors, weights):
    W_bar = np.zeros((3, 3))
    for r, k in zip(vectors, weights):
        W_bar += k * np.outer(r, r)
    return float(np.trace(np.linalg.inv(W_bar)))


def _pregenerate_noise(noise, n_rows, n_vecs):
    rng_x, rng_v, rng_w, rng_vec = _channel_rngs(noise.seed)
    z3 = np.zeros((n_rows, 3))
    nx = noise.sigma_x * rng_x.standard_normal((n_rows, 3)) \
        if noise.sigma_x else z3
    nv = noise.sigma_v * rng_v.standard_normal((n_rows, 3)) \
        if noise.sigma_v else z3
    nw = noise.sigma_omega * rng_w.standard_normal((n_rows, 3)) \
        if noise.sigma_omega else z3
    nvec = noise.sigma_vec * rng_vec.standard_normal((n_rows, n_vecs, 3)) \
        if noise.sigma_vec else np.zeros((n_rows, n_vecs, 3))
    return nx, nv, nw, nvec


def run_scenario(cfg):
    """Run one closed-loop scenario; returns (Telemetry, ConditionReport).

    Per control step: sense, observer correction, position law, desired
    attitude and rate filter, alignment and torque, memory updates, plant
    step, telemetry append. Deterministic for a given config and seed.
    """
    if cfg.engine == "numba":
        try:
            return _run_numba(cfg)
        except ImportError:
            pass
    return _run_python(cfg)


def _common_setup(cfg):
    lc = lemma1_constants(cfg.refs, cfg.att_gains.alpha1)
    c_max = c_upper_limit(cfg.pos_gains, cfg.att_gains, cfg.refs,
                          cfg.params, lc)
    c = 0.5 * c_max if c_max > 0 else np.nan
    n = cfg.n_steps
    noise = _pregenerate_noise(cfg.noise, n + 1, cfg.refs.n)
    return lc, c, n, noise


def _finish_report(cfg, c, f_obs_max, norm_g_max, eps_v_max):
    mats, gamma3, rep = condition_matrices(
        cfg.pos_gains, cfg.att_gains, cfg.obs_gains, cfg.refs, cfg.params,
        mu_d=cfg.pos_gains.mu_d, f_max=f_obs_max or None,
        norm_g=norm_g_max or None, eps_v=eps_v_max,
        c=c if np.isfinite(c) else None)
    return rep


def _run_python(cfg):
    p = cfg.params
    pg, ag, og = cfg.pos_gains, cfg.att_gains, cfg.obs_gains
    weights = cfg.refs.weights
    ctrl_M = cfg.controller_inertia
    lc, c, n, (nx, nv, nw, nvec) = _common_setup(cfg)
    varpi0 = lc.varpi
    f_lo, f_hi = pos_mod.thrust_bounds(pg, p.m, p.g)

    state = RigidBodyState.at_rest()
    pos_mem = pos_mod.PositionCtrlMemory()
    obs_mem = None
    fs = ReferenceFilterState()
    R_d_prev = None
    prev_vdot = np.zeros(3)
    data = np.empty((n + 1, len(TELEMETRY_FIELDS)))
    f_obs_max = 0.0
    norm_g_max = 0.0
    eps_v_max = 0.0

    for i in range(n + 1):
        t = i * cfg.dt
        if cfg.apparent_accel:
            r_eff = cfg.refs.vectors.copy()
            r_eff[0] = apparent_acceleration_reference(prev_vdot, p.g)
        else:
            r_eff = cfg.refs.vectors
        v_true = r_eff @ state.R
        vec_m = v_true + nvec[i]
        if cfg.noise.sigma_vec:
            vec_m /= np.linalg.norm(vec_m, axis=1)[:, None]
        x_m = state.x + nx[i]
        v_m = state.v + nv[i]
        omega_g = state.omega + cfg.bias.b + nw[i]

        if obs_mem is None:
            obs_mem = obs_mod.ObserverMemory.initial(vec_m)
        # the filters converge to the current sample well within one step
        # (gamma_f dt = 10); advancing them before the estimate keeps the
        # per-sample vector noise out of the bias correction
        obs_lag0 = obs_mod.filter_advance(obs_mem, vec_m, og, cfg.dt)
        b_hat = obs_mod.bias_estimate(obs_mem, vec_m, og, weights)
        omega_hat = omega_g - b_hat

        traj = trajectory_point(cfg.trajectory, t)
        x_t_m = x_m - traj.x_d
        if cfg.velocity_free:
            if pos_mem.p is None:
                pos_mem.p = pg.k * x_t_m
            y, _ = pos_mod.velocity_free_y(x_t_m, pos_mem, pg, p.m)
            v_t_m = None
        else:
            v_t_m = v_m - traj.xdot_d
            y = np.tanh(pos_mem.e_f)
        T = p.m * p.g * EZ + p.m * traj.xddot_d \
            + p.m * ((pg.k + pg.k_x) * y + pg.K_f @ y)
        f = float(np.linalg.norm(T))

        R_d = desired_rotation(T, traj.psi_d)
        omega_d_raw = desired_omega(R_d_prev, R_d, cfg.dt)
        if R_d_prev is None:
            fs.theta1 = omega_d_raw.copy()
        # the controllers consume the filtered rate and its derivative; the
        # raw difference quotient amplifies measurement noise by 1/dt
        omega_d = fs.theta1
        omega_dot_d = fs.theta2

        v_des = r_eff @ R_d
        ae = alignment(vec_m, v_des, weights)
        om_r = omega_r(ae.z, omega_d, ag.lambda_c)
        wr_rate = omega_r_hat_rate(omega_hat, omega_d, omega_dot_d, ae,
                                   ag.lambda_c)
        tau = torque(omega_hat, om_r, wr_rate, ae, ctrl_M, ag)

        # truth-referenced telemetry
        x_t = state.x - traj.x_d
        v_t = state.v - traj.xdot_d
        eta_t = v_t + pg.k_x * x_t + y
        ae_t = alignment(v_true, v_des, weights)
        om_t = state.omega - om_r
        b_t = b_hat - cfg.bias.b
        varpi = varpi0 if not cfg.apparent_accel \
            else _varpi_of(r_eff, weights)
        gap = _rotation_gap(state.R, R_d)
        v1 = 0.5 * (p.m * eta_t @ eta_t + pg.k_x ** 2 * (x_t @ x_t) + y @ y)
        v2 = 0.5 * (om_t @ (p.inertia @ om_t)) + 0.5 * (b_t @ b_t) \
            + 0.5 * ag.alpha2 * (ae_t.z @ ae_t.z) + ag.alpha1 * ae_t.eps
        data[i] = (t, 0.5 * (3.0 - np.trace(state.R @ R_d.T)),
                   np.linalg.norm(ae_t.z), np.linalg.norm(om_t),
                   np.linalg.norm(b_t), np.linalg.norm(x_t),
                   np.linalg.norm(eta_t), np.linalg.norm(y), f,
                   tau[0], tau[1], tau[2], v1, v2, c * v1 + v2,
                   np.sqrt(max(2.0 * ae_t.eps * varpi, 0.0)) - gap,
                   f - f_lo, f_hi - f)
        if not np.all(np.isfinite(data[i])) or not np.all(
                np.isfinite(state.R)):
            raise DivergenceError(
                "non-finite state at t=%.6f" % t,
                Telemetry(TELEMETRY_FIELDS, data[:i].copy()))

        f_obs_max = max(f_obs_max, f)
        G = ag.K_c - _hat(om_r) @ ctrl_M + ag.lambda_c * ctrl_M @ ae.J
        norm_g_max = max(norm_g_max, float(np.linalg.norm(G)))
        eps_v_max = max(eps_v_max, float(
            np.max(np.linalg.norm(obs_lag0, axis=1))))

        if i == n:
            break

        # advance controller memories with the signals held over the step
        if cfg.velocity_free:
            pos_mod.p_step(pos_mem, x_t_m, pg, p.m, cfg.dt)
        else:
            eta_m = pos_mod.eta(x_t_m, v_t_m, y, pg.k_x)
            pos_mod.ef_step(pos_mem, x_t_m, eta_m, pg, p.m, cfg.dt,
                            cfg.eta_mass_factor)
        obs_mod.bbar_advance(obs_mem, omega_hat, vec_m, obs_lag0, og,
                             weights, cfg.dt)
        filter_step(fs, omega_d_raw, cfg.dt)
        R_d_prev = R_d

        prev_vdot = (-p.m * p.g * EZ + f * state.R[:, 2]
                     + cfg.disturbance.force(t)) / p.m
        state = step(state, ControlInput(f, tau), cfg.disturbance, t,
                     cfg.dt, p)
        if (i + 1) % PROJECT_EVERY == 0:
            state.R = project_to_so3(state.R)

    rep = _finish_report(cfg, c, f_obs_max, norm_g_max, eps_v_max)
    return Telemetry(TELEMETRY_FIELDS, data), rep


def _hat(u):
    return np.array([[0.0, -u[2], u[1]],
                     [u[2], 0.0, -u[0]],
                     [-u[1], u[0], 0.0]])


def _run_numba(cfg):
    from ._kernel import run_kernel

    p = cfg.params
    pg, ag, og = cfg.pos_gains, cfg.att_gains, cfg.obs_gains
    lc, c, n, (nx, nv, nw, nvec) = _common_setup(cfg)
    f_lo, f_hi = pos_mod.thrust_bounds(pg, p.m, p.g)
    data, status, rows, f_obs_max, norm_g_max, eps_v_max = run_kernel(
        n, cfg.dt, p.m, p.g,
        np.ascontiguousarray(p.inertia), np.ascontiguousarray(p.inertia_inv),
        np.ascontiguousarray(cfg.controller_inertia),
        pg.k, pg.k_x, np.ascontiguousarray(pg.K_f),
        np.ascontiguousarray(ag.K_c), ag.lambda_c, ag.alpha1, ag.alpha2,
        np.ascontiguousarray(og.Lambda), og.gamma_f,
        np.ascontiguousarray(cfg.refs.vectors),
        np.ascontiguousarray(cfg.refs.weights),
        np.ascontiguousarray(cfg.bias.b),
        nx, nv, nw, nvec, 1 if cfg.noise.sigma_vec else 0,
        cfg.trajectory.kind == "lemniscate",
        cfg.trajectory.amplitude_x, cfg.trajectory.amplitude_y,
        cfg.trajectory.altitude, cfg.trajectory.period, cfg.trajectory.psi_d,
        1 if cfg.velocity_free else 0,
        1 if cfg.eta_mass_factor else 0,
        1 if cfg.apparent_accel else 0,
        np.ascontiguousarray(cfg.disturbance.force_amp),
        np.ascontiguousarray(cfg.disturbance.force_freq),
        np.ascontiguousarray(cfg.disturbance.force_phase),
        np.ascontiguousarray(cfg.disturbance.torque_amp),
        np.ascontiguousarray(cfg.disturbance.torque_freq),
        np.ascontiguousarray(cfg.disturbance.torque_phase),
        lc.varpi, c if np.isfinite(c) else 0.0, f_lo, f_hi)
    if status != 0:
        raise DivergenceError(
            "non-finite state at t=%.6f" % (rows * cfg.dt),
            Telemetry(TELEMETRY_FIELDS, data[:rows].copy()))
    rep = _finish_report(cfg, c, f_obs_max, norm_g_max, eps_v_max)
    return Telemetry(TELEMETRY_FIELDS, data), rep


def write_telemetry(tel, path):
    """CSV with a fixed header, one row per control step, 9 significant
    digits per value."""
    try:
        with open(path, "w") as fh:
            fh.write(",".join(tel.fields) + "\n")
            for row in tel.data:
                fh.write(",".join("%.9g" % v for v in row) + "\n")
    except OSError as exc:
        raise OSError("writing telemetry to %s: %s" % (path, exc)) from exc


def read_telemetry(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return Telemetry(header, data)
