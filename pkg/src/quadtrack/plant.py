"""Quadrotor rigid-body truth model with bounded disturbances and a fixed-step
integrator (RK4 on x, v, omega; multiplicative order-4 update on the rotation)."""

from dataclasses import dataclass, field

import numpy as np

from .geometry import so3_exp

EZ = np.array([0.0, 0.0, 1.0])

MAX_DT = 0.01


class ConfigurationError(ValueError):
    pass


@dataclass
class PhysicalParams:
    """Mass (kg), inertia matrix (kg m^2) and gravity (m/s^2)."""

    m: float = 0.467
    inertia: np.ndarray = field(
        default_factory=lambda: np.diag([8.28e-3, 8.28e-3, 15.7e-3]))
    g: float = 9.81

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        if self.m <= 0:
            raise ConfigurationError("mass must be positive")
        if self.g <= 0:
            raise ConfigurationError("gravity must be positive")
        if self.inertia.shape != (3, 3) or np.max(
                np.abs(self.inertia - self.inertia.T)) > 1e-12:
            raise ConfigurationError("inertia must be symmetric 3x3")
        if np.any(np.linalg.eigvalsh(self.inertia) <= 0):
            raise ConfigurationError("inertia must be positive definite")
        self.inertia_inv = np.linalg.inv(self.inertia)


@dataclass
class RigidBodyState:
    """Truth state: position, velocity, rotation matrix, body angular rate."""

    x: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    @classmethod
    def at_rest(cls):
        return cls(np.zeros(3), np.zeros(3), np.eye(3), np.zeros(3))

    def copy(self):
        return RigidBodyState(self.x.copy(), self.v.copy(),
                              self.R.copy(), self.omega.copy())


@dataclass
class DisturbanceSpec:
    """Per-axis sinusoidal force/torque disturbances.

    Each channel is amplitude * sin(2*pi*frequency*t + phase) per axis; a
    constant offset is the frequency-0, phase-pi/2 special case. Norms are
    bounded by the amplitude vectors for all t.
    """

    force_amp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    force_freq: np.ndarray = field(default_factory=lambda: np.zeros(3))
    force_phase: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque_amp: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque_freq: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque_phase: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("force_amp", "force_freq", "force_phase",
                     "torque_amp", "torque_freq", "torque_phase"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def force(self, t):
        return self.force_amp * np.sin(
            2.0 * np.pi * self.force_freq * t + self.force_phase)

    def torque(self, t):
        return self.torque_amp * np.sin(
            2.0 * np.pi * self.torque_freq * t + self.torque_phase)

    @property
    def is_zero(self):
        return not (np.any(self.force_amp) or np.any(self.torque_amp))


@dataclass
class ControlInput:
    """Thrust magnitude (N, along body z) and body torque (N m)."""

    f: float
    tau: np.ndarray

    def __post_init__(self):
        if self.f < 0:
            raise ConfigurationError("thrust must be nonnegative")
        self.tau = np.asarray(self.tau, dtype=float)


def state_derivative(s, u, d, t, p):
    """Time derivative of the rigid-body motion:

        x' = v
        v' = (-m g e_z + f R e_z + f_d) / m
        R' = R hat(omega)   (returned as omega itself)
        omega' = M^-1 ((M omega) x omega + tau + tau_d)
    """
    xdot = s.v
    vdot = (-p.m * p.g * EZ + u.f * s.R[:, 2] + d.force(t)) / p.m
    Mw = p.inertia @ s.omega
    omegadot = p.inertia_inv @ (np.cross(Mw, s.omega) + u.tau + d.torque(t))
    return xdot, vdot, s.omega, omegadot


def _omega_dot(omega, tau_t, p):
    Mw = p.inertia @ omega
    return p.inertia_inv @ (np.cross(Mw, omega) + tau_t)


def step(s, u, d, t, dt, p):
    """Advance the state by one fixed step of size dt (0 < dt <= 0.01 s).

    Angular rate: classical RK4. Rotation: commutator-free order-4 update
    R <- R exp(u1) exp(u2) built from the RK4 stage rates, so R stays on
    SO(3) to machine precision. Velocity/position: Simpson quadrature of the
    specific force along the rotation path.
    """
    if not (0.0 < dt <= MAX_DT):
        raise ConfigurationError(f"dt must be in (0, {MAX_DT}] s, got {dt}")

    # angular rate stages (independent of R, x, v)
    w = s.omega
    k1 = _omega_dot(w, u.tau + d.torque(t), p)
    k2 = _omega_dot(w + 0.5 * dt * k1, u.tau + d.torque(t + 0.5 * dt), p)
    k3 = _omega_dot(w + 0.5 * dt * k2, u.tau + d.torque(t + 0.5 * dt), p)
    k4 = _omega_dot(w + dt * k3, u.tau + d.torque(t + dt), p)
    w1, w2, w3, w4 = w, w + 0.5 * dt * k1, w + 0.5 * dt * k2, w + dt * k3
    omega_new = w + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    # commutator-free order-4 exponential update for R' = R hat(omega)
    u1 = dt * (w1 / 4.0 + w2 / 6.0 + w3 / 6.0 - w4 / 12.0)
    u2 = dt * (-w1 / 12.0 + w2 / 6.0 + w3 / 6.0 + w4 / 4.0)
    R_new = s.R @ so3_exp(u1) @ so3_exp(u2)
    R_mid = s.R @ so3_exp(0.25 * dt * (w1 + 0.5 * (w2 + w3)))

    def accel(R, tt):
        return (-p.m * p.g * EZ + u.f * R[:, 2] + d.force(tt)) / p.m

    a0 = accel(s.R, t)
    am = accel(R_mid, t + 0.5 * dt)
    a1 = accel(R_new, t + dt)
    v_mid = s.v + 0.25 * dt * (a0 + am)
    v_new = s.v + dt / 6.0 * (a0 + 4.0 * am + a1)
    x_new = s.x + dt / 6.0 * (s.v + 4.0 * v_mid + v_new)

    return RigidBodyState(x_new, v_new, R_new, omega_new)
