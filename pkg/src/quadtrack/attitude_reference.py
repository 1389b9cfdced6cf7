"""Desired attitude from the thrust vector and yaw, the discrete desired
angular rate, and the second-order filter approximating its derivative."""

from dataclasses import dataclass, field

import numpy as np


class ThrustSingularityError(ValueError):
    """Thrust vector vanished; the desired attitude is undefined."""


class YawSingularityError(ValueError):
    """Thrust direction is collinear with the desired yaw direction."""


def desired_rotation(T, psi_d):
    """Desired rotation R_d = [c1 c2 c3]:

        c3 = T / ||T||,  c2 = c3 x c_d / ||c3 x c_d||,  c1 = c2 x c3,

    with c_d = [cos psi_d, sin psi_d, 0] the desired yaw direction.
    """
    T = np.asarray(T, dtype=float)
    nT = np.linalg.norm(T)
    if nT <= 0.0:
        raise ThrustSingularityError("zero thrust vector")
    c3 = T / nT
    c_d = np.array([np.cos(psi_d), np.sin(psi_d), 0.0])
    c2 = np.cross(c3, c_d)
    n2 = np.linalg.norm(c2)
    if n2 <= 1e-9:
        raise YawSingularityError(
            "thrust direction collinear with yaw direction")
    c2 /= n2
    c1 = np.cross(c2, c3)
    return np.column_stack([c1, c2, c3])


def desired_omega(R_d_prev, R_d_now, dt):
    """One-step discrete desired body rate omega_d = (R_d^T R_d')^vee.

    Uses the skew part of (R_prev^T R_now - I)/dt; pass R_d_prev=None for the
    first sample (returns zero).
    """
    if R_d_prev is None:
        return np.zeros(3)
    if dt <= 0:
        raise ValueError("dt must be positive")
    D = (R_d_prev.T @ R_d_now - np.eye(3)) / dt
    S = 0.5 * (D - D.T)
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


@dataclass
class ReferenceFilterState:
    """Critically damped second-order filter

        theta1' = theta2
        theta2' = -2 A theta2 - A^2 (theta1 - omega_d)

    whose theta2 output approximates omega_d'. Initialize theta1 to the first
    omega_d sample for a transient-free start.
    """

    theta1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    theta2: np.ndarray = field(default_factory=lambda: np.zeros(3))
    A: np.ndarray = field(default_factory=lambda: 20.0 * np.eye(3))

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        if self.A.shape != (3, 3) or np.any(np.diag(self.A) <= 0) \
                or np.max(np.abs(self.A - np.diag(np.diag(self.A)))) > 0:
            raise ValueError("A must be diagonal positive definite")


def filter_rates(fs, omega_d):
    d1 = fs.theta2
    d2 = -2.0 * fs.A @ fs.theta2 - fs.A @ (fs.A @ (fs.theta1 - omega_d))
    return d1, d2


def filter_step(fs, omega_d, dt):
    """RK4 advance of the filter with omega_d held over the step (in place)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    A = fs.A
    A2 = A @ A

    def f(t1, t2):
        return t2, -2.0 * A @ t2 - A2 @ (t1 - omega_d)

    t1, t2 = fs.theta1, fs.theta2
    a1, b1 = f(t1, t2)
    a2, b2 = f(t1 + 0.5 * dt * a1, t2 + 0.5 * dt * b1)
    a3, b3 = f(t1 + 0.5 * dt * a2, t2 + 0.5 * dt * b2)
    a4, b4 = f(t1 + dt * a3, t2 + dt * b3)
    fs.theta1 = t1 + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    fs.theta2 = t2 + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    return fs
