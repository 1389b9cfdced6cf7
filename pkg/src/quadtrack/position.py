"""Outer-loop position controller: saturated thrust vector, the e_f integrator
memory, and the velocity-free variant."""

from dataclasses import dataclass, field

import numpy as np

from .plant import ConfigurationError, EZ

# cosh^2(20) ~ 5.9e16 is representable, one more doubling is not
EF_CLAMP = 20.0
# e_f escapes to infinity in finite time when the saturation engages; keep
# y = tanh(e_f) strictly inside (-1, 1) so arctanh stays representable
Y_MAX = 1.0 - 1e-9


@dataclass
class PositionGains:
    """Scalar gains k > k_x > 0 and diagonal K_f; mu_d bounds |xdd_d,z|.

    Only structural validity is enforced here; the stability inequalities
    (k_x < g - mu_d etc.) are evaluated with margins by the analysis module
    so that deliberately broken gain sets can still be reported on.
    """

    k: float = 4.0
    k_x: float = 0.1
    K_f: np.ndarray = field(default_factory=lambda: np.eye(3))
    mu_d: float = 0.0

    def __post_init__(self):
        self.K_f = np.asarray(self.K_f, dtype=float)
        if self.k <= 0 or self.k_x <= 0:
            raise ConfigurationError("k and k_x must be positive")
        if self.K_f.shape != (3, 3) or np.any(np.diag(self.K_f) <= 0) \
                or np.max(np.abs(self.K_f - np.diag(np.diag(self.K_f)))) > 0:
            raise ConfigurationError("K_f must be diagonal positive")
        if self.mu_d < 0:
            raise ConfigurationError("mu_d must be nonnegative")

    @property
    def kf3(self):
        return float(self.K_f[2, 2])

    @property
    def kf_min(self):
        return float(np.min(np.diag(self.K_f)))

    @property
    def kf_max(self):
        return float(np.max(np.diag(self.K_f)))


@dataclass
class PositionCtrlMemory:
    """Integrator-backed states of the position loop.

    e_f starts at zero; in velocity-free mode p replaces it and must start
    at k * x_tilde(0) so that y(0) = 0.
    """

    e_f: np.ndarray = field(default_factory=lambda: np.zeros(3))
    p: np.ndarray | None = None

    @classmethod
    def velocity_free(cls, x_tilde0, gains):
        return cls(e_f=np.zeros(3), p=gains.k * np.asarray(x_tilde0, float))


@dataclass
class TrajectoryPoint:
    """Desired position/yaw sample with two derivatives."""

    x_d: np.ndarray
    xdot_d: np.ndarray
    xddot_d: np.ndarray
    psi_d: float = 0.0
    psidot_d: float = 0.0
    psiddot_d: float = 0.0


def aux_y(x_tilde, mem, gains, velocity_free=False):
    """The saturated auxiliary variable y: Tanh(e_f), or p - k x_tilde in
    velocity-free mode."""
    if velocity_free:
        return mem.p - gains.k * x_tilde
    return np.tanh(mem.e_f)


def thrust_vector(x_tilde, mem, traj, gains, m, g, velocity_free=False):
    """Saturated thrust command T = m g e_z + m xdd_d + m ((k + k_x) I + K_f) y."""
    y = aux_y(x_tilde, mem, gains, velocity_free)
    return m * g * EZ + m * traj.xddot_d + \
        m * ((gains.k + gains.k_x) * y + gains.K_f @ y)


def thrust_bounds(gains, m, g):
    """(f_min, f_max) guaranteed for ||T|| by the gain feasibility condition."""
    f_min = m * (g - gains.mu_d - (gains.k + gains.k_x + gains.kf3))
    f_max = m * (g + gains.mu_d + gains.k + gains.k_x + gains.kf_max)
    return f_min, f_max


def eta(x_tilde, v_tilde, y, k_x):
    """Composite error eta = v_tilde + k_x x_tilde + y."""
    return v_tilde + k_x * x_tilde + y


def ef_rate(e_f, x_tilde, eta_val, gains, m, eta_mass_factor=False):
    """Integrator dynamics of e_f.

    e_f' = Cosh^2(e_f) (-K_f y + k_x^2 (1 - 1/m) x_tilde - k eta) with
    y = Tanh(e_f); components of e_f are clamped to +-20 before the Cosh^2
    evaluation. With ``eta_mass_factor`` the eta term is -m k eta instead,
    reproducing the variant in which y' carries the extra mass factor.
    """
    e = np.clip(e_f, -EF_CLAMP, EF_CLAMP)
    y = np.tanh(e_f)
    k_eta = gains.k * m if eta_mass_factor else gains.k
    return np.cosh(e) ** 2 * (
        -gains.K_f @ y + gains.k_x ** 2 * (1.0 - 1.0 / m) * x_tilde
        - k_eta * eta_val)


def ef_step(mem, x_tilde, eta_val, gains, m, dt, eta_mass_factor=False):
    """RK4 advance of e_f over one control step with x_tilde, eta held.

    Integrates the equivalent well-conditioned image y' = -K_f y
    + k_x^2 (1 - 1/m) x_tilde - k eta of the raw e_f flow (which is stiff
    by a factor cosh^2(e_f) and escapes in finite time once the saturation
    engages), then maps back through arctanh with y held inside (-1, 1).
    """
    k_eta = gains.k * m if eta_mass_factor else gains.k
    drive = gains.k_x ** 2 * (1.0 - 1.0 / m) * x_tilde - k_eta * eta_val

    def f(y):
        return -gains.K_f @ y + drive
    y = np.tanh(mem.e_f)
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    mem.e_f = np.arctanh(np.clip(y, -Y_MAX, Y_MAX))


def velocity_free_y(x_tilde, mem, gains, m):
    """Velocity-free realization: y = p - k x_tilde and the p dynamics.

    Returns (y, pdot); requires mem.p initialized to k x_tilde(0).
    """
    if mem.p is None:
        raise ConfigurationError("velocity-free memory p not initialized")
    y = mem.p - gains.k * x_tilde
    pdot = -gains.k * (gains.k_x * x_tilde + y) - gains.K_f @ y \
        + gains.k_x ** 2 * (1.0 - 1.0 / m) * x_tilde
    return y, pdot


def p_step(mem, x_tilde, gains, m, dt):
    """RK4 advance of p with x_tilde held over the step."""
    def f(p):
        y = p - gains.k * x_tilde
        return -gains.k * (gains.k_x * x_tilde + y) - gains.K_f @ y \
            + gains.k_x ** 2 * (1.0 - 1.0 / m) * x_tilde
    p = mem.p
    k1 = f(p)
    k2 = f(p + 0.5 * dt * k1)
    k3 = f(p + 0.5 * dt * k2)
    k4 = f(p + dt * k3)
    mem.p = p + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
