"""Gyro-bias observer: first-order vector filters, the b_bar integrator and
the algebraic bias estimate correcting the measured rate."""

from dataclasses import dataclass, field

import numpy as np

from .plant import ConfigurationError


@dataclass
class ObserverGains:
    """Shared symmetric positive observer gain Lambda (same for every sensor)
    and the vector-filter gain gamma_f."""

    Lambda: np.ndarray = field(default_factory=lambda: 10.0 * np.eye(3))
    gamma_f: float = 1.0e4

    def __post_init__(self):
        self.Lambda = np.asarray(self.Lambda, dtype=float)
        if self.Lambda.shape != (3, 3) or \
                np.max(np.abs(self.Lambda - self.Lambda.T)) > 1e-12 or \
                np.any(np.linalg.eigvalsh(self.Lambda) <= 0):
            raise ConfigurationError(
                "Lambda must be symmetric positive definite")
        if self.gamma_f <= 0:
            raise ConfigurationError("gamma_f must be positive")


@dataclass
class ObserverMemory:
    """b_bar integrator and the filtered vector measurements v_f,i, which must
    start at the first measured vectors."""

    b_bar: np.ndarray
    v_f: np.ndarray  # (n, 3)

    @classmethod
    def initial(cls, v_meas0):
        return cls(np.zeros(3), np.array(v_meas0, dtype=float))


def bias_estimate(mem, v_meas, gains, weights):
    """b_hat = b_bar - sum_i k_i hat(v_f,i)^T Lambda v_i."""
    corr = np.sum(np.asarray(weights)[:, None]
                  * np.cross(v_meas @ gains.Lambda.T, mem.v_f), axis=0)
    return mem.b_bar - corr


def k_v_matrix(v_f, v_meas, gains, weights):
    """K_v = sum_i k_i hat(v_f,i)^T Lambda hat(v_i) (filtered-vector gain)."""
    K = np.zeros((3, 3))
    for i in range(v_meas.shape[0]):
        a, b = v_f[i], v_meas[i]
        Lb = gains.Lambda @ b
        # hat(a)^T Lambda hat(b) = (a . Lambda b) I - (Lambda b) a^T
        K += weights[i] * (float(a @ Lb) * np.eye(3) - np.outer(Lb, a))
    return K


def k_o_matrix(v_meas, gains, weights):
    """K_o = sum_i k_i hat(v_i)^T Lambda hat(v_i) (ideal-filter limit of K_v)."""
    return k_v_matrix(np.asarray(v_meas), np.asarray(v_meas), gains,
                      np.asarray(weights))


def bbar_rate(omega_hat, v_meas, v_f, gains, weights):
    """b_bar' = K_v omega_hat + gamma_f sum_i k_i (Lambda v_i) x (v_i - v_f,i)."""
    K_v = k_v_matrix(v_f, v_meas, gains, weights)
    corr = np.sum(np.asarray(weights)[:, None]
                  * np.cross(v_meas @ gains.Lambda.T, v_meas - v_f), axis=0)
    return K_v @ omega_hat + gains.gamma_f * corr


def vector_filter_rate(v_meas, v_f, gamma_f):
    """First-order lag per sensor: v_f,i' = gamma_f (v_i - v_f,i)."""
    return gamma_f * (np.asarray(v_meas) - np.asarray(v_f))


def filter_advance(mem, v_meas, gains, dt):
    """Exact step of the stiff vector filters with v_i held; in place.

    At the nominal gains gamma_f dt = 10, so the lag decays by exp(-10)
    within one control step: after this call v_f has essentially converged
    to the current sample, which is what makes the algebraic bias estimate
    insensitive to per-sample vector noise. Returns the pre-update lag
    v_f - v_meas, needed for the matching b_bar integral.
    """
    lag0 = mem.v_f - v_meas
    mem.v_f = v_meas + lag0 * np.exp(-gains.gamma_f * dt)
    return lag0


def bbar_advance(mem, omega_hat, v_meas, lag0, gains, weights, dt):
    """Exact step of the b_bar integrator over the same interval, in place.

    The filter-correction integral of gamma_f sum_i k_i (Lambda v_i) x
    (v_i - v_f,i) has the closed form (1 - exp(-gamma_f dt)) sum_i k_i
    (Lambda v_i) x (v_i - v_f,i(0)); the K_v omega_hat term uses the
    step-averaged v_f. ``lag0`` is the value returned by filter_advance.
    """
    weights = np.asarray(weights)
    decay = np.exp(-gains.gamma_f * dt)
    corr = np.sum(weights[:, None]
                  * np.cross(v_meas @ gains.Lambda.T, -lag0), axis=0)
    v_f_avg = v_meas + lag0 * (1.0 - decay) / (gains.gamma_f * dt)
    K_v = k_v_matrix(v_f_avg, v_meas, gains, weights)
    mem.b_bar = mem.b_bar + dt * (K_v @ omega_hat) + (1.0 - decay) * corr


def advance(mem, omega_hat, v_meas, gains, weights, dt):
    """One control step of both observer memories, in place."""
    lag0 = filter_advance(mem, v_meas, gains, dt)
    bbar_advance(mem, omega_hat, v_meas, lag0, gains, weights, dt)
