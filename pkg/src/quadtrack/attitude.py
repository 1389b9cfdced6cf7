"""Inner-loop attitude controller driven by vector alignment errors: no
attitude reconstruction anywhere, only (eps, z, J) from measured directions."""

from dataclasses import dataclass, field

import numpy as np

from .plant import ConfigurationError


@dataclass
class AlignmentErrors:
    """Scalar alignment error eps, alignment vector z and coupling matrix J."""

    eps: float
    z: np.ndarray
    J: np.ndarray


@dataclass
class AttitudeGains:
    K_c: np.ndarray = field(default_factory=lambda: np.eye(3))
    lambda_c: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 0.01

    def __post_init__(self):
        self.K_c = np.asarray(self.K_c, dtype=float)
        if self.K_c.shape != (3, 3) or \
                np.max(np.abs(self.K_c - self.K_c.T)) > 1e-12 or \
                np.any(np.linalg.eigvalsh(self.K_c) <= 0):
            raise ConfigurationError("K_c must be symmetric positive definite")
        if min(self.lambda_c, self.alpha1, self.alpha2) <= 0:
            raise ConfigurationError(
                "lambda_c, alpha1, alpha2 must be positive")


@dataclass
class AttitudeCtrlMemory:
    """Integrated reference rate omega_r_hat (kept for cross-checking the
    reference dynamics; the torque law uses the instantaneous rate)."""

    omega_r_hat: np.ndarray = field(default_factory=lambda: np.zeros(3))


def alignment(v_meas, v_des, weights):
    """Alignment errors between measured and desired body-frame directions:

        eps = sum_i k_i (1 - v_i . v_d,i)
        z   = sum_i k_i v_i x v_d,i
        J   = sum_i k_i hat(v_d,i)^T hat(v_i)
              = sum_i k_i ((v_d,i . v_i) I - v_i v_d,i^T)
    """
    v_meas = np.atleast_2d(v_meas)
    v_des = np.atleast_2d(v_des)
    weights = np.asarray(weights, dtype=float)
    if v_meas.shape != v_des.shape or v_meas.shape[0] != weights.shape[0]:
        raise ConfigurationError("measured/desired vector counts differ")
    dots = np.einsum("ij,ij->i", v_meas, v_des)
    eps = float(np.sum(weights * (1.0 - dots)))
    z = np.sum(weights[:, None] * np.cross(v_meas, v_des), axis=0)
    J = float(np.sum(weights * dots)) * np.eye(3) \
        - (weights[:, None] * v_meas).T @ v_des
    return AlignmentErrors(eps, z, J)


def omega_r(z, omega_d, lambda_c):
    """Reference rate omega_r = -lambda_c z + omega_d."""
    return -lambda_c * z + omega_d


def omega_r_hat_rate(omega_hat, omega_d, omega_dot_d, ae, lambda_c):
    """Reference-rate dynamics
    omega_r_hat' = -lambda_c J (omega_hat - omega_d) - lambda_c z x omega_d
                   + omega_dot_d."""
    return -lambda_c * ae.J @ (omega_hat - omega_d) \
        - lambda_c * np.cross(ae.z, omega_d) + omega_dot_d


def torque(omega_hat, omega_r_val, omega_r_hat_rate_val, ae, inertia, gains):
    """Torque law

        tau = M omega_r_hat' - (M omega_hat) x omega_r
              - K_c (omega_hat - omega_r) - (alpha1 I + alpha2 J^T) z

    with omega_r_hat' evaluated fresh at the current signals.
    """
    return inertia @ omega_r_hat_rate_val \
        - np.cross(inertia @ omega_hat, omega_r_val) \
        - gains.K_c @ (omega_hat - omega_r_val) \
        - (gains.alpha1 * ae.z + gains.alpha2 * ae.J.T @ ae.z)
