"""Sensor models: position/velocity channels, biased gyro rate, and body-frame
unit-vector measurements of known inertial references."""

from dataclasses import dataclass, field

import numpy as np

from .plant import ConfigurationError, EZ

UNIT_TOL = 1e-12
COLLINEAR_TOL = 1e-6


class FreeFallSingularityError(ValueError):
    """Apparent-acceleration direction is undefined (g e_z + vdot ~ 0)."""


class DegenerateVectorError(ValueError):
    """A noisy unit-vector measurement collapsed to (near) zero twice."""


@dataclass
class InertialReferenceSet:
    """n >= 2 known unit reference vectors in the inertial frame with
    per-sensor confidence weights; at least two must be non-collinear."""

    vectors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float)
        n = self.vectors.shape[0]
        if n < 2 or self.vectors.shape[1] != 3:
            raise ConfigurationError("need at least two 3-vector references")
        if self.weights.shape != (n,) or np.any(self.weights <= 0):
            raise ConfigurationError("need one positive weight per reference")
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.max(np.abs(norms - 1.0)) > UNIT_TOL:
            raise ConfigurationError("reference vectors must be unit norm")
        crosses = [np.linalg.norm(np.cross(self.vectors[i], self.vectors[j]))
                   for i in range(n) for j in range(i + 1, n)]
        if max(crosses) <= COLLINEAR_TOL:
            raise ConfigurationError(
                "all reference vectors are collinear (assumption A1)")

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def weight_sum(self):
        return float(np.sum(self.weights))


@dataclass
class GyroBias:
    """Constant rate-gyro bias with a known norm bound."""

    b: np.ndarray = field(default_factory=lambda: np.zeros(3))
    mu_b: float = 0.5

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if np.linalg.norm(self.b) > self.mu_b:
            raise ConfigurationError("||b|| exceeds its declared bound mu_b")


@dataclass
class NoiseSpec:
    """Standard deviations of the zero-mean Gaussian channel noises and the
    seed of the deterministic per-channel streams."""

    sigma_x: float = 0.0
    sigma_v: float = 0.0
    sigma_omega: float = 0.0
    sigma_vec: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.sigma_x, self.sigma_v,
               self.sigma_omega, self.sigma_vec) < 0:
            raise ConfigurationError("noise sigmas must be nonnegative")

    @property
    def is_zero(self):
        return (self.sigma_x == self.sigma_v == self.sigma_omega
                == self.sigma_vec == 0.0)


@dataclass
class SensorFrame:
    """One tick of measurements."""

    x_m: np.ndarray
    v_m: np.ndarray
    omega_m: np.ndarray
    vectors_m: np.ndarray  # (n, 3), unit rows


def _channel_rngs(seed):
    # one stream per channel, split from the same seed, so parallel scenario
    # runs never share generator state
    root = np.random.SeedSequence(seed)
    return [np.random.default_rng(c) for c in root.spawn(4)]


class Sensor:
    """Produces SensorFrames from truth states.

    The four channels (position, velocity, gyro, vectors) draw from
    independent sub-streams of ``noise.seed``, so the same seed yields the
    same measurement sequence regardless of what other runs are doing.
    """

    def __init__(self, bias, noise):
        self.bias = bias
        self.noise = noise
        self._rng_x, self._rng_v, self._rng_w, self._rng_vec = \
            _channel_rngs(noise.seed)

    def measure(self, s, refs, t=0.0, ref_vectors=None):
        """Measure state ``s`` against ``refs`` (or ``ref_vectors`` when the
        reference directions are time-varying, e.g. apparent acceleration)."""
        ns = self.noise
        r = refs.vectors if ref_vectors is None else ref_vectors
        v_true = r @ s.R  # row i = R^T r_i
        x_m = s.x if ns.sigma_x == 0 else \
            s.x + ns.sigma_x * self._rng_x.standard_normal(3)
        v_m = s.v if ns.sigma_v == 0 else \
            s.v + ns.sigma_v * self._rng_v.standard_normal(3)
        omega_g = s.omega + self.bias.b
        omega_m = omega_g if ns.sigma_omega == 0 else \
            omega_g + ns.sigma_omega * self._rng_w.standard_normal(3)
        if ns.sigma_vec == 0:
            vec_m = v_true.copy()
        else:
            vec_m = np.empty_like(v_true)
            for i in range(v_true.shape[0]):
                vec_m[i] = self._noisy_unit(v_true[i])
        return SensorFrame(np.asarray(x_m, dtype=float),
                           np.asarray(v_m, dtype=float),
                           omega_m, vec_m)

    def _noisy_unit(self, v):
        for _ in range(2):
            w = v + self.noise.sigma_vec * self._rng_vec.standard_normal(3)
            n = np.linalg.norm(w)
            if n >= 1e-9:
                return w / n
        raise DegenerateVectorError(
            "noisy vector measurement collapsed to zero after resampling")


def apparent_acceleration_reference(vdot, g):
    """Unit direction of the apparent acceleration g e_z + vdot.

    Stand-in inertial reference when an accelerometer supplies one of the
    vector measurements; equals e_z in hover.
    """
    u = g * EZ + np.asarray(vdot, dtype=float)
    n = np.linalg.norm(u)
    if n <= 1e-6:
        raise FreeFallSingularityError(
            "apparent acceleration vanished (free fall)")
    return u / n
