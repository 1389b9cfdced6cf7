"""Numeric evaluators for everything proof-shaped: Lyapunov functions, the
alignment-geometry constants, gain-condition matrices and practical-stability
bounds. This module is the test oracle of the repository; nothing here feeds
back into the control laws."""

from dataclasses import dataclass, field

import numpy as np

from .geometry import hat
from .plant import ConfigurationError


class AssumptionViolationError(ValueError):
    """A structural assumption (for example reference non-collinearity) failed."""


DEFAULT_EPS_J = 0.1  # critical-ball radius used for the beta constant


@dataclass
class Lemma1Constants:
    """Alignment-geometry constants of the weighted reference set.

    W = -sum_i k_i hat(r_i)^2 and W_bar = sum_i k_i r_i r_i^T are both
    positive definite when at least two references are non-collinear.
    varpi = tr(W_bar^{-1}) scales the attitude-gap bound, beta the
    z-versus-eps bound away from the critical rotations.
    """

    W: np.ndarray
    W_bar: np.ndarray
    lambda_w: np.ndarray  # descending eigenvalues of W
    eigvecs_w: np.ndarray  # columns matching lambda_w
    varpi: float
    beta: float
    eps_j: float


def lemma1_constants(refs, alpha1=1.0, eps_j=DEFAULT_EPS_J):
    """Compute W, W_bar, the ordered spectrum of W, varpi and beta (at its
    lower bound) for a reference set."""
    if eps_j <= 0 or alpha1 <= 0:
        raise ConfigurationError("alpha1 and eps_j must be positive")
    W = np.zeros((3, 3))
    W_bar = np.zeros((3, 3))
    for r, k in zip(refs.vectors, refs.weights):
        H = hat(r)
        W -= k * (H @ H)
        W_bar += k * np.outer(r, r)
    vals, vecs = np.linalg.eigh(W)
    if vals[0] <= 0 or np.min(np.linalg.eigvalsh(W_bar)) <= 0:
        raise AssumptionViolationError(
            "reference set does not span: W or W_bar not positive definite")
    order = np.argsort(vals)[::-1]
    lambda_w = vals[order]
    eigvecs_w = vecs[:, order]
    varpi = float(np.trace(np.linalg.inv(W_bar)))
    beta = 2.0 * lambda_w[0] * alpha1 / (eps_j ** 2 * lambda_w[2] ** 2)
    return Lemma1Constants(W, W_bar, lambda_w, eigvecs_w, varpi,
                           float(beta), eps_j)


def critical_rotations(lc):
    """The three rotations R_j = I + 2 hat(v_wj)^2 at which z vanishes
    without alignment, built from the eigenvectors of W."""
    out = []
    for j in range(3):
        H = hat(lc.eigvecs_w[:, j])
        out.append(np.eye(3) + 2.0 * (H @ H))
    return out


def attitude_gap_bound(eps, varpi):
    """Upper bound sqrt(2 eps varpi) on the spectral gap ||R - R_d||."""
    if eps < 0 or varpi < 0:
        raise ConfigurationError("eps and varpi must be nonnegative")
    return float(np.sqrt(2.0 * eps * varpi))


def lyapunov_v1(eta, x_tilde, y, m, k_x):
    """V1 = (m/2)||eta||^2 + (k_x^2/2)||x_tilde||^2 + (1/2)||y||^2."""
    return 0.5 * (m * float(eta @ eta)
                  + k_x ** 2 * float(x_tilde @ x_tilde)
                  + float(np.dot(y, y)))


def lyapunov_v2(z, omega_tilde, b_tilde, eps, inertia, alpha1, alpha2):
    """V2 = (1/2) w~^T M w~ + (1/2)||b~||^2 + (alpha2/2)||z||^2 + alpha1 eps."""
    return 0.5 * float(omega_tilde @ inertia @ omega_tilde) \
        + 0.5 * float(b_tilde @ b_tilde) \
        + 0.5 * alpha2 * float(z @ z) + alpha1 * eps


def c_upper_limit(pos_gains, att_gains, refs, params, lc):
    """Admissible upper limit for the composite-function weight c."""
    lambda_a = att_gains.alpha1 - att_gains.alpha2 * refs.weight_sum
    return att_gains.alpha1 * att_gains.lambda_c * lambda_a \
        * (pos_gains.k - pos_gains.k_x) \
        / (params.m * params.g ** 2 * lc.varpi * lc.beta)


def lyapunov_v3(v1, v2, c, c_max):
    """Composite V3 = c V1 + V2 for an admissible weight 0 < c < c_max."""
    if not 0.0 < c < c_max:
        raise ConfigurationError(
            "composite weight c=%g outside (0, %g)" % (c, c_max))
    return c * v1 + v2


@dataclass
class Condition:
    name: str
    satisfied: bool
    margin: float


@dataclass
class ConditionReport:
    conditions: list = field(default_factory=list)

    def add(self, name, margin):
        margin = float(margin)
        if not np.isfinite(margin):
            raise ConfigurationError("non-finite margin for " + name)
        self.conditions.append(Condition(name, margin > 0, margin))

    @property
    def all_satisfied(self):
        return all(c.satisfied for c in self.conditions)

    def failed(self):
        return [c for c in self.conditions if not c.satisfied]

    def as_dict(self):
        return {"all_satisfied": self.all_satisfied,
                "conditions": [{"name": c.name, "satisfied": c.satisfied,
                                "margin": c.margin}
                               for c in self.conditions]}


def q1_matrix(pos_gains, m):
    """Position-loop condition matrix in the (||eta||, ||x~||, ||y||) basis."""
    kx = pos_gains.k_x
    lam_kf = float(np.min(np.linalg.eigvalsh(pos_gains.K_f)))
    return np.array([
        [m * (pos_gains.k - kx), 0.0, 0.0],
        [0.0, kx ** 3, -kx ** 2 / (2.0 * m)],
        [0.0, -kx ** 2 / (2.0 * m), lam_kf]])


def q2_matrix(att_gains, lambda_a, lambda_o, norm_g):
    lam_kc = float(np.min(np.linalg.eigvalsh(att_gains.K_c)))
    return np.array([
        [att_gains.lambda_c * lambda_a, 0.0, 0.0],
        [0.0, lam_kc, -0.5 * norm_g],
        [0.0, -0.5 * norm_g, lambda_o]])


def condition_matrices(pos_gains, att_gains, obs_gains, refs, params,
                       mu_d=0.0, f_max=None, norm_g=None, eps_v=0.0,
                       c=None, eps_j=DEFAULT_EPS_J):
    """Build Q1..Q5 and gamma_3 and report every gain inequality with margins.

    f_max, ||G|| and eps_v are trajectory-dependent; pass run extremes when
    available, otherwise conservative stand-ins are used (f_max from the
    thrust bounds, G evaluated at omega_r = 0 and J at its norm bound).
    Failed conditions are reported with negative margins, never raised.
    """
    from .position import thrust_bounds

    m, g = params.m, params.g
    lc = lemma1_constants(refs, att_gains.alpha1, eps_j)
    rep = ConditionReport()

    kx, k = pos_gains.k_x, pos_gains.k
    lam_kf = float(np.min(np.linalg.eigvalsh(pos_gains.K_f)))
    rep.add("k_x < g - mu_d", (g - mu_d) - kx)
    rep.add("k > k_x", k - kx)
    rep.add("lambda_min(K_f) > k_x/(4 m^2)", lam_kf - kx / (4.0 * m ** 2))
    rep.add("thrust feasibility k + k_x + k_f3 < g - mu_d",
            (g - mu_d) - (k + kx + pos_gains.kf3))

    f_lo, f_hi = thrust_bounds(pos_gains, m, g)
    if f_max is None:
        f_max = f_hi
    rep.add("f_max < 2 m g", 2.0 * m * g - f_max)

    ks = refs.weight_sum
    lambda_a = att_gains.alpha1 - att_gains.alpha2 * ks
    rep.add("lambda_a = alpha1 - alpha2 sum(k_i) > 0", lambda_a)

    K_o = np.zeros((3, 3))
    lam_max_L = float(np.max(np.linalg.eigvalsh(obs_gains.Lambda)))
    for r, kw in zip(refs.vectors, refs.weights):
        # body-frame directions are rotations of r_i; with a shared isotropic
        # or not Lambda the spectrum is evaluated in the inertial frame
        H = hat(r)
        K_o += kw * (H.T @ obs_gains.Lambda @ H)
    lam_ko = float(np.min(np.linalg.eigvalsh(0.5 * (K_o + K_o.T))))
    lambda_o = lam_ko - eps_v * ks * lam_max_L
    if norm_g is None:
        # stationary stand-in: G = K_c + lambda_c M J with ||J|| at its bound
        norm_g = float(np.linalg.norm(att_gains.K_c, 2)) \
            + att_gains.lambda_c * float(np.linalg.norm(params.inertia, 2)) * ks
    lam_kc = float(np.min(np.linalg.eigvalsh(att_gains.K_c)))
    rep.add("lambda_o > ||G||^2 / (4 lambda_min(K_c))",
            lambda_o - norm_g ** 2 / (4.0 * lam_kc))

    c_max = c_upper_limit(pos_gains, att_gains, refs, params, lc)
    if c is None:
        c = 0.5 * c_max if c_max > 0 else 1.0
    rep.add("c < c_max", c_max - c)

    Q1 = q1_matrix(pos_gains, m)
    Q2 = q2_matrix(att_gains, lambda_a, lambda_o, norm_g)
    root = np.sqrt(lc.varpi * lc.beta / att_gains.alpha1)
    Q3 = np.array([
        [att_gains.lambda_c * lambda_a, -0.5 * c * f_max * root],
        [-0.5 * c * f_max * root, c * m * (m * k - kx)]])
    Q4 = np.array([[lam_kc, -0.5 * norm_g], [-0.5 * norm_g, lambda_o]])
    Q5 = np.array([
        [c * kx ** 3, -0.5 * c * kx ** 2 / m],
        [-0.5 * c * kx ** 2 / m, c * lam_kf]])

    mats = {"Q1": Q1, "Q2": Q2, "Q3": Q3, "Q4": Q4, "Q5": Q5}
    for name, Q in mats.items():
        rep.add("lambda_min(%s) > 0" % name,
                float(np.min(np.linalg.eigvalsh(Q))))
    gamma3 = min(float(np.min(np.linalg.eigvalsh(mats[n])))
                 for n in ("Q3", "Q4", "Q5"))
    return mats, float(gamma3), rep


def practical_stability_bound(k1, k2, k3, k4, eps_margin, d_bar):
    """Exponential rate and ultimate bound of the comparison lemma.

    For k1||x||^2 <= V <= k2||x||^2 and an undisturbed decay
    V' <= -(k3 + eps_margin)||x||^2 with gradient bound k4||x|| and
    ||d|| <= d_bar: rate k3/(2 k2) and ultimate radius
    (k4 d_bar / 2) sqrt(k2 / (k1 k3 eps_margin)).
    """
    if min(k1, k2, k3, k4, eps_margin) <= 0 or d_bar < 0:
        raise ConfigurationError("invalid practical-stability constants")
    rate = k3 / (2.0 * k2)
    ultimate = 0.5 * k4 * d_bar * np.sqrt(k2 / (k1 * k3 * eps_margin))
    return float(rate), float(ultimate)


def eigmin_bisect(Q, tol=1e-12):
    """Smallest eigenvalue of a symmetric matrix by bisection on positive
    definiteness of Q - lam I; an independent cross-check of the solver."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]

    def shifted_pd(lam):
        try:
            np.linalg.cholesky(Q - lam * np.eye(n))
            return True
        except np.linalg.LinAlgError:
            return False

    # the smallest eigenvalue lies in [-r, r] by Gershgorin, and it is the
    # supremum of shifts lam for which Q - lam I stays positive definite
    r = float(np.max(np.sum(np.abs(Q), axis=1))) + 1.0
    lo, hi = -r, r
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if shifted_pd(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)
