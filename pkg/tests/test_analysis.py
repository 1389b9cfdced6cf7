import numpy as np
import pytest

from quadtrack.analysis import (AssumptionViolationError, attitude_gap_bound,
                                c_upper_limit, condition_matrices,
                                critical_rotations, eigmin_bisect,
                                lemma1_constants, lyapunov_v1, lyapunov_v2,
                                lyapunov_v3, practical_stability_bound,
                                q1_matrix)
from quadtrack.attitude import AttitudeGains, alignment
from quadtrack.config import nominal_params, nominal_references
from quadtrack.geometry import hat, rotation_gap, so3_exp
from quadtrack.observer import ObserverGains
from quadtrack.plant import ConfigurationError
from quadtrack.position import PositionGains
from quadtrack.sensing import InertialReferenceSet

REFS = nominal_references()


def test_single_reference_w_contribution():
    # -k (e_z^)^2 = k diag(1, 1, 0)
    H = hat([0.0, 0.0, 1.0])
    np.testing.assert_allclose(-0.7 * (H @ H), 0.7 * np.diag([1, 1, 0]),
                               atol=1e-15)


def test_lemma1_constants_nominal_set():
    lc = lemma1_constants(REFS)
    assert np.all(np.linalg.eigvalsh(lc.W) > 0)
    assert np.all(np.linalg.eigvalsh(lc.W_bar) > 0)
    assert lc.lambda_w[0] >= lc.lambda_w[1] >= lc.lambda_w[2] > 0
    assert lc.varpi > 0
    # W = tr(W_bar) I - W_bar for unit references
    np.testing.assert_allclose(
        lc.W, np.trace(lc.W_bar) * np.eye(3) - lc.W_bar, atol=1e-14)
    assert lc.beta >= 2.0 * lc.lambda_w[0] / (0.1 ** 2 * lc.lambda_w[2] ** 2)


def test_collinear_set_rejected():
    with pytest.raises((AssumptionViolationError, ConfigurationError)):
        refs = InertialReferenceSet(
            np.array([[0.0, 0.0, 1.0], [0.0, 1e-5, 1.0]])
            / np.linalg.norm([[0.0, 0.0, 1.0], [0.0, 1e-5, 1.0]],
                             axis=1)[:, None],
            np.array([1.0, 1.0]))
        lemma1_constants(refs)


def test_gap_bound_trivial():
    assert attitude_gap_bound(0.0, 5.0) == 0.0
    lc = lemma1_constants(REFS)
    R = so3_exp([0.2, 0.1, -0.3])
    v = REFS.vectors @ R
    ae = alignment(v, v, REFS.weights)
    assert attitude_gap_bound(ae.eps, lc.varpi) <= 1e-7


def test_gap_bound_thousand_random_pairs():
    lc = lemma1_constants(REFS)
    rng = np.random.default_rng(101)
    violations = 0
    for _ in range(1000):
        R = so3_exp(rng.standard_normal(3) * 3.0)
        R_d = so3_exp(rng.standard_normal(3) * 3.0)
        v = REFS.vectors @ R
        v_d = REFS.vectors @ R_d
        eps = alignment(v, v_d, REFS.weights).eps
        if rotation_gap(R, R_d) > attitude_gap_bound(eps, lc.varpi) + 1e-12:
            violations += 1
    assert violations == 0


def test_critical_rotations_are_rotations():
    lc = lemma1_constants(REFS)
    for R_j in critical_rotations(lc):
        np.testing.assert_allclose(R_j.T @ R_j, np.eye(3), atol=1e-12)
        assert np.linalg.det(R_j) == pytest.approx(1.0, abs=1e-12)
        # each is a half-turn about an eigenvector of W
        assert np.trace(R_j) == pytest.approx(-1.0, abs=1e-12)


def test_lyapunov_v1_values():
    assert lyapunov_v1(np.zeros(3), np.zeros(3), np.zeros(3), 0.467,
                       0.1) == 0.0
    val = lyapunov_v1(np.array([1.0, 0, 0]), np.zeros(3), np.zeros(3),
                      0.467, 0.1)
    assert val == pytest.approx(0.2335, abs=1e-12)


def test_lyapunov_v2_values():
    M = nominal_params().inertia
    assert lyapunov_v2(np.zeros(3), np.zeros(3), np.zeros(3), 0.0, M,
                       1.0, 0.01) == 0.0
    val = lyapunov_v2(np.zeros(3), np.array([0.0, 0.0, 1.0]), np.zeros(3),
                      0.0, M, 1.0, 0.01)
    assert val == pytest.approx(0.5 * 0.0157, abs=1e-12)


def test_lyapunov_v3_composite_and_interval():
    lc = lemma1_constants(REFS)
    c_max = c_upper_limit(PositionGains(), AttitudeGains(), REFS,
                          nominal_params(), lc)
    assert c_max > 0
    c = 0.5 * c_max
    assert lyapunov_v3(2.0, 3.0, c, c_max) == pytest.approx(2.0 * c + 3.0)
    with pytest.raises(ConfigurationError):
        lyapunov_v3(1.0, 1.0, 2.0 * c_max, c_max)


def test_q1_positive_definite_at_nominal_gains():
    Q1 = q1_matrix(PositionGains(), 0.467)
    vals = np.linalg.eigvalsh(Q1)
    assert np.all(vals > 0)
    np.testing.assert_allclose(
        Q1, np.array([[0.467 * 3.9, 0.0, 0.0],
                      [0.0, 1e-3, -0.01 / (2 * 0.467)],
                      [0.0, -0.01 / (2 * 0.467), 1.0]]), atol=1e-12)


def test_condition_report_nominal_gains_pass():
    mats, gamma3, rep = condition_matrices(
        PositionGains(), AttitudeGains(), ObserverGains(), REFS,
        nominal_params())
    assert rep.all_satisfied, [c.name for c in rep.failed()]
    assert gamma3 > 0
    by_name = {c.name: c for c in rep.conditions}
    feas = by_name["thrust feasibility k + k_x + k_f3 < g - mu_d"]
    assert feas.margin == pytest.approx(9.81 - 5.1, abs=1e-12)


def test_condition_report_flags_broken_gains():
    broken = PositionGains(k=13.0, k_x=12.0)
    _, _, rep = condition_matrices(
        broken, AttitudeGains(), ObserverGains(), REFS, nominal_params())
    assert not rep.all_satisfied
    names = [c.name for c in rep.failed()]
    assert "k_x < g - mu_d" in names


def test_eigmin_bisection_cross_oracle():
    mats, _, rep = condition_matrices(
        PositionGains(), AttitudeGains(), ObserverGains(), REFS,
        nominal_params())
    for name, Q in mats.items():
        ref = float(np.min(np.linalg.eigvalsh(Q)))
        alt = eigmin_bisect(Q)
        assert abs(ref - alt) < 1e-10, name


def test_practical_stability_formulas():
    rate, ub = practical_stability_bound(1.0, 2.0, 3.0, 4.0, 0.5, 0.0)
    assert ub == 0.0
    assert rate == pytest.approx(0.75)
    _, ub1 = practical_stability_bound(1.0, 2.0, 3.0, 4.0, 0.5, 1.0)
    _, ub2 = practical_stability_bound(1.0, 2.0, 3.0, 4.0, 0.5, 2.0)
    assert ub2 == pytest.approx(2.0 * ub1)


@pytest.mark.parametrize("d_bar", [0.1, 1.0, 10.0])
def test_practical_stability_scalar_ode_oracle(d_bar):
    # x' = -x + d with V = x^2/2: k1 = k2 = 1/2, k4 = 1, and the unit decay
    # split as k3 + eps_margin = 0.25 + 0.75. Simulate the worst-case
    # constant disturbance; the measured ultimate radius (exactly d_bar)
    # must respect the formula's bound
    rate, ub = practical_stability_bound(0.5, 0.5, 0.25, 1.0, 0.75, d_bar)
    dt = 1e-3
    x = 5.0 * d_bar
    for _ in range(40000):
        x = x + dt * (-x + d_bar)
    assert abs(x) <= ub
    assert abs(x) == pytest.approx(d_bar, rel=1e-2)
    assert rate == pytest.approx(0.25)
    assert ub >= d_bar
