"""Minimal SO(3) kernel: skew maps, exponential map, orthonormalization, norms."""

import numpy as np

ROTATION_TOL = 1e-9

# below this angle the Rodrigues coefficients switch to their series expansions
SMALL_ANGLE = 1e-6


class NotSkewSymmetricError(ValueError):
    """Input matrix is not skew-symmetric within tolerance."""


class DegenerateMatrixError(ValueError):
    """Matrix cannot be projected onto SO(3) (non-positive determinant)."""


def hat(v):
    """Map a 3-vector to its cross-product (skew-symmetric) matrix.

    hat(u) @ w == np.cross(u, w) for all w.
    """
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(S, tol=ROTATION_TOL):
    """Inverse of hat. Rejects matrices that are not skew within ``tol``."""
    S = np.asarray(S, dtype=float)
    if np.max(np.abs(S + S.T)) > tol:
        raise NotSkewSymmetricError(
            f"matrix is not skew-symmetric within {tol:g}")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def so3_exp(v):
    """Exponential map: rotation by angle ||v|| about axis v/||v||.

    Rodrigues formula; series branch below SMALL_ANGLE avoids cancellation
    in sin(t)/t and (1-cos(t))/t^2.
    """
    v = np.asarray(v, dtype=float)
    theta2 = float(v @ v)
    theta = np.sqrt(theta2)
    V = hat(v)
    if theta < SMALL_ANGLE:
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * V + b * (V @ V)


def project_to_so3(M):
    """Nearest rotation to M in the Frobenius norm (polar decomposition).

    Idempotent on rotations. Requires det(M) > 0.
    """
    M = np.asarray(M, dtype=float)
    if np.linalg.det(M) <= 0.0:
        raise DegenerateMatrixError("det(M) <= 0: no nearby rotation")
    U, _, Vt = np.linalg.svd(M)
    D = np.diag([1.0, 1.0, np.linalg.det(U @ Vt)])
    return U @ D @ Vt


def is_rotation(R, tol=ROTATION_TOL):
    """True if R^T R = I and det(R) = 1 within ``tol``."""
    R = np.asarray(R)
    if R.shape != (3, 3):
        return False
    return (np.max(np.abs(R.T @ R - np.eye(3))) <= tol
            and abs(np.linalg.det(R) - 1.0) <= tol)


def assert_rotation(R, tol=ROTATION_TOL):
    if not is_rotation(R, tol):
        raise ValueError("matrix violates rotation invariants "
                         f"(orthonormality/determinant beyond {tol:g})")


def rotation_gap(R1, R2):
    """Spectral norm ||R1 - R2|| (the norm used for attitude-gap bounds)."""
    return float(np.linalg.norm(R1 - R2, 2))
