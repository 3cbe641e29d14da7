"""Geometry kernel for the rotation group SO(3) and its Lie algebra.

Conventions used throughout the package:

* rotation matrices are dense row-major 3x3 ``numpy`` arrays acting on
  column vectors, with ``R.T @ R = I`` and ``det R = +1``;
* tangent vectors ("twists") are expressed in body coordinates, so a
  curve ``R(t)`` with body angular velocity ``xi`` satisfies
  ``dR/dt = R @ hat(xi)``;
* no quaternion or Euler-angle representation appears anywhere, the whole
  point of working on the matrix group is to avoid parameterizations.
"""

from __future__ import annotations

import warnings

import numpy as np

__all__ = [
    "ROTATION_TOL",
    "hat",
    "vee",
    "sk",
    "exp_map",
    "log_map",
    "phi",
    "geodesic",
    "orthonormalize",
    "is_rotation",
    "rotation_residual",
]

ROTATION_TOL = 1e-9
"""Orthonormality and determinant residual accepted for a valid rotation."""

_SKEW_TOL = 1e-8
_SMALL_ANGLE = 1e-7
_NEAR_PI_COS = -0.999999  # cos(theta) cutover to the angle-pi axis extraction

_I3 = np.eye(3)


def hat(v: np.ndarray) -> np.ndarray:
    """Map a 3-vector to the skew-symmetric matrix with ``hat(v) @ y = v x y``."""
    v = np.asarray(v, dtype=float)
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee(S: np.ndarray) -> np.ndarray:
    """Inverse of :func:`hat`.

    Raises ``ValueError`` if the input is not skew-symmetric (symmetry
    residual above 1e-8); use :func:`sk` first to project arbitrary
    matrices.
    """
    S = np.asarray(S, dtype=float)
    residual = np.linalg.norm(S + S.T)
    if residual > _SKEW_TOL:
        raise ValueError(f"matrix is not skew-symmetric (residual {residual:.3e})")
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def sk(A: np.ndarray) -> np.ndarray:
    """Skew-symmetric part ``(A - A.T) / 2`` of a 3x3 matrix."""
    A = np.asarray(A, dtype=float)
    return 0.5 * (A - A.T)


def exp_map(v: np.ndarray) -> np.ndarray:
    """Exponential map from a body twist to a rotation (Rodrigues formula).

    A second-order series replaces the ``sin(t)/t`` and ``(1-cos(t))/t^2``
    coefficients below angle 1e-7 to avoid 0/0.
    """
    v = np.asarray(v, dtype=float)
    theta_sq = float(v @ v)
    theta = np.sqrt(theta_sq)
    if theta < _SMALL_ANGLE:
        a = 1.0 - theta_sq / 6.0
        b = 0.5 - theta_sq / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta_sq
    K = hat(v)
    return _I3 + a * K + b * (K @ K)


def log_map(R: np.ndarray) -> np.ndarray:
    """Principal logarithm of a rotation, returned as a body twist.

    The rotation angle lies in ``[0, pi]``.  At and near angle pi the axis
    is recovered from the kernel of ``R - I`` (numerically exact there) and
    its sign is fixed by the convention that the component selected by the
    largest diagonal entry of ``(R + I) / 2`` is nonnegative; away from pi
    the sign comes from the skew part of ``R`` and both conventions agree.
    """
    R = np.asarray(R, dtype=float)
    cos_theta = 0.5 * (np.trace(R) - 1.0)
    q = vee(sk(R))  # equals sin(theta) * axis for an exact rotation
    s = np.linalg.norm(q)

    if cos_theta > _NEAR_PI_COS:
        theta = np.arctan2(s, cos_theta)
        if theta < _SMALL_ANGLE:
            return q * (1.0 + theta * theta / 6.0)
        return (theta / s) * q

    # Angle within ~1.4e-3 of pi: sin(theta) is tiny, so q is unusable for
    # the axis magnitude.  (R - I) annihilates the axis exactly, so the
    # right-singular vector of its smallest singular value is the axis.
    _, _, vt = np.linalg.svd(R - _I3)
    axis = vt[2]
    theta = np.pi - np.arcsin(min(s, 1.0))
    if s > 1e-12:
        if q @ axis < 0.0:
            axis = -axis
    else:
        k = int(np.argmax(np.diag(R) + 1.0))
        if axis[k] < 0.0:
            axis = -axis
    return theta * axis


def phi(R_e: np.ndarray) -> float:
    """Attitude error function ``tr(I - R_e) / 2 = 1 - cos(angle)``, in [0, 2]."""
    R_e = np.asarray(R_e, dtype=float)
    return 0.5 * (3.0 - float(np.trace(R_e)))


def geodesic(R_a: np.ndarray, R_b: np.ndarray, s: float) -> np.ndarray:
    """Point at parameter ``s`` on the geodesic from ``R_a`` to ``R_b``.

    Endpoints are returned exactly.  If the two rotations are (nearly)
    antipodal the connecting geodesic is not unique; a warning is emitted
    and the branch chosen by :func:`log_map` is used.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"geodesic parameter must be in [0, 1], got {s}")
    R_a = np.asarray(R_a, dtype=float)
    R_b = np.asarray(R_b, dtype=float)
    if s == 0.0:
        return R_a.copy()
    if s == 1.0:
        return R_b.copy()
    v = log_map(R_a.T @ R_b)
    if np.pi - np.linalg.norm(v) < 1e-6:
        warnings.warn(
            "geodesic endpoints are antipodal; interpolation follows an "
            "arbitrary branch of the logarithm",
            RuntimeWarning,
            stacklevel=2,
        )
    return R_a @ exp_map(s * v)


def orthonormalize(R: np.ndarray) -> np.ndarray:
    """Project a near-rotation back onto SO(3) (nearest rotation in the
    Frobenius sense).

    Inputs farther than 0.1 from orthonormality, or with determinant not
    near +1, are rejected.  Small drift (residual below 1e-4, the integrator
    case) is repaired with two Newton iterations of the polar decomposition,
    which is cheaper than an SVD and accurate to well below 1e-12 there;
    larger drift falls back to the SVD-based polar factor.
    """
    R = np.asarray(R, dtype=float)
    residual = np.linalg.norm(R.T @ R - _I3)
    if residual > 0.1:
        raise ValueError(f"input too far from SO(3) (residual {residual:.3e})")
    if np.linalg.det(R) < 0.5:
        raise ValueError("input is in the reflection component, not near SO(3)")
    if residual < 1e-4:
        for _ in range(2):
            R = R @ (1.5 * _I3 - 0.5 * (R.T @ R))
        return R
    U, _, Vt = np.linalg.svd(R)
    D = np.diag([1.0, 1.0, float(np.linalg.det(U @ Vt))])
    return U @ D @ Vt


def rotation_residual(R: np.ndarray) -> float:
    """Max of the orthonormality residual and the determinant deviation."""
    R = np.asarray(R, dtype=float)
    return max(
        float(np.linalg.norm(R.T @ R - _I3)),
        abs(float(np.linalg.det(R)) - 1.0),
    )


def is_rotation(R: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    """True if ``R`` satisfies the rotation invariants within ``tol``."""
    return rotation_residual(R) <= tol
