"""Rigid-body attitude dynamics, the inner-loop PD controller, and the
energy-like function used by the supervisory layer.

Torque commands and angular velocities are plain length-3 arrays (N*m and
rad/s, body frame).  The inner loop stabilizes the attitude to a constant
reference rotation; all functions here are pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import so3

__all__ = [
    "Inertia",
    "Gains",
    "BodyState",
    "pd_torque",
    "dynamics_rhs",
    "lyapunov_v",
    "lyapunov_vdot",
    "rk4_step",
    "rk4_step_free",
]

_SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class Inertia:
    """Symmetric positive-definite inertia matrix (kg*m^2).

    The inverse and the smallest eigenvalue are cached at construction;
    both are needed repeatedly by the dynamics and by the offline torque
    threshold solver.
    """

    matrix: np.ndarray
    inv: np.ndarray = field(init=False, repr=False)
    lambda_min: float = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError(f"inertia must be 3x3, got {m.shape}")
        if np.linalg.norm(m - m.T) > _SYMMETRY_TOL:
            raise ValueError("inertia matrix must be symmetric")
        eigs = np.linalg.eigvalsh(m)
        if eigs[0] <= 0.0:
            raise ValueError(f"inertia must be positive definite (min eig {eigs[0]})")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "inv", np.linalg.inv(m))
        object.__setattr__(self, "lambda_min", float(eigs[0]))

    @classmethod
    def from_diagonal(cls, diag) -> "Inertia":
        return cls(np.diag(np.asarray(diag, dtype=float)))


@dataclass(frozen=True)
class Gains:
    """Positive PD gains: ``k_p`` (N*m per unit attitude error) and
    ``k_d`` (N*m*s/rad)."""

    k_p: float
    k_d: float

    def __post_init__(self):
        if self.k_p <= 0.0 or self.k_d <= 0.0:
            raise ValueError(f"gains must be strictly positive, got {self}")


@dataclass
class BodyState:
    """Attitude plus body-frame angular velocity."""

    rotation: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        if not so3.is_rotation(self.rotation):
            raise ValueError(
                "rotation invariant violated "
                f"(residual {so3.rotation_residual(self.rotation):.3e})"
            )
        if self.omega.shape != (3,) or not np.all(np.isfinite(self.omega)):
            raise ValueError("omega must be a finite 3-vector")


def pd_torque(state: BodyState, r_g: np.ndarray, gains: Gains) -> np.ndarray:
    """PD control torque ``k_p * vee(sk(R.T @ R_g)) - k_d * omega``."""
    r_e = state.rotation.T @ r_g
    return gains.k_p * so3.vee(so3.sk(r_e)) - gains.k_d * state.omega


def dynamics_rhs(state: BodyState, torque: np.ndarray, inertia: Inertia):
    """Right-hand side of the rigid-body equations of motion.

    Returns ``(xi, omega_dot)`` where ``xi`` is the body twist of the
    attitude (``dR/dt = R @ hat(xi)``, and ``xi`` equals ``omega``) and
    ``omega_dot = J^-1 ((J omega) x omega + torque)``.
    """
    w = state.omega
    gyro = np.cross(inertia.matrix @ w, w)
    omega_dot = inertia.inv @ (gyro + np.asarray(torque, dtype=float))
    return w.copy(), omega_dot


def lyapunov_v(state: BodyState, r_g: np.ndarray, inertia: Inertia, gains: Gains) -> float:
    """Total closed-loop energy ``omega' J omega / 2 + k_p * phi(R.T R_g)``.

    Nonnegative, and zero exactly at the tracked equilibrium.
    """
    kinetic = 0.5 * float(state.omega @ (inertia.matrix @ state.omega))
    return kinetic + gains.k_p * so3.phi(state.rotation.T @ r_g)


def lyapunov_vdot(
    state: BodyState, r_g: np.ndarray, r_g_twist: np.ndarray, gains: Gains
) -> float:
    """Time derivative of :func:`lyapunov_v` along the closed loop.

    ``r_g_twist`` is the body twist of the reference (zero when the
    reference is held, in which case the value reduces to
    ``-k_d * ||omega||^2``).
    """
    r_g_dot = r_g @ so3.hat(r_g_twist)
    coupling = -0.5 * gains.k_p * float(np.trace(state.rotation.T @ r_g_dot))
    return coupling - gains.k_d * float(state.omega @ state.omega)


def _rk4(state: BodyState, inertia: Inertia, h: float, torque_of) -> BodyState:
    """One multiplicative RK4 step of the rigid body under ``torque_of(R, w)``.

    The attitude advances as ``R @ exp_map(h * xi_avg)`` with the combined
    stage twist, then gets projected back onto SO(3); this keeps the state
    on the manifold without constraint drift.
    """
    R, w = state.rotation, state.omega

    def accel(Ri, wi):
        gyro = np.cross(inertia.matrix @ wi, wi)
        return inertia.inv @ (gyro + torque_of(Ri, wi))

    x1 = w
    a1 = accel(R, w)
    R2 = R @ so3.exp_map(0.5 * h * x1)
    w2 = w + 0.5 * h * a1
    x2 = w2
    a2 = accel(R2, w2)
    R3 = R @ so3.exp_map(0.5 * h * x2)
    w3 = w + 0.5 * h * a2
    x3 = w3
    a3 = accel(R3, w3)
    R4 = R @ so3.exp_map(h * x3)
    w4 = w + h * a3
    x4 = w4
    a4 = accel(R4, w4)

    xi_avg = (x1 + 2.0 * x2 + 2.0 * x3 + x4) / 6.0
    w_new = w + h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
    R_new = so3.orthonormalize(R @ so3.exp_map(h * xi_avg))
    return BodyState(R_new, w_new)


def rk4_step(
    state: BodyState, r_g: np.ndarray, inertia: Inertia, gains: Gains, h: float
) -> BodyState:
    """Advance the PD-controlled body one step with the reference held at ``r_g``."""

    def torque_of(Ri, wi):
        return gains.k_p * so3.vee(so3.sk(Ri.T @ r_g)) - gains.k_d * wi

    return _rk4(state, inertia, h, torque_of)


def rk4_step_free(state: BodyState, inertia: Inertia, h: float) -> BodyState:
    """Advance the torque-free body one step (used by conservation checks)."""
    zero = np.zeros(3)

    def torque_of(Ri, wi):
        return zero

    return _rk4(state, inertia, h, torque_of)
