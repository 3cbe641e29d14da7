"""Compiled inner loop of the closed-loop simulation.

This module mirrors, step for step, the reference implementations in
``plant`` and ``governor`` (same stage ordering, same branch structure) and
exists purely for speed: the fixed-step loop runs tens of thousands of
3x3 operations per simulated second.  A cross-check test asserts agreement
with the pure-Python path on single steps.

Column layout of the trajectory array filled by :func:`simulate_kernel`
(one row per grid instant):

    0      t
    1..9   R (row-major)
    10..12 omega
    13..21 R_g (row-major)
    22     V
    23     Gamma (aggregate)
    24     Gamma_d
    25     Gamma_g
    26     event_flag (0/1)
    27..29 tau
    30     ||tau||
    31     c_pointing = a_c . (R a_b)
    32     phi(R.T R_d)
    33     phi(R_g.T R_d)
"""

from __future__ import annotations

import numpy as np
from numba import njit

N_COLUMNS = 34


@njit(cache=True)
def _hat(v):
    H = np.empty((3, 3))
    H[0, 0] = 0.0
    H[0, 1] = -v[2]
    H[0, 2] = v[1]
    H[1, 0] = v[2]
    H[1, 1] = 0.0
    H[1, 2] = -v[0]
    H[2, 0] = -v[1]
    H[2, 1] = v[0]
    H[2, 2] = 0.0
    return H


@njit(cache=True)
def _exp_map(v):
    theta_sq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2]
    theta = np.sqrt(theta_sq)
    if theta < 1e-7:
        a = 1.0 - theta_sq / 6.0
        b = 0.5 - theta_sq / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta_sq
    K = _hat(v)
    return np.eye(3) + a * K + b * (K @ K)


@njit(cache=True)
def _orthonormalize(R):
    # two Newton polar iterations; integrator drift is far below the 1e-4
    # fast-path bound of the reference implementation
    for _ in range(2):
        M = R.T @ R
        R = R @ (1.5 * np.eye(3) - 0.5 * M)
    return R


@njit(cache=True)
def _vee_sk(A):
    v = np.empty(3)
    v[0] = 0.5 * (A[2, 1] - A[1, 2])
    v[1] = 0.5 * (A[0, 2] - A[2, 0])
    v[2] = 0.5 * (A[1, 0] - A[0, 1])
    return v


@njit(cache=True)
def _pd_torque(R, w, Rg, kp, kd):
    return kp * _vee_sk(R.T @ Rg) - kd * w


@njit(cache=True)
def _accel(R, w, Rg, J, Jinv, kp, kd):
    tau = _pd_torque(R, w, Rg, kp, kd)
    Jw = J @ w
    gyro = np.empty(3)
    gyro[0] = Jw[1] * w[2] - Jw[2] * w[1]
    gyro[1] = Jw[2] * w[0] - Jw[0] * w[2]
    gyro[2] = Jw[0] * w[1] - Jw[1] * w[0]
    return Jinv @ (gyro + tau)


@njit(cache=True)
def _plant_rk4(R, w, Rg, J, Jinv, kp, kd, h):
    x1 = w
    a1 = _accel(R, w, Rg, J, Jinv, kp, kd)
    R2 = R @ _exp_map(0.5 * h * x1)
    w2 = w + 0.5 * h * a1
    x2 = w2
    a2 = _accel(R2, w2, Rg, J, Jinv, kp, kd)
    R3 = R @ _exp_map(0.5 * h * x2)
    w3 = w + 0.5 * h * a2
    x3 = w3
    a3 = _accel(R3, w3, Rg, J, Jinv, kp, kd)
    R4 = R @ _exp_map(h * x3)
    w4 = w + h * a3
    x4 = w4
    a4 = _accel(R4, w4, Rg, J, Jinv, kp, kd)
    xi = (x1 + 2.0 * x2 + 2.0 * x3 + x4) / 6.0
    w_new = w + h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
    R_new = _orthonormalize(R @ _exp_map(h * xi))
    return R_new, w_new


@njit(cache=True)
def _phi_pair(A, B):
    # phi of A.T @ B without forming the product: tr(A.T B) is the
    # Frobenius inner product
    tr = 0.0
    for i in range(3):
        for j in range(3):
            tr += A[i, j] * B[i, j]
    return 0.5 * (3.0 - tr)


@njit(cache=True)
def _gamma_g(Rg, ab, ac, theta_c, kp):
    Rab = Rg @ ab
    c = ac[0] * Rab[0] + ac[1] * Rab[1] + ac[2] * Rab[2]
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    theta_cg = np.arccos(c)
    margin = theta_c - theta_cg
    if margin < 0.0:
        margin = 0.0
    return kp * (1.0 - np.cos(margin))


@njit(cache=True)
def _gamma_aggregate(Rg, ab, ac, theta_c, kp, gamma_d, cap):
    g = _gamma_g(Rg, ab, ac, theta_c, kp)
    out = gamma_d
    if g < out:
        out = g
    if cap < out:
        out = cap
    return out


@njit(cache=True)
def _lyapunov(R, w, Rg, J, kp):
    Jw = J @ w
    kinetic = 0.5 * (w[0] * Jw[0] + w[1] * Jw[1] + w[2] * Jw[2])
    return kinetic + kp * _phi_pair(R, Rg)


@njit(cache=True)
def _reference_twist(R, w, Rg, Rd, J, kp, kd, ab, ac, theta_c, delta, zeta, eta, eps,
                     gamma_d, cap, kappa):
    """Returns (ok, twist, cone_value); ok = False flags boundary escape."""
    twist = np.zeros(3)
    gamma = _gamma_aggregate(Rg, ab, ac, theta_c, kp, gamma_d, cap)
    v = _lyapunov(R, w, Rg, J, kp)
    margin = gamma - v
    if margin < 0.0:
        margin = 0.0
    if margin == 0.0:
        return True, twist, 1.0
    # navigation field: attractive part
    rho = _vee_sk(Rg.T @ Rd)
    # repulsive part
    Rab = Rg @ ab
    c = ac[0] * Rab[0] + ac[1] * Rab[1] + ac[2] * Rab[2]
    if c <= delta:
        return False, twist, c
    if c < zeta:
        d = c - delta
        z = zeta - c
        slope = -eta * z * (2.0 * d + z) / (d * d)
        Rtac = Rg.T @ ac
        grad_c = np.empty(3)
        grad_c[0] = ab[1] * Rtac[2] - ab[2] * Rtac[1]
        grad_c[1] = ab[2] * Rtac[0] - ab[0] * Rtac[2]
        grad_c[2] = ab[0] * Rtac[1] - ab[1] * Rtac[0]
        rho = rho - slope * grad_c
    norm = np.sqrt(rho[0] * rho[0] + rho[1] * rho[1] + rho[2] * rho[2])
    denom = norm if norm > eps else eps
    scale = kappa * margin
    twist = scale * rho / denom
    return True, twist, c


@njit(cache=True)
def _governor_rk4(R, w, Rg, Rd, J, kp, kd, ab, ac, theta_c, delta, zeta, eta, eps,
                  gamma_d, cap, kappa, h):
    ok1, k1, c1 = _reference_twist(R, w, Rg, Rd, J, kp, kd, ab, ac, theta_c, delta,
                                   zeta, eta, eps, gamma_d, cap, kappa)
    if not ok1:
        return 1, Rg, c1
    ok2, k2, c2 = _reference_twist(R, w, Rg @ _exp_map(0.5 * h * k1), Rd, J, kp, kd,
                                   ab, ac, theta_c, delta, zeta, eta, eps, gamma_d,
                                   cap, kappa)
    if not ok2:
        return 1, Rg, c2
    ok3, k3, c3 = _reference_twist(R, w, Rg @ _exp_map(0.5 * h * k2), Rd, J, kp, kd,
                                   ab, ac, theta_c, delta, zeta, eta, eps, gamma_d,
                                   cap, kappa)
    if not ok3:
        return 1, Rg, c3
    ok4, k4, c4 = _reference_twist(R, w, Rg @ _exp_map(h * k3), Rd, J, kp, kd,
                                   ab, ac, theta_c, delta, zeta, eta, eps, gamma_d,
                                   cap, kappa)
    if not ok4:
        return 1, Rg, c4
    moved = False
    for i in range(3):
        if k1[i] != 0.0 or k2[i] != 0.0 or k3[i] != 0.0 or k4[i] != 0.0:
            moved = True
    if not moved:
        # stationary field: keep the reference bit-identical
        return 0, Rg, c1
    combined = (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return 0, _orthonormalize(Rg @ _exp_map(h * combined)), c1


@njit(cache=True)
def simulate_kernel(R0, w0, Rd, J, Jinv, kp, kd, ab, ac, theta_c, cos_theta_c,
                    delta, zeta, eta, eps, gamma_d, cap, kappa, c_gamma,
                    h, n_steps, n_ts, out):
    """Fixed-step closed loop on a shared grid.

    The event indicator refreshes at every multiple of ``n_ts`` steps,
    before that instant's row is logged and before the step is taken; it is
    frozen in between.  Plant and reference both advance from the values at
    the step start.  Returns ``(status, fail_step, cone_value)`` where
    status 1 flags a reference boundary escape.
    """
    R = R0.copy()
    w = w0.copy()
    Rg = R0.copy()
    indicator = False
    for i in range(n_steps + 1):
        t = i * h
        if i % n_ts == 0:
            gam = _gamma_aggregate(Rg, ab, ac, theta_c, kp, gamma_d, cap)
            v_now = _lyapunov(R, w, Rg, J, kp)
            indicator = gam - c_gamma * v_now >= 0.0

        tau = _pd_torque(R, w, Rg, kp, kd)
        v_now = _lyapunov(R, w, Rg, J, kp)
        gam_g = _gamma_g(Rg, ab, ac, theta_c, kp)
        gam = gamma_d
        if gam_g < gam:
            gam = gam_g
        if cap < gam:
            gam = cap
        Rab = R @ ab
        c_point = ac[0] * Rab[0] + ac[1] * Rab[1] + ac[2] * Rab[2]

        out[i, 0] = t
        for r in range(3):
            for cc in range(3):
                out[i, 1 + 3 * r + cc] = R[r, cc]
                out[i, 13 + 3 * r + cc] = Rg[r, cc]
        out[i, 10] = w[0]
        out[i, 11] = w[1]
        out[i, 12] = w[2]
        out[i, 22] = v_now
        out[i, 23] = gam
        out[i, 24] = gamma_d
        out[i, 25] = gam_g
        out[i, 26] = 1.0 if indicator else 0.0
        out[i, 27] = tau[0]
        out[i, 28] = tau[1]
        out[i, 29] = tau[2]
        out[i, 30] = np.sqrt(tau[0] * tau[0] + tau[1] * tau[1] + tau[2] * tau[2])
        out[i, 31] = c_point
        out[i, 32] = _phi_pair(R, Rd)
        out[i, 33] = _phi_pair(Rg, Rd)

        if i < n_steps:
            R_new, w_new = _plant_rk4(R, w, Rg, J, Jinv, kp, kd, h)
            if indicator:
                status, Rg_new, cone = _governor_rk4(
                    R, w, Rg, Rd, J, kp, kd, ab, ac, theta_c, delta, zeta, eta,
                    eps, gamma_d, cap, kappa, h)
                if status != 0:
                    return 1, i, cone
            else:
                Rg_new = Rg
            R = R_new
            w = w_new
            Rg = Rg_new
    return 0, n_steps, 1.0
