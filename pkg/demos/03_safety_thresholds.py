"""The two constraint thresholds behind the reference governor.

The torque threshold gamma_d is the largest energy level whose whole
sublevel set keeps the PD torque within saturation; it is found offline by
bisection on a scalar worst-case reduction and then stress-tested by a
Monte-Carlo oracle.  The pointing threshold gamma_g shrinks to zero as the
reference's own body axis approaches the forbidden cone.

Run:  python3 demos/03_safety_thresholds.py
"""

import numpy as np

import petgov
from petgov import governor, so3

cfg = petgov.load_paper_scenario()

print("== torque-saturation threshold ==")
gamma_d = governor.gamma_d_offline(cfg.inertia, cfg.gains, cfg.spec.tau_max)
print(f"gamma_d = {gamma_d:.9f}  (tau_max = {cfg.spec.tau_max} N*m)")

oracle = governor.gamma_d_oracle(
    gamma_d, cfg.inertia, cfg.gains, cfg.spec.tau_max, n_samples=100_000, seed=0
)
print(
    f"oracle: max ||tau|| over {oracle.n_samples} random states with "
    f"V <= gamma_d: {oracle.max_torque_norm:.6f}  (sound: {oracle.sound})"
)
probe = governor.gamma_d_tightness_probe(gamma_d, cfg.inertia, cfg.gains, inflation=1.2)
print(
    f"tightness: inflating the level by 20% already commands "
    f"{probe:.4f} N*m > {cfg.spec.tau_max}"
)

print("\n== pointing threshold along a path toward the cone ==")
# rotate the reference so its body axis sweeps from the safe start straight
# toward the forbidden direction
axis = np.cross(cfg.spec.a_b, -cfg.spec.a_c)
axis /= np.linalg.norm(axis)
print(f"{'cone value c':>14} {'angle to axis [deg]':>20} {'gamma_g':>10}")
for alpha in np.linspace(0.0, 1.0, 11):
    r_g = so3.exp_map(alpha * 2.3 * axis)
    c = float(cfg.spec.a_c @ (r_g @ cfg.spec.a_b))
    gg = governor.gamma_g(r_g, cfg.spec, cfg.gains)
    print(f"{c:14.4f} {np.degrees(np.arccos(c)):20.2f} {gg:10.6f}")
print("gamma_g hits zero once the reference itself reaches the cone boundary")

print("\n== aggregate ==")
params = governor.GovernorParams(cfg.kappa, cfg.c_gamma, cfg.T_s, cfg.eps_gamma, gamma_d)
value = governor.gamma_aggregate(np.eye(3), params, cfg.spec, cfg.gains)
print(
    f"Gamma(identity) = min(gamma_d = {gamma_d:.4f}, "
    f"gamma_g = {governor.gamma_g(np.eye(3), cfg.spec, cfg.gains):.4f}, "
    f"cap = {cfg.gains.k_p * (2 - cfg.eps_gamma):.2f}) = {value:.4f}"
)
