"""Inner-loop PD attitude stabilization to a held reference.

Shows the energy function decaying monotonically (its derivative is
-k_d ||omega||^2 while the reference is held) and the state converging to
the reference from a generic start.

Run:  python3 demos/02_inner_loop.py
"""

import numpy as np

from petgov import plant, so3
from petgov.plant import BodyState, Gains, Inertia

inertia = Inertia.from_diagonal([1.0, 2.0, 3.0])
gains = Gains(k_p=5.0, k_d=1.0)
r_g = so3.exp_map([0.5, -0.4, 0.3])
state = BodyState(np.eye(3), [0.2, 0.3, 0.4])

h = 1e-3
print(f"tracking a fixed reference, h = {h} s")
print(f"{'t [s]':>6} {'V':>12} {'phi(R,Rg)':>12} {'||omega||':>12} {'||tau||':>10}")
v_prev = plant.lyapunov_v(state, r_g, inertia, gains)
monotone = True
for i in range(30_001):
    if i % 5000 == 0:
        v = plant.lyapunov_v(state, r_g, inertia, gains)
        tau = plant.pd_torque(state, r_g, gains)
        print(
            f"{i * h:6.1f} {v:12.3e} {so3.phi(state.rotation.T @ r_g):12.3e} "
            f"{np.linalg.norm(state.omega):12.3e} {np.linalg.norm(tau):10.4f}"
        )
    state = plant.rk4_step(state, r_g, inertia, gains, h)
    v = plant.lyapunov_v(state, r_g, inertia, gains)
    monotone &= v <= v_prev + 1e-9
    v_prev = v

print(f"\nenergy stayed non-increasing at every step: {monotone}")
print("predicted derivative at the final state:",
      plant.lyapunov_vdot(state, r_g, np.zeros(3), gains))
