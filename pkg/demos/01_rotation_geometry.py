"""Tour of the SO(3) geometry kernel: hat/vee, exponential and logarithm,
error function, geodesics.

Run:  python3 demos/01_rotation_geometry.py
"""

import numpy as np

from petgov import so3

np.set_printoptions(precision=6, suppress=True)

print("== hat / vee ==")
v = np.array([0.3, -0.2, 0.5])
H = so3.hat(v)
print("hat(v) =\n", H)
print("hat(v) @ y equals v x y:", np.allclose(H @ [1.0, 2.0, 3.0], np.cross(v, [1, 2, 3])))
print("vee(hat(v)) =", so3.vee(H))

print("\n== exponential map (Rodrigues) ==")
quarter_turn = so3.exp_map([0.0, np.pi / 2, 0.0])
print("90 degrees about y:\n", quarter_turn)
print("orthonormality residual:", so3.rotation_residual(quarter_turn))

print("\n== logarithm, including the angle-pi branch ==")
R = so3.exp_map([0.3, -0.2, 0.1])
print("log(exp(v)) =", so3.log_map(R), " (v = [0.3, -0.2, 0.1])")
half_turn = np.diag([1.0, -1.0, -1.0])
print("log of a half turn about x:", so3.log_map(half_turn))

print("\n== attitude error function ==")
for angle in [0.0, np.pi / 2, np.pi]:
    R_e = so3.exp_map([angle, 0.0, 0.0])
    print(f"phi at error angle {angle:.4f} rad: {so3.phi(R_e):.6f}")

print("\n== geodesic interpolation ==")
R_a = np.eye(3)
R_b = so3.exp_map([0.0, np.pi / 2, 0.0])
for s in [0.0, 0.25, 0.5, 1.0]:
    R_s = so3.geodesic(R_a, R_b, s)
    angle = np.linalg.norm(so3.log_map(R_a.T @ R_s))
    print(f"s = {s:4.2f}: rotation angle from start = {angle:.6f} rad")
print("angle grows linearly in s, as it should along a geodesic")
