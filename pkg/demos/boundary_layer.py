"""Watch the boundary layer form as eps shrinks.

For A < B the potential is flat in the bulk and plunges near r = R.  The
drop at the wall grows like (2/q) log(1/eps), and what is left over
settles on a constant fixed by the model parameters.  This script solves
the reference problem down to eps = 2^-12 and prints that leftover next
to its predicted limit, then compares the numerical layer with the
closed-form layer profile.
"""

import math

import numpy as np

from ccpb import asymptotics, evaluate_solution, p0, solve_continuation

params = p0()
ladder = [0.5 * 2.0 ** (-k / 2) for k in range(23)]
solutions = solve_continuation(params, ladder)

expansion = asymptotics.boundary_expansion(params)
print(f"predicted U(R) = {expansion.leading:g} log(1/eps) + {expansion.second:.5f}")
print(f"{'eps':>10} {'nodes':>6} {'newton':>6} {'U(R)':>10} {'remainder':>10}")
for sol in solutions[::2]:
    rest = sol.UR - expansion.leading * math.log(1 / sol.eps)
    print(f"{sol.eps:10.3e} {sol.mesh.size:6d} {sol.iterations:6d} {sol.UR:10.4f} {rest:10.5f}")

# Inside the layer the numerical profile tracks the closed form.
finest = solutions[-1]
eps = finest.eps
print(f"\nlayer at eps = {eps:.3e}: distance from R in units of eps^2")
for gamma in (0.0, 1.0, 4.0, 16.0, 64.0):
    r = 1 - gamma * eps**2
    U, dU, rho = evaluate_solution(finest, r)
    print(
        f"  gamma={gamma:5.1f}  U={U:9.4f}  predicted={asymptotics.layer_profile(finest.params, r):9.4f}"
        f"  eps^2 U'={eps**2 * dU:8.4f}"
    )

# The non-local integrals approach their limits at the same time.
limits = asymptotics.coefficient_limits(params)
print(f"\nI_p = {finest.I_p:.5f} -> {limits.I_p},  I_q = {finest.I_q:.5f} -> {limits.I_q}")
print(f"charge in the layer: {np.dot(finest.mesh.w_plain, finest.rho):.5f}")
