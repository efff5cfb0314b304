"""Capacitance of the thin shell next to the electrode.

The charge stored between r = R - gamma eps^2 and R, divided by the
potential drop across that shell, has an eps -> 0 limit depending on
gamma.  A thin shell behaves like a plain gap (C1 = R^{N-1} g / gamma);
a thick one saturates at C2 = C^b q / (2N).  The exact limit lies a
little above the series combination of the two.
"""

from ccpb import asymptotics, capacitance_numeric, p0, solve_continuation

params = p0()
print(f"{'gamma':>7} {'limit':>9} {'series':>9} {'C1':>9} {'C2':>6}")
for gamma in (0.01, 0.1, 0.5, 1, 2, 4, 8, 32):
    rep = asymptotics.capacitance_limit(params, gamma)
    print(f"{gamma:7.2f} {rep.exact:9.5f} {rep.combination:9.5f} {rep.C1:9.3f} {rep.C2:6.3f}")

# The numerics approach the limit quickly.
sols = solve_continuation(params, [0.5 * 2.0 ** (-k / 2) for k in range(23)])
print("\nnumerical capacitance at gamma = 4")
for sol in sols[6::4]:
    print(f"  eps={sol.eps:9.3e}  C={capacitance_numeric(sol, 1 - 4 * sol.eps**2):.5f}")

# A larger ball stores more charge on its (flatter) surface.
for R in (0.5, 1.0, 2.0, 4.0):
    print(f"R={R:3.1f}  limit at gamma=1: {asymptotics.capacitance_limit(p0(R=R), 1.0).exact:.5f}")
