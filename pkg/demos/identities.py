"""Integral identities as a check on the discretisation.

Multiplying the equation by r^N U' and integrating gives an identity that
holds exactly for the continuous solution.  On the mesh it holds up to
discretisation error, which should fall like h^2 under bisection.  The
a priori bounds (monotonicity, sign of the net charge, bounds on the
non-local integrals) hold on every mesh.
"""

import itertools

from ccpb import build_mesh, inequality_suite, p0, solve_continuation, validate_params
from ccpb.diagnostics import pohozaev_refinement

params = p0(0.05)
residuals, orders = pohozaev_refinement(params, build_mesh(params), levels=4)
print("relative Pohozaev residual under bisection")
for k, res in enumerate(residuals):
    order = f"  order {orders[k - 1]:.2f}" if k else ""
    print(f"  level {k}: {res:.3e}{order}")

print("\nbounds on a grid of concentrations and valences (eps = 0.05)")
for ratio, p, q in itertools.product([0.5, 2.0], [0.5, 2.0], [0.5, 2.0]):
    prm = validate_params(dict(A=ratio, B=1.0, p=p, q=q, eps=0.2))
    sol = solve_continuation(prm, [0.2, 0.1, 0.05])[-1]
    rep = inequality_suite(sol)
    held = sum(c.passed for c in rep.checks)
    print(f"  A/B={ratio:3.1f} p={p:3.1f} q={q:3.1f}: {held}/{len(rep.checks)} bounds hold")
