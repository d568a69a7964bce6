# Bound cascade at a few corner depths, printed end to end.
#
# choose_parameters picks (xi, m, eta) for a depth L = |ln r|, decay_F turns
# that into a bound on the deviation integral, final_G_bound folds in the
# angle ODE.  Depths are given directly as L so radii below float range
# (r = e^-10000) cost nothing.

import numpy as np

from cusplab.bounds import (
    BoundParams,
    choose_parameters,
    decay_F,
    default_grid,
    dominance_margin,
    final_G_bound,
    kappa_zero,
    verify_est_m,
)

C = 1.0
C0 = 1.0 / np.sqrt(2.0 * np.pi)
CSTAR = 1.0
DELTA = 0.5

params = BoundParams(C=C, c0=C0, Cstar=CSTAR, kappa=kappa_zero())

print("depth L = |ln r|, chosen parameters and certified bounds")
print("  L          xi         m    eta          F bound      G bound")
for L in (10.0, 100.0, 1000.0, 10000.0, 100000.0):
    choice = choose_parameters(params, L=L)
    f = decay_F(params, L=L)
    g = final_G_bound(params, L=L, delta=DELTA)
    print(f"  {L:<10.4g} {choice.xi:<10.5g} {choice.m:<4d} {choice.eta:<12.5g} "
          f"{f:<12.5g} {g.total:.5g}")

print()
print("both bounds decay like a power of 1/ln r: deeper corners are easier,")
print("not harder, once the depth eats the constants.")

# the iterate comparison behind the m choice: margin must stay >= 0
grid = default_grid()
print()
print("iterate dominance margin on the default grid")
# m = 3 is the tight spot on this lattice; everything else sits at the cap
for m in (1, 3, 4, 8, 16, 32):
    print(f"  m = {m:<3d} margin = {dominance_margin(params, m, grid):.6f}")

# factorial-vs-power bookkeeping used inside choose_parameters
print()
print("spot check: m! >= (xi e)^m whenever m >= e * xi")
for xi in (1.0, 5.0, 20.0, 50.0):
    m = int(np.ceil(np.e * xi))
    ok = verify_est_m(xi, m)
    print(f"  xi = {xi:<5g} m = {m:<4d} holds: {ok}")
