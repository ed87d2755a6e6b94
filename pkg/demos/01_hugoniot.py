"""
End states and shock speed
==========================

A 2-shock for the outflow problem joins a far-field state (rho_+, u_+) on the
right to the state (rho_-, u_-) selected by the boundary velocity u_- on the
left.  This script solves for rho_- and sigma, checks the jump conditions and
the Lax condition, and watches the weak-shock limit.
"""

import numpy as np

from shockline.hugoniot import (
    EndState,
    GasParams,
    classify_state,
    lambda2,
    lax_check,
    rh_residual,
    solve_hugoniot,
)

gas = GasParams(gamma=2.0)
right = EndState(rho=1.0, u=-1.0)

# The far field must be subsonic (or exactly sonic) for a 2-shock to sit in the domain.
print("right state:", classify_state(right, gas).value, " lambda_2 =", lambda2(right, gas))
for rho, u in [(0.5, -1.0), (0.5, -2.0)]:
    print(f"  ({rho}, {u}) ->", classify_state(EndState(rho, u), gas).value)

# Boundary velocity u_- = -0.9, i.e. shock strength delta = 0.1.
conn = solve_hugoniot(right, -0.9, gas)
print(f"\nrho_- = {conn.left.rho:.16f}\nsigma = {conn.sigma:.16f}")
print("RH residuals:", rh_residual(conn))
ok, (m_right, m_left) = lax_check(conn)
print(f"Lax: {ok}, margins sigma - l2(U+) = {m_right:.6f}, l2(U-) - sigma = {m_left:.6f}")

# As delta -> 0 the shock degenerates into a characteristic: sigma -> lambda_2(U+),
# with sigma - lambda_2(U+) shrinking linearly in delta.
print("\n   delta        rho_- - 1       sigma - l2(U+)")
for k in range(1, 7):
    d = 10.0**-k
    c = solve_hugoniot(right, right.u + d, gas)
    print(f"{d:8.0e}  {c.left.rho - 1:14.6e}  {c.sigma - lambda2(right, gas):14.6e}")

# Other gases work the same way.
for gamma in (1.4, 5 / 3):
    c = solve_hugoniot(right, -0.9, GasParams(gamma))
    print(f"\ngamma={gamma:.4f}: rho_- = {c.left.rho:.10f}, sigma = {c.sigma:.10f}")
print("\nmax |residual| over a sweep:",
      max(np.max(np.abs(rh_residual(solve_hugoniot(right, right.u + d, gas))))
          for d in np.linspace(0.01, 0.3, 30)))
