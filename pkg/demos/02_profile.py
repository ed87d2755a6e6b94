"""
The viscous shock profile and the weight
========================================

The traveling wave (rho~, u~)(x - sigma t) solves a scalar ODE for u~ once the
mass equation is integrated.  The profile is tabulated on a uniform grid and
continued by exponential tails; derivatives come from the ODE itself.
"""

import math
import tempfile
from pathlib import Path

import numpy as np

from shockline.hugoniot import EndState, GasParams, solve_hugoniot
from shockline.profile import Weight, export_profile_csv, integrate_profile, ode_residual, verify_tails

gas = GasParams(2.0)
conn = solve_hugoniot(EndState(1.0, -1.0), -0.9, gas)
prof = integrate_profile(conn)

print(f"table: {len(prof.xi_grid)} nodes on [{prof.xi_grid[0]:.1f}, {prof.xi_grid[-1]:.1f}], "
      f"spacing {prof.dxi:.3f}")
mass, mom = ode_residual(prof)
print(f"ODE residuals at the nodes: mass {np.abs(mass).max():.1e}, momentum {np.abs(mom).max():.1e}")

# Both tails are exponential with rates proportional to delta.
t = verify_tails(prof)
print(f"tail rates: left {t.rate_left:.5f}, right {t.rate_right:.5f} (R^2 {min(t.r2_left, t.r2_right):.15f})")

# Evaluate anywhere on the line; far from the table the tails take over.
for xi in (-200.0, -20.0, 0.0, 20.0, 200.0):
    v = prof(xi)
    print(f"xi={xi:7.1f}: rho~={v.rho:.10f} u~={v.u:+.10f} u~'={v.du:+.3e}")

# How the width scales: halving delta doubles the profile width.
for d in (0.2, 0.1, 0.05):
    p = integrate_profile(solve_hugoniot(EndState(1.0, -1.0), -1.0 + d, gas))
    print(f"delta={d:<5} extent {p.xi_grid[-1] - p.xi_grid[0]:7.1f}  rates "
          f"{p.tail_rate_left:.4f}/{p.tail_rate_right:.4f}")

# The weight a = 1 + sqrt(delta) - (u~ - u_+)/sqrt(delta) climbs from 1 to 1 + sqrt(delta).
a = Weight(prof)
xi = np.linspace(-100, 100, 5)
vals, slopes = a(xi)
print("\nweight:", np.round(vals, 6), " limits 1 and", round(1 + math.sqrt(prof.delta), 6))
print("a' > 0 everywhere:", bool(np.all(slopes > 0)))

out = Path(tempfile.mkdtemp()) / "profile.csv"
export_profile_csv(prof, out)
print("\nprofile table written to", out)
