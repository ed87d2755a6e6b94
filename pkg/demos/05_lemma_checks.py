"""
Numerical checks of the profile lemmas
======================================

* the sonic gap |sigma - u~ - sqrt(p'(rho~))| is O(delta);
* in the variable y = (u_- - u~)/delta the profile equation is, up to
  O(delta^2), the logistic law dy/dx = (gamma+1) rho_+ delta/2 * y(1-y);
* the weighted Poincare inequality on an interval, with equality for f(y) = y.
"""

import numpy as np

from shockline.diagnostics import fit_loglog_slope, jacobian_lemma_check, poincare_check
from shockline.experiments import poincare_suite
from shockline.hugoniot import EndState, GasParams, dpressure, solve_hugoniot
from shockline.profile import integrate_profile

deltas = [0.2, 0.1, 0.05, 0.025]
gap, jac = [], []
for d in deltas:
    p = integrate_profile(solve_hugoniot(EndState(1.0, -1.0), -1.0 + d, GasParams(2.0)))
    c = p.conn
    gap.append(np.max(np.abs(c.sigma - p.u_tab - np.sqrt(dpressure(p.rho_tab, c.gas)))))
    jac.append(jacobian_lemma_check(p))
    print(f"delta={d:<6} sonic gap {gap[-1]:.4e}   logistic deviation {jac[-1]:.4e}"
          f"   deviation/delta^2 {jac[-1] / d**2:.4f}")
print(f"slopes: sonic gap {fit_loglog_slope(deltas, gap):.3f}, logistic {fit_loglog_slope(deltas, jac):.3f}")

y = np.linspace(0, 1, 2001)
r = poincare_check(y, y, np.ones_like(y))
print(f"\nPoincare, f(y) = y: lhs {r.lhs:.15f}, rhs {r.rhs:.15f}")
print("random trials:", poincare_suite(1000, 2001, seed=0))
