"""Viscous 2-shock profile: integration, tabulation, tails and the weight ``a``.

Only the velocity is integrated.  The density follows from the first integral
``rho (u - sigma) = rho_+ (u_+ - sigma)``, and the profile ODE becomes the
scalar autonomous equation ``u' = f(u)`` with

    f(u) = rho_+ (u - u_+)(u_+ - sigma) + p(rho(u)) - p_+ .

Internally the velocity is carried in the logistic coordinate
``z = log((u - u_+) / (u_- - u))``, which is nearly linear in ``xi`` and keeps
the distances to both end states at full relative precision in the tails.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import expit

from .hugoniot import ShockConnection

__all__ = [
    "ProfileError",
    "ShockProfile",
    "ProfileValues",
    "TailReport",
    "Weight",
    "density_from_velocity",
    "profile_rhs",
    "integrate_profile",
    "evaluate_profile",
    "verify_tails",
    "weight_at",
    "ode_residual",
    "export_profile_csv",
]

TAIL_EPS = 1e-8


class ProfileError(RuntimeError):
    pass


def density_from_velocity(u_val, conn: ShockConnection):
    """Density on the profile from the first integral."""
    u_val = np.asarray(u_val, dtype=float)
    s = conn.sigma
    if np.any(u_val >= s):
        raise ValueError("profile velocity must stay below the shock speed")
    out = conn.right.rho * (conn.right.u - s) / (u_val - s)
    return out if out.ndim else float(out)


def _gap_plus(w, conn: ShockConnection):
    """f as a function of w = u - u_+ >= 0, accurate for small w."""
    rp, up, s, g = conn.right.rho, conn.right.u, conn.sigma, conn.gas.gamma
    ratio = w / (s - up - w)  # (rho - rho_+) / rho_+
    return rp * w * (up - s) + rp**g * np.expm1(g * np.log1p(ratio))


def _gap_minus(v, conn: ShockConnection):
    """f as a function of v = u_- - u >= 0, accurate for small v."""
    rm, um, s, g = conn.left.rho, conn.left.u, conn.sigma, conn.gas.gamma
    ratio = -v / (s - um + v)  # (rho - rho_-) / rho_-
    return rm * v * (s - um) + rm**g * np.expm1(g * np.log1p(ratio))


def profile_rhs(u_val, conn: ShockConnection, branch: str = "+"):
    """Slope ``u'`` of the profile at velocity ``u_val``.

    ``branch`` selects the end state used in the integrated momentum balance;
    both agree by the Rankine-Hugoniot conditions.
    """
    u_val = np.asarray(u_val, dtype=float)
    up, um = conn.right.u, conn.left.u
    slack = 1e-14 * max(1.0, abs(up), abs(um))
    if np.any(u_val < up - slack) or np.any(u_val > um + slack):
        raise ValueError("profile velocity outside [u_+, u_-]")
    if branch == "+":
        out = _gap_plus(u_val - up, conn)
    elif branch == "-":
        out = _gap_minus(um - u_val, conn)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    return out if out.ndim else float(out)


def _rhs_from_gaps(w, v, conn):
    # pick the branch measured from the nearer end state
    return np.where(w <= v, _gap_plus(w, conn), _gap_minus(v, conn))


def _drhs_du(u, rho, conn):
    g = conn.gas.gamma
    return conn.right.rho * (conn.right.u - conn.sigma) + g * rho ** (g - 1.0) * rho / (conn.sigma - u)


class ProfileValues(NamedTuple):
    rho: np.ndarray
    u: np.ndarray
    drho: np.ndarray
    du: np.ndarray
    ddu: np.ndarray


class TailReport(NamedTuple):
    rate_left: float
    rate_right: float
    amp_left: float
    amp_right: float
    r2_left: float
    r2_right: float
    second_derivative_ratio: float


@dataclass(frozen=True, eq=False)
class ShockProfile:
    conn: ShockConnection
    xi_grid: np.ndarray
    z_tab: np.ndarray
    dz_tab: np.ndarray
    w_tab: np.ndarray  # u - u_+
    v_tab: np.ndarray  # u_- - u
    u_tab: np.ndarray
    rho_tab: np.ndarray
    du_tab: np.ndarray
    drho_tab: np.ndarray
    ddu_tab: np.ndarray
    tail_eps: float
    tail: TailReport = field(repr=False)

    @property
    def delta(self) -> float:
        return self.conn.delta

    @property
    def tail_rate_left(self) -> float:
        return self.tail.rate_left

    @property
    def tail_rate_right(self) -> float:
        return self.tail.rate_right

    @property
    def dxi(self) -> float:
        return float(self.xi_grid[1] - self.xi_grid[0])

    def __call__(self, xi) -> ProfileValues:
        return evaluate_profile(self, xi)

    def gaps(self, xi) -> tuple[np.ndarray, np.ndarray]:
        """``(u - u_+, u_- - u)`` at ``xi``, each to full relative precision."""
        return _eval_gaps(self, np.asarray(xi, dtype=float))


def _tail_fit(xi, gap):
    n = len(xi)
    m = max(20, n // 4)
    x, yv = xi[-m:], np.log(gap[-m:])
    slope, icpt = np.polyfit(x, yv, 1)
    resid = yv - (slope * x + icpt)
    ss_tot = np.sum((yv - yv.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 0.0
    return -slope, math.exp(icpt), r2


def integrate_profile(
    conn: ShockConnection,
    tail_eps: float = TAIL_EPS,
    resolution: float = 2e-3,
    rtol: float = 1e-13,
) -> ShockProfile:
    """Tabulate the profile on a uniform grid ``xi_k = k * resolution / delta``.

    The table stops at the first node on each side where the distance to the
    end state drops to ``tail_eps * delta / 2``; beyond it evaluation uses an
    exponential tail with the rate fitted on the last quarter of nodes.
    """
    delta = conn.delta
    up, um, s = conn.right.u, conn.left.u, conn.sigma
    rho0 = 0.5 * (conn.left.rho + conn.right.rho)
    u0 = s + conn.right.rho * (up - s) / rho0
    z0 = math.log((u0 - up) / (um - u0))

    def dzdxi(_, z):
        w = delta * expit(z)
        v = delta * expit(-z)
        return _rhs_from_gaps(w, v, conn) * delta / (w * v)

    dxi = resolution / delta
    stop = 0.5 * tail_eps
    # w/delta = expit(z); stop where expit(z) (right) or expit(-z) (left) = stop
    z_stop = math.log(stop / (1.0 - stop))
    slope0 = float(dzdxi(0.0, np.array([z0]))[0])
    if not slope0 < 0.0:
        raise ProfileError(f"profile slope at the center is not negative: {slope0}")

    def side(direction: float, z_target: float):
        def hit(_, z):
            return z[0] - z_target

        hit.terminal = True
        span = 100.0 * abs((z_target - z0) / slope0) + 10.0 * dxi
        sol = solve_ivp(
            dzdxi, (0.0, direction * span), [z0], method="DOP853",
            rtol=rtol, atol=1e-14, events=hit, dense_output=True,
        )
        if sol.status != 1:
            raise ProfileError(f"profile integration failed ({sol.message}); z reached {sol.y[0, -1]}")
        xi_end = float(sol.t_events[0][0])
        nodes = int(math.floor(abs(xi_end) / dxi))
        xi = direction * dxi * np.arange(nodes + 1)
        return xi, sol.sol(xi)[0]

    xi_r, z_r = side(+1.0, z_stop)
    xi_l, z_l = side(-1.0, -z_stop)
    xi = np.concatenate([xi_l[:0:-1], xi_r])
    z = np.concatenate([z_l[:0:-1], z_r])
    z[len(xi_l) - 1] = z0

    w = delta * expit(z)
    v = delta * expit(-z)
    u = np.where(w <= v, up + w, um - v)
    rho = density_from_velocity(u, conn)
    du = _rhs_from_gaps(w, v, conn)
    dz = du * delta / (w * v)
    drho = rho * du / (s - u)
    ddu = _drhs_du(u, rho, conn) * du

    if np.any(np.diff(z) >= 0.0) or np.any(du >= 0.0):
        raise ProfileError("profile table is not strictly monotone")

    n0 = len(xi_l) - 1
    rate_r, amp_r, r2_r = _tail_fit(xi[n0:], w[n0:])
    rate_l, amp_l, r2_l = _tail_fit(-xi[: n0 + 1][::-1], v[: n0 + 1][::-1])
    ratio = float(np.max(np.abs(ddu)) / (delta * np.max(np.abs(du))))
    tail = TailReport(rate_l, rate_r, amp_l, amp_r, r2_l, r2_r, ratio)

    prof = ShockProfile(
        conn=conn, xi_grid=xi, z_tab=z, dz_tab=dz, w_tab=w, v_tab=v, u_tab=u,
        rho_tab=rho, du_tab=du, drho_tab=drho, ddu_tab=ddu, tail_eps=tail_eps, tail=tail,
    )
    _check_hermite_monotone(prof)
    return prof


def _check_hermite_monotone(prof: ShockProfile) -> None:
    # Fritsch-Carlson: a cubic Hermite piece with slopes m0, m1 through secant d
    # is monotone when alpha = m0/d, beta = m1/d satisfy alpha^2 + beta^2 <= 9.
    h = prof.dxi
    d = np.diff(prof.z_tab) / h
    alpha = prof.dz_tab[:-1] / d
    beta = prof.dz_tab[1:] / d
    if np.any(alpha < 0) or np.any(beta < 0) or np.any(alpha**2 + beta**2 > 9.0):
        raise ProfileError("table too coarse for a shape-preserving Hermite interpolant")


def _eval_z(prof: ShockProfile, xi: np.ndarray) -> np.ndarray:
    """Cubic Hermite interpolation of z inside the table; NaN outside."""
    x0, h = prof.xi_grid[0], prof.dxi
    n = len(prof.xi_grid)
    s = (xi - x0) / h
    k = np.clip(np.floor(s).astype(np.int64), 0, n - 2)
    t = s - k
    z0, z1 = prof.z_tab[k], prof.z_tab[k + 1]
    m0, m1 = prof.dz_tab[k] * h, prof.dz_tab[k + 1] * h
    t2 = t * t
    t3 = t2 * t
    return (2 * t3 - 3 * t2 + 1) * z0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * z1 + (t3 - t2) * m1


def _eval_gaps(prof: ShockProfile, xi: np.ndarray):
    delta = prof.delta
    xi_lo, xi_hi = prof.xi_grid[0], prof.xi_grid[-1]
    z = _eval_z(prof, xi)
    w = delta * expit(z)
    v = delta * expit(-z)
    right = xi > xi_hi
    left = xi < xi_lo
    if np.any(right):
        wr = prof.w_tab[-1] * np.exp(-prof.tail.rate_right * (xi[right] - xi_hi))
        w[right] = wr
        v[right] = delta - wr
    if np.any(left):
        vl = prof.v_tab[0] * np.exp(prof.tail.rate_left * (xi[left] - xi_lo))
        v[left] = vl
        w[left] = delta - vl
    return w, v


def evaluate_profile(prof: ShockProfile, xi) -> ProfileValues:
    """``(rho, u, rho', u', u'')`` at arbitrary ``xi``; total over the real line."""
    out, _ = _evaluate_with_gap(prof, xi)
    return out


def _evaluate_with_gap(prof: ShockProfile, xi):
    # also hands back w = u - u_+ so callers can form the weight without cancellation
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    conn = prof.conn
    up, um, s = conn.right.u, conn.left.u, conn.sigma
    w, v = _eval_gaps(prof, xi_arr)
    u = np.where(w <= v, up + w, um - v)
    rho = density_from_velocity(u, conn)
    du = _rhs_from_gaps(w, v, conn)
    ddu = _drhs_du(u, rho, conn) * du

    right = xi_arr > prof.xi_grid[-1]
    left = xi_arr < prof.xi_grid[0]
    # tails: derivatives of the exponential model itself
    if np.any(right):
        r = prof.tail.rate_right
        du[right] = -r * w[right]
        ddu[right] = r * r * w[right]
    if np.any(left):
        r = prof.tail.rate_left
        du[left] = -r * v[left]
        ddu[left] = -r * r * v[left]
    drho = rho * du / (s - u)
    out = ProfileValues(rho, u, drho, du, ddu)
    if np.ndim(xi) == 0:
        return ProfileValues(*(float(a[0]) for a in out)), float(w[0])
    return out, w


def verify_tails(prof: ShockProfile, min_r2: float = 0.99) -> TailReport:
    t = prof.tail
    if not (t.rate_left > 0 and t.rate_right > 0):
        raise ProfileError(f"non-positive tail rate: {t.rate_left}, {t.rate_right}")
    if t.r2_left < min_r2 or t.r2_right < min_r2:
        raise ProfileError(f"tail is not exponential: R^2 = {t.r2_left:.4f}, {t.r2_right:.4f}")
    return t


def ode_residual(prof: ShockProfile) -> tuple[np.ndarray, np.ndarray]:
    """Residuals of both profile equations at the table nodes, from the tabulated derivatives."""
    s = prof.conn.sigma
    g = prof.conn.gas
    rho, u, drho, du, ddu = prof.rho_tab, prof.u_tab, prof.drho_tab, prof.du_tab, prof.ddu_tab
    mass = -s * drho + (drho * u + rho * du)
    dp = g.gamma * rho ** (g.gamma - 1.0) * drho
    mom = -s * (drho * u + rho * du) + (drho * u * u + 2.0 * rho * u * du + dp) - ddu
    return mass, mom


@dataclass(frozen=True, eq=False)
class Weight:
    """``a(xi) = 1 + sqrt(delta) + (u_+ - u(xi)) / sqrt(delta)``."""

    profile: ShockProfile

    @property
    def delta(self) -> float:
        return self.profile.delta

    def __call__(self, xi):
        return weight_at(self, xi)


def weight_at(wt: Weight, xi):
    sd = math.sqrt(wt.delta)
    vals, w = _evaluate_with_gap(wt.profile, np.atleast_1d(xi))
    a = 1.0 + sd - w / sd
    da = -vals.du / sd
    if np.ndim(xi) == 0:
        return float(a[0]), float(da[0])
    return a, da


def export_profile_csv(prof: ShockProfile, path) -> None:
    wt = Weight(prof)
    a, da = weight_at(wt, prof.xi_grid)
    cols = [prof.xi_grid, prof.rho_tab, prof.u_tab, prof.drho_tab, prof.du_tab, prof.ddu_tab, a, da]
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["xi", "rho", "u", "drho", "du", "ddu", "a", "da"])
        for row in zip(*cols):
            wr.writerow([f"{x:.17g}" for x in row])
