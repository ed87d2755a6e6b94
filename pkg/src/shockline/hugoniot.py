"""Rankine-Hugoniot connections for the 2-shock family of the barotropic gas.

The pressure law is ``p(rho) = K rho**gamma`` with ``K = mu = 1``.  A
connection joins a right (far-field) state ``(rho_+, u_+)`` to the left
state ``(rho_-, u_-)`` imposed by the outflow boundary velocity ``u_-``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum

__all__ = [
    "GasParams",
    "EndState",
    "ShockConnection",
    "Region",
    "HugoniotError",
    "StrongShockWarning",
    "pressure",
    "dpressure",
    "sound_speed",
    "lambda2",
    "classify_state",
    "rh_residual",
    "solve_hugoniot",
    "lax_check",
]

TOL_SONIC = 1e-10
DELTA_WARN = 0.5


class HugoniotError(ValueError):
    """No admissible 2-shock exists for the requested data."""


class StrongShockWarning(UserWarning):
    pass


@dataclass(frozen=True)
class GasParams:
    gamma: float = 2.0
    K: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        if self.K != 1.0 or self.mu != 1.0:
            raise ValueError("only the normalization K = mu = 1 is supported")


@dataclass(frozen=True)
class EndState:
    rho: float
    u: float

    def __post_init__(self):
        if not self.rho > 0.0:
            raise ValueError(f"density must be positive, got {self.rho}")


@dataclass(frozen=True)
class ShockConnection:
    right: EndState
    left: EndState
    sigma: float
    gas: GasParams

    @property
    def delta(self) -> float:
        return abs(self.left.u - self.right.u)

    @property
    def mass_flux(self) -> float:
        """Flux ``rho (u - sigma)`` through the shock; equal on both sides."""
        return self.right.rho * (self.right.u - self.sigma)


def pressure(rho, gas: GasParams):
    return gas.K * rho**gas.gamma


def dpressure(rho, gas: GasParams):
    """p'(rho) = gamma K rho**(gamma - 1)."""
    return gas.gamma * gas.K * rho ** (gas.gamma - 1.0)


def sound_speed(state: EndState, gas: GasParams) -> float:
    if not state.rho > 0.0:
        raise ValueError(f"density must be positive, got {state.rho}")
    return math.sqrt(dpressure(state.rho, gas))


def lambda2(state: EndState, gas: GasParams) -> float:
    return state.u + sound_speed(state, gas)


class Region(str, Enum):
    SUBSONIC = "subsonic-"
    TRANSONIC = "transonic-"
    SUPERSONIC = "supersonic-"
    OUT_OF_SCOPE = "not-in-scope"


def classify_state(state: EndState, gas: GasParams, tol_sonic: float = TOL_SONIC) -> Region:
    """Sign classification of ``lambda_2 = u + c`` for states with ``u < 0``."""
    c = sound_speed(state, gas)
    if state.u >= 0.0:
        return Region.OUT_OF_SCOPE
    lam = state.u + c
    if abs(lam) <= tol_sonic * c:
        return Region.TRANSONIC
    return Region.SUBSONIC if lam > 0.0 else Region.SUPERSONIC


def rh_residual(conn: ShockConnection) -> tuple[float, float]:
    rp, up = conn.right.rho, conn.right.u
    rm, um = conn.left.rho, conn.left.u
    s = conn.sigma
    pp, pm = pressure(rp, conn.gas), pressure(rm, conn.gas)
    r1 = -s * (rp - rm) + (rp * up - rm * um)
    r2 = -s * (rp * up - rm * um) + (rp * up**2 - rm * um**2 + pp - pm)
    return r1, r2


def _pressure_ratio_m1(d: float, gamma: float) -> float:
    # (1 + d)**gamma - 1 without cancellation for small d
    return math.expm1(gamma * math.log1p(d))


def _jump_mismatch(d: float, right: EndState, u_minus: float, gas: GasParams) -> float:
    # Unknown d = rho_-/rho_+ - 1 > 0.  With j = rho (u - sigma) < 0 and
    # j**2 = [p] / [1/rho], the velocity jump is u_- - u_+ = -j d / (rho_- ).
    rp = right.rho
    dp = gas.K * rp**gas.gamma * _pressure_ratio_m1(d, gas.gamma)
    j2 = dp * rp * (1.0 + d) / d
    j = -math.sqrt(j2)
    return -j * d / (rp * (1.0 + d)) - (u_minus - right.u)


def _bisect(f, lo: float, hi: float, maxiter: int = 2000) -> float:
    flo = f(lo)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == (flo > 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def shock_speed(right: EndState, rho_minus: float, gas: GasParams) -> float:
    """Closed form ``sigma = u_+ + sqrt(rho_-/rho_+) sqrt([p]/[rho])``."""
    rp = right.rho
    d = rho_minus / rp - 1.0
    return _shock_speed_d(right, d, gas)


def _shock_speed_d(right: EndState, d: float, gas: GasParams) -> float:
    rp = right.rho
    if d == 0.0:
        slope = dpressure(rp, gas)
    else:
        slope = gas.K * rp ** (gas.gamma - 1.0) * _pressure_ratio_m1(d, gas.gamma) / d
    return right.u + math.sqrt(1.0 + d) * math.sqrt(slope)


def solve_hugoniot(
    right: EndState,
    u_minus: float,
    gas: GasParams,
    delta_warn: float = DELTA_WARN,
    tol_sonic: float = TOL_SONIC,
) -> ShockConnection:
    """Left density and shock speed of the 2-shock ending at ``right``.

    Bisection in ``rho_-`` on the reduced jump relation, bracket grown
    geometrically from ``rho_+``.  The shock speed comes from the closed form
    and is cross-checked against the mass balance.
    """
    if not right.u < u_minus < 0.0:
        raise HugoniotError(
            f"requires u+ < u- < 0, got u+={right.u}, u-={u_minus}"
        )
    region = classify_state(right, gas, tol_sonic)
    if region not in (Region.SUBSONIC, Region.TRANSONIC):
        raise HugoniotError(f"right state is {region.value}; need subsonic- or transonic-")

    def f(rm):
        return _jump_mismatch(rm, right, u_minus, gas)

    # f(lo) < 0 (vanishing jump) and f grows without bound in d.
    lo = 1e-300
    hi = 1.0
    while f(hi) <= 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e12:
            raise HugoniotError("no admissible 2-shock: reduced relation never changes sign")
    if f(lo) > 0.0:
        raise HugoniotError("no admissible 2-shock: degenerate bracket")
    d = _bisect(f, lo, hi)
    rho_minus = right.rho * (1.0 + d)

    sigma = _shock_speed_d(right, d, gas)
    # mass balance rho_-(u_- - sigma) = rho_+(u_+ - sigma), solved for sigma
    sigma_mass = u_minus + (u_minus - right.u) / d
    if abs(sigma - sigma_mass) > 1e-10 * max(1.0, abs(sigma)):
        raise RuntimeError(
            f"internal error: shock speed mismatch {sigma} vs {sigma_mass}"
        )

    conn = ShockConnection(right=right, left=EndState(rho_minus, u_minus), sigma=sigma, gas=gas)
    ok, _ = lax_check(conn)
    if not ok:
        raise HugoniotError("inadmissible connection: Lax condition violated")
    if conn.delta > delta_warn:
        warnings.warn(
            f"shock strength {conn.delta:.3g} exceeds {delta_warn}; the stability theory is small-amplitude",
            StrongShockWarning,
            stacklevel=2,
        )
    return conn


def lax_check(conn: ShockConnection) -> tuple[bool, tuple[float, float]]:
    """Lax entropy condition; margins are ``(sigma - l2(U+), l2(U-) - sigma)``."""
    m_right = conn.sigma - lambda2(conn.right, conn.gas)
    m_left = lambda2(conn.left, conn.gas) - conn.sigma
    return (m_right > 0.0 and m_left > 0.0), (m_right, m_left)


def with_sigma(conn: ShockConnection, sigma: float) -> ShockConnection:
    return replace(conn, sigma=sigma)
