"""The dynamical shift ``X(t)`` and lab-frame evaluation of the shifted wave."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .hugoniot import ShockConnection, dpressure, pressure
from .profile import ShockProfile, _evaluate_with_gap

__all__ = [
    "MODES",
    "ShiftState",
    "ShiftedWave",
    "shifted_coordinate",
    "shifted_wave",
    "shift_rhs",
    "shift_integrand",
    "advance_shift",
]

# "Yg-consistent" weights the density part by p'(rho~); "as-printed" by p(rho~).
MODES = ("Yg-consistent", "as-printed")


def shifted_coordinate(x, t, X, sigma, beta):
    return x - sigma * t - X - beta


class ShiftedWave(NamedTuple):
    xi: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    rho_x: np.ndarray
    u_x: np.ndarray
    u_xx: np.ndarray
    a: np.ndarray
    a_x: np.ndarray


def shifted_wave(prof: ShockProfile, x, t, X, beta) -> ShiftedWave:
    """Profile and weight at lab positions ``x`` for shift ``X`` at time ``t``."""
    xi = shifted_coordinate(np.asarray(x, dtype=float), t, X, prof.conn.sigma, beta)
    vals, w = _evaluate_with_gap(prof, xi)
    sd = math.sqrt(prof.delta)
    a = 1.0 + sd - w / sd
    a_x = -vals.du / sd
    return ShiftedWave(xi, vals.rho, vals.u, vals.drho, vals.du, vals.ddu, a, a_x)


def shift_integrand(wave: ShiftedWave, u, conn: ShockConnection, mode: str = "Yg-consistent"):
    """Pointwise integrand of the shift law (both integrals summed)."""
    if mode == "Yg-consistent":
        pf = dpressure(wave.rho, conn.gas)
    elif mode == "as-printed":
        pf = pressure(wave.rho, conn.gas)
    else:
        raise ValueError(f"unknown shift mode {mode!r}")
    psi = u - wave.u
    return wave.a * (pf / (conn.sigma - wave.u) * wave.rho_x + wave.rho * wave.u_x) * psi


def weight_constant(conn: ShockConnection) -> float:
    return 2.0 * (conn.gas.gamma + 1.0) / conn.right.rho


def shift_rhs(field, grid, prof: ShockProfile, X: float, beta: float, mode: str = "Yg-consistent") -> float:
    """``Xdot = -(M/delta) * integral``, midpoint rule on the solver cells."""
    conn = prof.conn
    wave = shifted_wave(prof, grid.x, field.t, X, beta)
    integral = float(np.sum(shift_integrand(wave, field.u, conn, mode))) * grid.h
    return -weight_constant(conn) / conn.delta * integral


@dataclass
class ShiftState:
    X: float
    Xdot: float
    M: float
    beta: float
    sigma: float
    history: list = field(default_factory=list)  # (t, X, Xdot)

    @classmethod
    def start(cls, conn: ShockConnection, beta: float) -> "ShiftState":
        return cls(X=0.0, Xdot=0.0, M=weight_constant(conn), beta=beta, sigma=conn.sigma)

    def record(self, t: float) -> None:
        self.history.append((t, self.X, self.Xdot))

    def as_arrays(self):
        if not self.history:
            return np.empty(0), np.empty(0), np.empty(0)
        arr = np.asarray(self.history, dtype=float)
        return arr[:, 0], arr[:, 1], arr[:, 2]


def advance_shift(
    sh: ShiftState,
    field0,
    stage,
    dt: float,
    grid,
    prof: ShockProfile,
    mode: str = "Yg-consistent",
    xdot0: float | None = None,
    rhs=None,
) -> ShiftState:
    """Heun update of ``X`` coupled stage-by-stage to the field update.

    ``field0`` is the field at ``t``, ``stage`` the predictor field at
    ``t + dt``.  ``rhs(field, X)`` overrides the shift law (used for testing).
    """
    if rhs is None:
        def rhs(f, X):
            return shift_rhs(f, grid, prof, X, sh.beta, mode)
    k0 = rhs(field0, sh.X) if xdot0 is None else xdot0
    X1 = sh.X + dt * k0
    k1 = rhs(stage, X1)
    sh.X = sh.X + 0.5 * dt * (k0 + k1)
    return sh
