"""Finite-volume scheme for the barotropic Navier-Stokes outflow problem.

Conservative variables ``(rho, rho u)`` on cells of ``[0, L]``.  Convective
fluxes: local Lax-Friedrichs on MUSCL (monotonized-central) reconstructions of
the primitive variables.  Viscosity ``u_xx`` by central differences.  Time
integration: two-stage SSP Runge-Kutta (Heun).

Boundaries: at ``x = 0`` the velocity face value is ``u_-`` (odd reflection of
``u`` about ``u_-``) and the density is extrapolated with zeroth order; at
``x = L`` both ghost cells carry the far-field state ``(rho_+, u_+)``.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional

import numpy as np

from .hugoniot import EndState, GasParams, ShockConnection, solve_hugoniot
from .profile import ShockProfile, integrate_profile
from . import diagnostics as _diag
from . import shift as _shift

logger = logging.getLogger(__name__)

SCHEME_ID = "fv-muscl-mc-llf+central-visc/ssprk2"
RHO_FLOOR = 1e-10
NG = 2  # ghost cells per side

__all__ = [
    "SCHEME_ID",
    "Grid",
    "FluidField",
    "Boundary",
    "Perturbation",
    "SimConfig",
    "ConfigError",
    "PositivityError",
    "ShockExitError",
    "StepResult",
    "Record",
    "RunState",
    "validate_config",
    "far_margin",
    "bump",
    "perturbation_values",
    "init_data",
    "initial_norms",
    "physical_flux",
    "flux",
    "viscous_term",
    "apply_boundary",
    "cfl_dt",
    "step",
    "run",
    "mass",
]


class ConfigError(ValueError):
    pass


class PositivityError(RuntimeError):
    def __init__(self, msg, t=None, index=None, rho=None):
        super().__init__(msg)
        self.t = t
        self.index = index
        self.rho = rho


class ShockExitError(RuntimeError):
    def __init__(self, msg, t=None):
        super().__init__(msg)
        self.t = t


@dataclass(frozen=True)
class Grid:
    L: float
    N: int

    def __post_init__(self):
        if self.N < 16:
            raise ConfigError(f"need at least 16 cells, got {self.N}")
        if not self.L > 0:
            raise ConfigError(f"domain length must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) * self.h


@dataclass(frozen=True, eq=False)
class FluidField:
    t: float
    rho: np.ndarray
    mom: np.ndarray

    @property
    def u(self) -> np.ndarray:
        return self.mom / self.rho


@dataclass(frozen=True)
class Boundary:
    u_left: float
    rho_right: float
    u_right: float


@dataclass(frozen=True)
class Perturbation:
    shape: str = "bump"  # "bump" | "random" | "none"
    amplitude: float = 0.0
    center: Optional[float] = None  # default: beta
    width: float = 10.0
    modes: int = 4  # number of bumps for "random"


@dataclass(frozen=True)
class SimConfig:
    gamma: float = 2.0
    rho_plus: float = 1.0
    u_plus: float = -1.0
    u_minus: float = -0.9
    beta: float = 80.0
    L: float = 600.0
    N: int = 3000
    cfl: float = 0.4
    t_final: float = 200.0
    perturbation: Perturbation = field(default_factory=Perturbation)
    records_per_unit: float = 50.0  # diagnostic records per 1/sigma of time
    snapshot_stride: int = 10
    shift_mode: str = "Yg-consistent"
    dt_fixed: Optional[float] = None
    seed: int = 0
    tail_eps: float = 1e-8

    @property
    def gas(self) -> GasParams:
        return GasParams(self.gamma)

    @property
    def grid(self) -> Grid:
        return Grid(self.L, self.N)

    def connection(self) -> ShockConnection:
        return solve_hugoniot(EndState(self.rho_plus, self.u_plus), self.u_minus, self.gas)

    def boundary(self) -> Boundary:
        return Boundary(self.u_minus, self.rho_plus, self.u_plus)

    def replace(self, **kw) -> "SimConfig":
        return dataclasses.replace(self, **kw)


def far_margin(profile: ShockProfile) -> float:
    return 20.0 / profile.tail_rate_right


def validate_config(cfg: SimConfig, conn: ShockConnection, profile: ShockProfile) -> None:
    if not cfg.beta > 0:
        raise ConfigError(f"beta must be positive, got {cfg.beta}")
    if not cfg.cfl > 0:
        raise ConfigError(f"cfl must be positive, got {cfg.cfl}")
    if cfg.t_final < 0:
        raise ConfigError("t_final must be nonnegative")
    need = cfg.beta + conn.sigma * cfg.t_final + far_margin(profile)
    if not cfg.L > need:
        raise ConfigError(
            f"L={cfg.L} too short: shock reaches {cfg.beta + conn.sigma * cfg.t_final:.4g} "
            f"and the far-field margin is {far_margin(profile):.4g} (need L > {need:.4g})"
        )
    pert = cfg.perturbation
    if pert.shape not in ("bump", "random", "none"):
        raise ConfigError(f"unknown perturbation shape {pert.shape!r}")
    if pert.shape != "none" and pert.amplitude != 0.0:
        center = cfg.beta if pert.center is None else pert.center
        if center - pert.width <= 0.0:
            raise ConfigError("perturbation support must exclude x = 0")
        if center + pert.width >= cfg.L:
            raise ConfigError("perturbation support must lie inside the domain")
    if cfg.shift_mode not in _shift.MODES:
        raise ConfigError(f"shift_mode must be one of {_shift.MODES}")


def bump(s):
    """C-infinity bump ``exp(1 - 1/(1 - s^2))`` on ``|s| < 1``, peak 1 at 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


def perturbation_values(cfg: SimConfig, x: np.ndarray) -> np.ndarray:
    pert = cfg.perturbation
    if pert.shape == "none" or pert.amplitude == 0.0:
        return np.zeros_like(x)
    center = cfg.beta if pert.center is None else pert.center
    if pert.shape == "bump":
        return pert.amplitude * bump((x - center) / pert.width)
    rng = np.random.default_rng(cfg.seed)
    out = np.zeros_like(x)
    for _ in range(pert.modes):
        c = center + rng.uniform(-0.5, 0.5) * pert.width
        w = pert.width * rng.uniform(0.2, 0.5)
        out += rng.uniform(-1.0, 1.0) * bump((x - c) / w)
    return pert.amplitude * out / pert.modes


def init_data(cfg: SimConfig, profile: ShockProfile, grid: Optional[Grid] = None) -> FluidField:
    """Shifted profile sampled at cell centers plus the configured perturbation."""
    grid = grid or cfg.grid
    x = grid.x
    vals = profile(x - cfg.beta)
    dq = perturbation_values(cfg, x)
    rho = vals.rho + dq
    u = vals.u + dq
    if np.any(rho <= 0.0):
        raise ConfigError("perturbation makes the density non-positive")
    return FluidField(0.0, rho, rho * u)


def initial_norms(field: FluidField, grid: Grid, conn: ShockConnection, beta: float) -> dict:
    """The three terms of the initial smallness condition, by midpoint quadrature."""
    x, h = grid.x, grid.h
    u = field.u
    right = x >= beta
    left = ~right
    l2_right = math.sqrt(np.sum(((field.rho - conn.right.rho) ** 2 + (u - conn.right.u) ** 2)[right]) * h)
    l2_left = math.sqrt(np.sum(((field.rho - conn.left.rho) ** 2 + (u - conn.left.u) ** 2)[left]) * h)
    drho = np.gradient(field.rho, h)
    du = np.gradient(u, h)
    grad = math.sqrt(np.sum(drho**2 + du**2) * h)
    return {"l2_far_right": l2_right, "l2_near_left": l2_left, "h1_gradient": grad, "total": l2_right + l2_left + grad}


def physical_flux(rho, u, gas: GasParams):
    return rho * u, rho * u * u + gas.K * rho**gas.gamma


def flux(left_state, right_state, gas: GasParams):
    """Local Lax-Friedrichs flux between primitive states ``(rho, u)``.

    Returns ``(mass_flux, momentum_flux, speed)``.
    """
    rl, ul = left_state
    rr, ur = right_state
    rl = np.asarray(rl, dtype=float)
    rr = np.asarray(rr, dtype=float)
    if np.any(rl <= 0.0) or np.any(rr <= 0.0):
        raise PositivityError("non-positive density entering the Riemann flux")
    g = gas.gamma
    cl = np.sqrt(g * gas.K * rl ** (g - 1.0))
    cr = np.sqrt(g * gas.K * rr ** (g - 1.0))
    s = np.maximum(np.abs(ul) + cl, np.abs(ur) + cr)
    fl0, fl1 = physical_flux(rl, ul, gas)
    fr0, fr1 = physical_flux(rr, ur, gas)
    f0 = 0.5 * (fl0 + fr0) - 0.5 * s * (rr - rl)
    f1 = 0.5 * (fl1 + fr1) - 0.5 * s * (rr * ur - rl * ul)
    return f0, f1, s


def apply_boundary(field: FluidField, bc: Boundary) -> tuple[np.ndarray, np.ndarray]:
    """Primitive arrays ``(rho, u)`` padded with two ghost cells on each side."""
    rho, u = field.rho, field.u
    rho_g = np.empty(rho.size + 2 * NG)
    u_g = np.empty_like(rho_g)
    rho_g[NG:-NG] = rho
    u_g[NG:-NG] = u
    # left: mirror u about u_-, so the face average is u_- exactly
    rho_g[:NG] = rho[0]
    u_g[1] = 2.0 * bc.u_left - u[0]
    u_g[0] = 2.0 * bc.u_left - u[1]
    rho_g[-NG:] = bc.rho_right
    u_g[-NG:] = bc.u_right
    return rho_g, u_g


def _mc_slope(q):
    dm = q[1:-1] - q[:-2]
    dp = q[2:] - q[1:-1]
    dc = 0.5 * (dm + dp)
    lim = 2.0 * np.minimum(np.abs(dm), np.abs(dp))
    slope = np.sign(dc) * np.minimum(np.abs(dc), lim)
    slope[dm * dp <= 0.0] = 0.0
    return slope


def viscous_term(u_padded: np.ndarray, h: float, i=None):
    """Central second difference of ``u``; ``u_padded`` carries one or more ghosts per side."""
    d2 = (u_padded[:-2] - 2.0 * u_padded[1:-1] + u_padded[2:]) / (h * h)
    return d2 if i is None else d2[i]


def _rhs(field: FluidField, grid: Grid, gas: GasParams, bc: Boundary):
    rho_g, u_g = apply_boundary(field, bc)
    # slopes on cells -1..N (one ghost per side)
    sr = _mc_slope(rho_g)
    su = _mc_slope(u_g)
    rc = rho_g[1:-1]
    uc = u_g[1:-1]
    # faces -1/2 .. N-1/2: left state from cell i, right from cell i+1
    rl = rc[:-1] + 0.5 * sr[:-1]
    ul = uc[:-1] + 0.5 * su[:-1]
    rr = rc[1:] - 0.5 * sr[1:]
    ur = uc[1:] - 0.5 * su[1:]
    f0, f1, _ = flux((rl, ul), (rr, ur), gas)
    h = grid.h
    drho = -(f0[1:] - f0[:-1]) / h
    dmom = -(f1[1:] - f1[:-1]) / h + gas.mu * viscous_term(u_g[1:-1], h)
    # net mass inflow rate through both ends
    inflow = f0[0] - f0[-1]
    return drho, dmom, inflow


def cfl_dt(field: FluidField, grid: Grid, gas: GasParams, cfl: float) -> float:
    rho = field.rho
    if np.any(rho <= 0.0):
        raise PositivityError("non-positive density in time-step selection", t=field.t)
    c = np.sqrt(gas.gamma * gas.K * rho ** (gas.gamma - 1.0))
    smax = float(np.max(np.abs(field.u) + c))
    h = grid.h
    return cfl * min(h / smax, h * h / (2.0 * gas.mu))


class StepResult(NamedTuple):
    field: FluidField
    stage: FluidField  # first-stage (Euler predictor) field at t + dt
    mass_inflow: float  # time-integrated net boundary mass flux over the step


def _check_positive(rho, t):
    bad = np.flatnonzero(~(rho > RHO_FLOOR))
    if bad.size:
        i = int(bad[0])
        raise PositivityError(
            f"density {rho[i]:.3e} below floor at t={t:.6g}, cell {i}", t=t, index=i, rho=rho.copy()
        )


def step(field: FluidField, dt: float, grid: Grid, gas: GasParams, bc: Boundary) -> StepResult:
    d0, m0, in0 = _rhs(field, grid, gas, bc)
    t1 = field.t + dt
    r1 = field.rho + dt * d0
    _check_positive(r1, t1)
    stage = FluidField(t1, r1, field.mom + dt * m0)
    d1, m1, in1 = _rhs(stage, grid, gas, bc)
    r2 = 0.5 * (field.rho + r1 + dt * d1)
    _check_positive(r2, t1)
    mom2 = 0.5 * (field.mom + stage.mom + dt * m1)
    return StepResult(FluidField(t1, r2, mom2), stage, 0.5 * dt * (in0 + in1))


def mass(field: FluidField, grid: Grid) -> float:
    return float(np.sum(field.rho) * grid.h)


@dataclass
class Record:
    diag: "_diag.DiagRecord"
    X: float
    Xdot: float
    field: Optional[FluidField] = None  # set on snapshot records


@dataclass
class RunState:
    """Mutable bookkeeping of a run; exposed for post-run inspection."""

    conn: ShockConnection
    profile: ShockProfile
    grid: Grid
    shift: "_shift.ShiftState"
    mass0: float = 0.0
    inflow: float = 0.0
    mass_error_max: float = 0.0
    P_int: float = 0.0
    P_pos_int: float = 0.0
    steps: int = 0
    rho_min: float = math.inf
    rho_max: float = -math.inf
    current: Optional[FluidField] = None
    init_norms: dict = field(default_factory=dict)


def run(
    cfg: SimConfig,
    profile: Optional[ShockProfile] = None,
    state: Optional[RunState] = None,
) -> Iterator[Record]:
    """Advance to ``cfg.t_final`` yielding diagnostic records at the configured cadence.

    ``state``, when given, is an empty ``RunState``-compatible holder filled in
    place so callers can read conservation and boundary integrals afterwards.
    """
    conn = profile.conn if profile is not None else cfg.connection()
    if profile is None:
        profile = integrate_profile(conn, tail_eps=cfg.tail_eps)
    validate_config(cfg, conn, profile)
    grid = cfg.grid
    gas = cfg.gas
    bc = cfg.boundary()

    fld = init_data(cfg, profile, grid)
    sh = _shift.ShiftState.start(conn, cfg.beta)
    st = RunState(conn=conn, profile=profile, grid=grid, shift=sh)
    if state is not None:
        state.__dict__.update(st.__dict__)
        st = state
    st.mass0 = mass(fld, grid)
    st.init_norms = initial_norms(fld, grid, conn, cfg.beta)
    st.current = fld
    margin = far_margin(profile)

    rec_dt = 1.0 / (cfg.records_per_unit * conn.sigma)
    n_rec = 0

    xdot = _shift.shift_rhs(fld, grid, profile, sh.X, cfg.beta, cfg.shift_mode)
    sh.Xdot = xdot
    P_prev = _diag.boundary_production(fld, grid, profile, sh.X, cfg.beta)

    def make_record(f, snap):
        st.rho_min = min(st.rho_min, float(f.rho.min()))
        st.rho_max = max(st.rho_max, float(f.rho.max()))
        d = _diag.functionals(f, grid, profile, sh.X, cfg.beta, Xdot=sh.Xdot)
        d = dataclasses.replace(d, P_int=st.P_int, P_pos_int=st.P_pos_int)
        sh.record(f.t)
        return Record(d, sh.X, sh.Xdot, f if snap else None)

    yield make_record(fld, True)
    n_rec = 1
    t_end = cfg.t_final
    while fld.t < t_end * (1 - 1e-14) and t_end > 0:
        dt = cfg.dt_fixed if cfg.dt_fixed is not None else cfl_dt(fld, grid, gas, cfg.cfl)
        if fld.t + dt > t_end:
            dt = t_end - fld.t
        res = step(fld, dt, grid, gas, bc)
        sh = _shift.advance_shift(sh, fld, res.stage, dt, grid, profile, cfg.shift_mode, xdot0=xdot)
        st.shift = sh
        fld = res.field
        if fld.t + 1e-12 * max(1.0, t_end) >= t_end:
            fld = FluidField(t_end, fld.rho, fld.mom)
        st.inflow += res.mass_inflow
        st.steps += 1
        err = abs(mass(fld, grid) - st.mass0 - st.inflow)
        st.mass_error_max = max(st.mass_error_max, err)

        xdot = _shift.shift_rhs(fld, grid, profile, sh.X, cfg.beta, cfg.shift_mode)
        sh.Xdot = xdot
        P_now = _diag.boundary_production(fld, grid, profile, sh.X, cfg.beta)
        st.P_int += 0.5 * dt * (P_prev + P_now)
        st.P_pos_int += 0.5 * dt * (max(P_prev, 0.0) + max(P_now, 0.0))
        P_prev = P_now
        st.current = fld

        front = conn.sigma * fld.t + sh.X + cfg.beta
        if front > cfg.L - margin:
            raise ShockExitError(
                f"shock at x={front:.4g} entered the far-field margin (L - {margin:.4g}) at t={fld.t:.6g}",
                t=fld.t,
            )
        if fld.t >= n_rec * rec_dt or fld.t >= t_end:
            snap = (n_rec % cfg.snapshot_stride == 0) or fld.t >= t_end
            yield make_record(fld, snap)
            n_rec += 1
