"""Relative entropy, monitored functionals, boundary production and lemma checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import simpson

from .hugoniot import GasParams, ShockConnection
from .profile import ShockProfile
from .shift import ShiftedWave, shifted_wave

__all__ = [
    "DiagRecord",
    "DiagnosticError",
    "DIAG_COLUMNS",
    "RelativeQuantities",
    "relative_pressure",
    "relative_quantities",
    "functionals",
    "boundary_traces",
    "boundary_production",
    "entropy_balance_check",
    "y_coordinate",
    "y0",
    "jacobian_lemma_check",
    "poincare_check",
    "perturbation_sources",
    "fit_loglog_slope",
]


class DiagnosticError(ValueError):
    """A functional could not be evaluated on the current field (e.g. a non-positive trace)."""

    def __init__(self, msg, t=None):
        super().__init__(msg)
        self.t = t


def _check_density(*arrs):
    for a in arrs:
        if np.any(np.asarray(a) <= 0.0):
            raise ValueError("densities must be positive")


def relative_pressure(rho, rho_t, gas: GasParams):
    """``p(rho | rho~) = p(rho) - p(rho~) - p'(rho~)(rho - rho~)``, nonnegative."""
    rho = np.asarray(rho, dtype=float)
    rho_t = np.asarray(rho_t, dtype=float)
    _check_density(rho, rho_t)
    g = gas.gamma
    # rho~^g * [(1+r)^g - 1 - g r] with r = rho/rho~ - 1, cancellation-free
    r = (rho - rho_t) / rho_t
    lead = np.expm1(g * np.log1p(r)) - g * r
    # binomial series where the subtraction above loses digits
    small = np.abs(r) < 1e-4
    if np.any(small):
        rs = np.where(small, r, 0.0)
        series = np.zeros_like(rs)
        coef = g
        for k in range(2, 8):
            coef = coef * (g - k + 1) / k
            series = series + coef * rs**k
        lead = np.where(small, series, lead)
    out = gas.K * rho_t**g * lead
    return out if np.ndim(out) else float(out)


class RelativeQuantities(NamedTuple):
    eta: np.ndarray
    q: np.ndarray
    f_rel: np.ndarray  # momentum component; the mass component is zero


def relative_quantities(U, Ut, gas: GasParams) -> RelativeQuantities:
    rho, u = (np.asarray(v, dtype=float) for v in U)
    rho_t, u_t = (np.asarray(v, dtype=float) for v in Ut)
    prel = relative_pressure(rho, rho_t, gas)
    psi = u - u_t
    p = gas.K * rho**gas.gamma
    pt = gas.K * rho_t**gas.gamma
    eta = 0.5 * rho * psi**2 + prel / (gas.gamma - 1.0)
    q = 0.5 * rho * u * psi**2 + u / (gas.gamma - 1.0) * prel + (p - pt) * psi
    f_rel = rho * psi**2 + prel
    return RelativeQuantities(eta, q, f_rel)


DIAG_COLUMNS = (
    "t", "E", "Gnew", "GS", "Gbd", "Drho", "Du1", "Du2", "P", "P_int", "P_pos_int",
    "supnorm_phi", "supnorm_psi", "l2_phi", "l2_psi", "h1_phi", "h1_psi",
    "Xdot", "y0", "tail_truncation_bound",
)


@dataclass(frozen=True)
class DiagRecord:
    t: float
    E: float
    Gnew: float
    GS: float
    Gbd: float
    Drho: float
    Du1: float
    Du2: float
    P: float
    supnorm_phi: float
    supnorm_psi: float
    l2_phi: float
    l2_psi: float
    h1_phi: float
    h1_psi: float
    Xdot: float
    y0: float
    tail_truncation_bound: float
    P_int: float = 0.0
    P_pos_int: float = 0.0

    def row(self) -> list[float]:
        return [getattr(self, c) for c in DIAG_COLUMNS]


assert set(DIAG_COLUMNS) == {f.name for f in fields(DiagRecord)}


# one-sided stencils from cell centers h/2, 3h/2, 5h/2 to the face x = 0
def _trace0(f):
    return (15.0 * f[0] - 10.0 * f[1] + 3.0 * f[2]) / 8.0


def _dtrace0(f, h):
    return (-2.0 * f[0] + 3.0 * f[1] - f[2]) / h


def _dtrace0_with_value(fb, f, h):
    # nodes 0, h/2, 3h/2 with the face value fb known
    return (-8.0 * fb + 9.0 * f[0] - f[1]) / (3.0 * h)


class BoundaryTraces(NamedTuple):
    rho: float
    u: float
    rho_t: float
    u_t: float
    a: float
    psi: float
    psi_x: float
    phi_x: float


def boundary_traces(field, grid, prof: ShockProfile, X: float, beta: float) -> BoundaryTraces:
    h = grid.h
    conn = prof.conn
    wave0 = shifted_wave(prof, np.array([0.0]), field.t, X, beta)
    rho0 = _trace0(field.rho[:3])
    if not rho0 > 0.0:
        raise DiagnosticError(f"extrapolated boundary density {rho0:.3e} at t={field.t:.6g}", t=field.t)
    u0 = conn.left.u  # prescribed outflow velocity
    u_x0 = _dtrace0_with_value(u0, field.u[:2], h)
    rho_x0 = _dtrace0(field.rho[:3], h)
    psi0 = u0 - wave0.u[0]
    psi_x0 = u_x0 - wave0.u_x[0]
    phi_x0 = rho_x0 - wave0.rho_x[0]
    return BoundaryTraces(rho0, u0, float(wave0.rho[0]), float(wave0.u[0]), float(wave0.a[0]),
                          float(psi0), float(psi_x0), float(phi_x0))


def boundary_production(field, grid, prof: ShockProfile, X: float, beta: float) -> float:
    """``a q(U;U~) - a (u-u~)(u-u~)_x`` at ``x = 0``."""
    tr = boundary_traces(field, grid, prof, X, beta)
    q = relative_quantities((tr.rho, tr.u), (tr.rho_t, tr.u_t), prof.conn.gas).q
    return float(tr.a * q - tr.a * tr.psi * tr.psi_x)


def y_coordinate(u_tilde_val, u_minus: float, delta: float):
    if not delta > 0:
        raise ValueError("delta must be positive")
    return (u_minus - np.asarray(u_tilde_val, dtype=float)) / delta


def y0(prof: ShockProfile, t: float, X: float, beta: float) -> float:
    """y at the boundary, ``(u_- - u~(-sigma t - X - beta)) / delta``, from the accurate gap."""
    xi = np.array([-prof.conn.sigma * t - X - beta])
    _, v = prof.gaps(xi)
    return float(v[0] / prof.delta)


def functionals(field, grid, prof: ShockProfile, X: float, beta: float, Xdot: float = 0.0) -> DiagRecord:
    conn = prof.conn
    gas = conn.gas
    g = gas.gamma
    s = conn.sigma
    h = grid.h
    wave = shifted_wave(prof, grid.x, field.t, X, beta)
    rho, u = field.rho, field.u
    phi = rho - wave.rho
    psi = u - wave.u

    rq = relative_quantities((rho, u), (wave.rho, wave.u), gas)
    E = float(np.sum(wave.a * rq.eta)) * h

    bracket = phi - wave.rho / (s - wave.u) * psi
    Gnew = float(np.sum(wave.a_x * (s - wave.u) / 2.0 * g * wave.rho ** (g - 2.0) * bracket**2)) * h
    GS = float(np.sum(np.abs(wave.u_x) * psi**2)) * h

    phi_x = np.gradient(phi, h, edge_order=2)
    psi_x = np.gradient(psi, h, edge_order=2)
    Drho = float(np.sum(g * rho ** (g - 1.0) / rho * phi_x**2)) * h
    Du1 = float(np.sum(wave.a * psi_x**2)) * h

    # psi_xx by the solver's second difference: u padded with its ghost values,
    # u~ padded with the profile itself
    u_pad = np.concatenate([[2.0 * conn.left.u - u[0]], u, [conn.right.u]])
    ends = shifted_wave(prof, np.array([-0.5 * h, grid.L + 0.5 * h]), field.t, X, beta).u
    ut_pad = np.concatenate([[ends[0]], wave.u, [ends[1]]])
    psi_pad = u_pad - ut_pad
    psi_xx = (psi_pad[:-2] - 2.0 * psi_pad[1:-1] + psi_pad[2:]) / (h * h)
    Du2 = float(np.sum(psi_xx**2)) * h

    tr = boundary_traces(field, grid, prof, X, beta)
    Gbd = -0.5 * conn.left.u * (tr.phi_x / tr.rho) ** 2
    q0 = relative_quantities((tr.rho, tr.u), (tr.rho_t, tr.u_t), gas).q
    P = float(tr.a * q0 - tr.a * tr.psi * tr.psi_x)

    l2_phi = math.sqrt(float(np.sum(phi**2)) * h)
    l2_psi = math.sqrt(float(np.sum(psi**2)) * h)
    h1_phi = math.sqrt(l2_phi**2 + float(np.sum(phi_x**2)) * h)
    h1_psi = math.sqrt(l2_psi**2 + float(np.sum(psi_x**2)) * h)

    # beyond L the state is taken as far-field; mismatch of the profile there
    xi_L = grid.L - s * field.t - X - beta
    w_L, _ = prof.gaps(np.array([xi_L]))
    tail = float(w_L[0]) * (1.0 + conn.right.rho / (s - conn.right.u)) / prof.tail_rate_right

    return DiagRecord(
        t=float(field.t), E=E, Gnew=Gnew, GS=GS, Gbd=float(Gbd), Drho=Drho, Du1=Du1, Du2=Du2, P=P,
        supnorm_phi=float(np.max(np.abs(phi))), supnorm_psi=float(np.max(np.abs(psi))),
        l2_phi=l2_phi, l2_psi=l2_psi, h1_phi=h1_phi, h1_psi=h1_psi,
        Xdot=float(Xdot), y0=y0(prof, field.t, X, beta), tail_truncation_bound=tail,
    )


class BalanceReport(NamedTuple):
    t: np.ndarray
    residual: np.ndarray  # E(t) - E(0) - int_0^t P_+ ds
    budget: float
    passed: bool


def entropy_balance_check(records: Sequence[DiagRecord], budget_abs: float = 1e-10,
                          budget_rel: float = 1e-3) -> BalanceReport:
    """``E(t) <= E(0) + int P_+ + budget`` along a run."""
    if len(records) < 2:
        raise ValueError("need at least two records")
    t = np.array([r.t for r in records])
    E = np.array([r.E for r in records])
    Ppos = np.array([r.P_pos_int for r in records])
    res = E - E[0] - Ppos
    budget = budget_abs + budget_rel * E[0]
    passed = bool(np.all(res <= budget) and np.all(E >= 0.0))
    return BalanceReport(t, res, budget, passed)


def jacobian_lemma_check(prof: ShockProfile, conn: ShockConnection | None = None) -> float:
    """Max over table nodes of ``|(1/(y(1-y))) dy/dx - (gamma+1) rho_+ delta / 2|``."""
    conn = conn or prof.conn
    delta = conn.delta
    y = prof.v_tab / delta
    one_minus_y = prof.w_tab / delta
    dydx = -prof.du_tab / delta
    lhs = dydx / (y * one_minus_y)
    target = (conn.gas.gamma + 1.0) / 2.0 * conn.right.rho * delta
    return float(np.max(np.abs(lhs - target)))


class PoincareResult(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def poincare_check(y, f, df=None, tol_q: float = 1e-9) -> PoincareResult:
    """Weighted Poincare inequality on ``[y[0], y[-1]]`` by composite Simpson.

    Simpson is exact for the quadratic integrands of the extremal ``f = y``,
    so the equality case is reproduced to round-off.
    """
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    a, b = y[0], y[-1]
    if df is None:
        df = np.gradient(f, y, edge_order=2)
    mean = simpson(f, x=y) / (b - a)
    lhs = float(simpson((f - mean) ** 2, x=y))
    rhs = float(0.5 * simpson((y - a) * (b - y) * np.asarray(df) ** 2, x=y))
    return PoincareResult(lhs, rhs, lhs <= rhs * (1.0 + tol_q) + 1e-300)


def perturbation_sources(phi, psi, wave: ShiftedWave, rho, gas: GasParams):
    """Source terms ``(F, G)`` of the perturbation equations."""
    g = gas.gamma
    dp = lambda r: g * gas.K * r ** (g - 1.0)  # noqa: E731
    F = -psi * wave.rho_x - phi * wave.u_x
    G = (wave.rho_x * (phi * dp(wave.rho) / wave.rho - (dp(rho) - dp(wave.rho)))
         - rho * psi * wave.u_x - phi / wave.rho * wave.u_xx)
    return F, G


def fit_loglog_slope(x, y) -> float:
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
