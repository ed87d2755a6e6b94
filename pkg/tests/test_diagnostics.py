import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shockline.diagnostics import (
    DIAG_COLUMNS,
    DiagRecord,
    boundary_production,
    entropy_balance_check,
    fit_loglog_slope,
    functionals,
    jacobian_lemma_check,
    perturbation_sources,
    poincare_check,
    relative_pressure,
    relative_quantities,
    y0,
    y_coordinate,
)
from shockline.hugoniot import GasParams
from shockline.shift import shifted_wave
from shockline.solver import FluidField, Grid, Perturbation, SimConfig, init_data, run

from conftest import DELTAS

GAS2 = GasParams(2.0)

# ---- relative pressure and entropy


def test_relative_pressure_gamma2_collapses_to_square():
    assert relative_pressure(1.5, 1.0, GAS2) == pytest.approx(0.25, rel=1e-15)
    rng = np.random.default_rng(0)
    a, b = rng.uniform(0.1, 3, 100), rng.uniform(0.1, 3, 100)
    assert np.allclose(relative_pressure(a, b, GAS2), (a - b) ** 2, rtol=1e-12, atol=1e-15)


def test_relative_pressure_zero_on_diagonal():
    assert relative_pressure(1.3, 1.3, GasParams(1.4)) == 0.0


@pytest.mark.parametrize("gamma", [1.4, 5 / 3, 2.0, 3.0])
def test_relative_pressure_quadratic_expansion(gamma):
    gas = GasParams(gamma)
    rt = 1.2
    ratios = []
    for d in [1e-1, 1e-2, 1e-3, 1e-4]:
        quad = gamma * (gamma - 1) / 2 * rt ** (gamma - 2) * d * d
        ratios.append(abs(relative_pressure(rt + d, rt, gas) - quad) / d**3)
    # the cubic coefficient gamma(gamma-1)(gamma-2)/6 rt^(gamma-3)
    c3 = abs(gamma * (gamma - 1) * (gamma - 2) / 6 * rt ** (gamma - 3))
    assert ratios[-1] == pytest.approx(c3, rel=1e-3, abs=1e-3)
    assert max(ratios) < 10 * (c3 + 1)


def test_relative_pressure_rejects_nonpositive():
    with pytest.raises(ValueError):
        relative_pressure(0.0, 1.0, GAS2)


def test_relative_quantities_vanish_on_diagonal():
    rq = relative_quantities((1.1, -0.8), (1.1, -0.8), GAS2)
    assert (float(rq.eta), float(rq.q), float(rq.f_rel)) == (0.0, 0.0, 0.0)


def test_relative_quantities_example():
    rq = relative_quantities((1.0, -0.8), (1.0, -1.0), GAS2)
    assert float(rq.eta) == pytest.approx(0.02, rel=1e-12)
    assert float(rq.f_rel) == pytest.approx(0.04, rel=1e-12)
    assert float(rq.q) == pytest.approx(-0.016, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([1.4, 5 / 3, 2.0]), st.integers(0, 2**32 - 1))
def test_eta_nonnegative_random(gamma, seed):
    rng = np.random.default_rng(seed)
    n = 50  # 200 examples x 50 pairs = 10^4 pairs
    U = (rng.uniform(0.01, 5, n), rng.uniform(-3, 3, n))
    Ut = (rng.uniform(0.01, 5, n), rng.uniform(-3, 3, n))
    assert np.all(relative_quantities(U, Ut, GasParams(gamma)).eta >= 0.0)


# ---- functionals


@pytest.fixture(scope="module")
def exact_field(oracle_profile):
    cfg = SimConfig(N=3000, perturbation=Perturbation(amplitude=0.0))
    return cfg, init_data(cfg, oracle_profile)


def test_functionals_vanish_on_exact_wave(oracle_profile, exact_field):
    cfg, f = exact_field
    d = functionals(f, cfg.grid, oracle_profile, 0.0, cfg.beta)
    for name in ("E", "Gnew", "GS", "Drho", "Du1"):
        assert abs(getattr(d, name)) <= 1e-20, name
    # only the boundary cell contributes: the field meets u(0) = u_-, the wave
    # misses it by its tail gap at x = 0
    assert d.Du2 <= 1e-10
    assert d.supnorm_phi <= 1e-14 and d.supnorm_psi <= 1e-14


def test_gnew_vanishes_on_diagonal_perturbation(oracle_profile):
    cfg = SimConfig(N=3000)
    grid = cfg.grid
    w = shifted_wave(oracle_profile, grid.x, 0.0, 0.0, cfg.beta)
    psi = 0.01 * np.exp(-(((grid.x - cfg.beta) / 15.0) ** 2))
    phi = w.rho / (oracle_profile.conn.sigma - w.u) * psi
    rho = w.rho + phi
    f = FluidField(0.0, rho, rho * (w.u + psi))
    d = functionals(f, grid, oracle_profile, 0.0, cfg.beta)
    assert abs(d.Gnew) <= 1e-12 * d.GS
    assert d.GS > 0


def test_functionals_nonnegative_along_perturbed_run(oracle_profile):
    cfg = SimConfig(N=600, t_final=20.0, records_per_unit=5, perturbation=Perturbation(amplitude=0.01))
    recs = [r.diag for r in run(cfg, oracle_profile)]
    for r in recs:
        assert min(r.E, r.Gnew, r.GS, r.Gbd, r.Drho, r.Du1, r.Du2) >= 0.0
    assert entropy_balance_check(recs).passed


def test_unperturbed_run_entropy_stays_tiny(oracle_profile):
    cfg = SimConfig(N=1500, L=300.0, t_final=20.0, records_per_unit=2,
                    perturbation=Perturbation(amplitude=0.0))
    recs = [r.diag for r in run(cfg, oracle_profile)]
    assert max(r.E for r in recs) <= 1e-8
    assert min(r.E for r in recs) >= 0.0


def test_diag_record_row_order():
    rec = DiagRecord(**{c: float(i) for i, c in enumerate(DIAG_COLUMNS)})
    assert rec.row() == [float(i) for i in range(len(DIAG_COLUMNS))]


# ---- boundary production and y


def test_boundary_production_vanishes_when_wave_matches_boundary(oracle_profile):
    # far standoff: u~ at x = 0 equals u_- to round-off
    cfg = SimConfig(N=4000, L=800.0, beta=400.0, t_final=0.0, perturbation=Perturbation(amplitude=0.0))
    f = init_data(cfg, oracle_profile)
    assert abs(boundary_production(f, cfg.grid, oracle_profile, 0.0, cfg.beta)) <= 1e-14


def test_unperturbed_boundary_production_decays(oracle_profile):
    cfg = SimConfig(N=1500, L=300.0, beta=30.0, t_final=40.0, records_per_unit=2,
                    perturbation=Perturbation(amplitude=0.0))
    recs = [r.diag for r in run(cfg, oracle_profile)]
    t = np.array([r.t for r in recs])
    P = np.abs([r.P for r in recs])
    y = np.array([r.y0 for r in recs])
    target = oracle_profile.tail_rate_left * oracle_profile.conn.sigma
    late = t >= 5.0
    p_rate = -np.polyfit(t[late], np.log(P[late]), 1)[0]
    y_rate = -np.polyfit(t, np.log(y), 1)[0]
    # |P| <= C delta exp(-rate (sigma t + beta)): decays at least at the tail rate
    assert p_rate >= 0.9 * target
    assert y_rate == pytest.approx(target, rel=0.05)


def test_y_coordinate_endpoints(oracle_conn):
    c = oracle_conn
    assert y_coordinate(c.left.u, c.left.u, c.delta) == 0.0
    assert y_coordinate(c.right.u, c.left.u, c.delta) == pytest.approx(1.0, rel=1e-14)


def test_y0_small_at_large_standoff(oracle_profile):
    a = y0(oracle_profile, 0.0, 0.0, 80.0)
    b = y0(oracle_profile, 0.0, 0.0, 160.0)
    assert 0 < b < a < 1e-5


# ---- Jacobian lemma


def test_jacobian_deviation_quadratic_in_strength(profile_family):
    devs = [jacobian_lemma_check(profile_family[d]) for d in DELTAS]
    slope = fit_loglog_slope(DELTAS, devs)
    assert 1.7 <= slope <= 2.3
    ratios = [dv / d**2 for dv, d in zip(devs, DELTAS)]
    assert max(ratios) / min(ratios) < 1.3
    assert devs[DELTAS.index(0.05)] < devs[DELTAS.index(0.1)]


# ---- Poincare inequality


def test_poincare_constant_function():
    y = np.linspace(0, 1, 101)
    res = poincare_check(y, np.full_like(y, 3.0), np.zeros_like(y))
    assert res.lhs == pytest.approx(0.0, abs=1e-28) and res.rhs == 0.0 and res.holds


def test_poincare_extremal_linear():
    y = np.linspace(0, 1, 2001)
    res = poincare_check(y, y, np.ones_like(y))
    assert res.lhs == pytest.approx(1 / 12, rel=1e-12)
    assert res.rhs == pytest.approx(1 / 12, rel=1e-12)
    assert res.lhs / res.rhs == pytest.approx(1.0, abs=1e-6)


def test_poincare_random_suite():
    from shockline.experiments import poincare_suite

    rep = poincare_suite(1000, 2001, seed=3)
    assert rep["violations"] == 0
    assert rep["max_ratio"] <= 1.0 + 1e-9


def test_poincare_flags_inconsistent_derivative():
    y = np.linspace(0, 1, 2001)
    assert not poincare_check(y, y, 0.5 * np.ones_like(y)).holds


# ---- perturbation sources


def test_sources_vanish_without_perturbation(oracle_profile):
    x = np.linspace(0, 200, 101)
    w = shifted_wave(oracle_profile, x, 0.0, 0.0, 80.0)
    F, G = perturbation_sources(0 * x, 0 * x, w, w.rho, GAS2)
    assert np.all(F == 0.0) and np.allclose(G, 0.0, atol=1e-18)


def test_sources_linear_part(oracle_profile):
    x = np.linspace(40, 120, 101)
    w = shifted_wave(oracle_profile, x, 0.0, 0.0, 80.0)
    phi, psi = 1e-3 * np.sin(x), 1e-3 * np.cos(x)
    F, _ = perturbation_sources(phi, psi, w, w.rho + phi, GAS2)
    assert np.allclose(F, -psi * w.rho_x - phi * w.u_x, rtol=1e-14, atol=0)


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0])
    assert fit_loglog_slope(x, 3 * x**2) == pytest.approx(2.0)


def test_nonpositive_boundary_trace_raises(oracle_profile):
    from shockline.diagnostics import DiagnosticError

    grid = Grid(60.0, 60)
    rho = np.ones(60)
    rho[:3] = [0.1, 1.0, 2.0]
    f = FluidField(3.0, rho, -rho)
    with pytest.raises(DiagnosticError) as exc:
        boundary_production(f, grid, oracle_profile, 0.0, 30.0)
    assert exc.value.t == 3.0
