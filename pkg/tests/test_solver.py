import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shockline.hugoniot import GasParams
from shockline.solver import (
    Boundary,
    ConfigError,
    FluidField,
    Grid,
    Perturbation,
    PositivityError,
    RunState,
    SimConfig,
    apply_boundary,
    bump,
    cfl_dt,
    flux,
    init_data,
    initial_norms,
    mass,
    physical_flux,
    run,
    step,
    validate_config,
    viscous_term,
)

GAS = GasParams(2.0)

# ---- initial data


def test_unperturbed_init_is_sampled_profile(oracle_profile):
    cfg = SimConfig(N=600, perturbation=Perturbation(amplitude=0.0))
    f = init_data(cfg, oracle_profile)
    v = oracle_profile(cfg.grid.x - cfg.beta)
    assert np.array_equal(f.rho, v.rho)
    assert np.allclose(f.u, v.u, rtol=0, atol=1e-15)


def test_init_norm_bounded_by_bump_and_tail(oracle_profile):
    eps = 0.01
    cfg = SimConfig(N=3000, perturbation=Perturbation(amplitude=eps))
    grid = cfg.grid
    f = init_data(cfg, oracle_profile)
    f0 = init_data(cfg.replace(perturbation=Perturbation(amplitude=0.0)), oracle_profile)
    norms = initial_norms(f, grid, oracle_profile.conn, cfg.beta)
    tail = initial_norms(f0, grid, oracle_profile.conn, cfg.beta)["l2_far_right"]
    # the bump enters both rho and u
    bump_norm = math.sqrt(2 * np.sum(bump((grid.x - cfg.beta) / 10.0) ** 2) * grid.h)
    assert norms["l2_far_right"] <= eps * bump_norm + tail


@pytest.mark.parametrize("eps", [0.01, 0.05, 0.1])
def test_init_density_stays_above_half(oracle_profile, eps):
    cfg = SimConfig(N=600, perturbation=Perturbation(amplitude=-eps))
    f = init_data(cfg, oracle_profile)
    assert f.rho.min() >= 0.5 * cfg.rho_plus


def test_bump_properties():
    s = np.linspace(-1.5, 1.5, 301)
    b = bump(s)
    assert b[150] == 1.0
    assert np.all(b[np.abs(s) >= 1] == 0.0)
    assert np.all(b >= 0)


def test_validate_rejects_short_domain(oracle_profile):
    with pytest.raises(ConfigError, match="too short"):
        validate_config(SimConfig(L=150.0), oracle_profile.conn, oracle_profile)


def test_validate_rejects_boundary_perturbation(oracle_profile):
    cfg = SimConfig(perturbation=Perturbation(amplitude=0.01, center=5.0))
    with pytest.raises(ConfigError, match="x = 0"):
        validate_config(cfg, oracle_profile.conn, oracle_profile)


def test_validate_rejects_unknown_shift_mode(oracle_profile):
    with pytest.raises(ConfigError):
        validate_config(SimConfig(shift_mode="bogus"), oracle_profile.conn, oracle_profile)


# ---- numerical flux


def test_flux_consistency():
    f0, f1, _ = flux((1.0, -1.0), (1.0, -1.0), GAS)
    assert (f0, f1) == (-1.0, 2.0)


def test_flux_symmetric_states_zero_mass_flux():
    f0, _, _ = flux((1.3, 0.4), (1.3, -0.4), GAS)
    assert f0 == 0.0


states = st.tuples(st.floats(0.05, 5.0), st.floats(-3.0, 3.0))


@settings(max_examples=1000, deadline=None)
@given(states, states)
def test_flux_within_dissipation_bound(left, right):
    (rl, ul), (rr, ur) = left, right
    f0, f1, s = flux(left, right, GAS)
    c = max(abs(ul) + math.sqrt(2 * rl), abs(ur) + math.sqrt(2 * rr))
    assert s == pytest.approx(c)
    gl, gr = physical_flux(rl, ul, GAS), physical_flux(rr, ur, GAS)
    for k, (fk, du) in enumerate([(f0, rr - rl), (f1, rr * ur - rl * ul)]):
        avg = 0.5 * (gl[k] + gr[k])
        assert abs(fk - avg) <= 0.5 * s * abs(du) * (1 + 1e-12) + 1e-12


# ---- viscous term


def test_viscous_term_annihilates_affine():
    x = np.linspace(0, 1, 50)
    assert np.allclose(viscous_term(3 * x - 1, x[1] - x[0]), 0.0, atol=1e-10)


def test_viscous_term_exact_on_quadratic():
    h = 0.25
    x = np.arange(-4, 5) * h
    assert np.all(viscous_term(x**2, h) == 2.0)


def test_viscous_term_second_order_on_profile(oracle_profile):
    errs, hs = [], [1.0, 0.5, 0.25, 0.125]
    for h in hs:
        x = np.arange(-40.0, 40.0 + h / 2, h)
        v = oracle_profile(x)
        d2 = viscous_term(v.u, h)
        errs.append(np.max(np.abs(d2 - v.ddu[1:-1])))
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order >= 1.9


# ---- boundary ghosts


def test_left_ghost_mirrors_about_boundary_velocity():
    bc = Boundary(-0.9, 1.0, -1.0)
    rho = np.full(20, 1.07)
    u = np.full(20, -0.9)
    r, v = apply_boundary(FluidField(0.0, rho, rho * u), bc)
    assert np.all(v[:2] == -0.9)
    assert np.all(r[:2] == rho[0])


def test_right_ghost_is_far_field():
    bc = Boundary(-0.9, 1.0, -1.0)
    rng = np.random.default_rng(0)
    rho = 1 + 0.1 * rng.random(20)
    u = -1 + 0.1 * rng.random(20)
    r, v = apply_boundary(FluidField(0.0, rho, rho * u), bc)
    assert np.all(r[-2:] == 1.0) and np.all(v[-2:] == -1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(-2.0, 0.0), st.floats(-1.2, -0.8))
def test_face_velocity_at_boundary(u0, u_left):
    bc = Boundary(u_left, 1.0, -1.0)
    rho = np.ones(20)
    u = np.full(20, u0)
    _, v = apply_boundary(FluidField(0.0, rho, rho * u), bc)
    assert 0.5 * (v[1] + v[2]) == pytest.approx(u_left, abs=1e-15)


# ---- time step


def test_cfl_example():
    grid = Grid(1.6, 16)  # h = 0.1
    f = FluidField(0.0, np.ones(16), -np.ones(16))
    dt = cfl_dt(f, grid, GAS, 0.4)
    assert dt == pytest.approx(0.4 * min(0.1 / (1 + math.sqrt(2)), 0.005), rel=1e-15)
    assert dt == pytest.approx(0.002)


def test_cfl_refinement_halves_at_least():
    f1 = FluidField(0.0, np.ones(32), -np.ones(32))
    f2 = FluidField(0.0, np.ones(64), -np.ones(64))
    dt1 = cfl_dt(f1, Grid(32.0, 32), GAS, 0.4)
    dt2 = cfl_dt(f2, Grid(32.0, 64), GAS, 0.4)
    assert dt2 <= dt1 / 2


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 2.0))
def test_cfl_shrinks_with_faster_waves(amp):
    grid = Grid(20.0, 20)  # advective limit dominates
    rho = np.ones(20)
    base = cfl_dt(FluidField(0.0, rho, -rho), grid, GAS, 0.4)
    u = -np.ones(20)
    u[7] -= amp
    assert cfl_dt(FluidField(0.0, rho, rho * u), grid, GAS, 0.4) < base


# ---- conservation and consistency


def test_constant_state_preserved_exactly():
    grid = Grid(10.0, 50)
    bc = Boundary(-1.0, 1.0, -1.0)
    f = FluidField(0.0, np.ones(50), -np.ones(50))
    for _ in range(200):
        f = step(f, 0.004, grid, GAS, bc).field
    assert np.all(f.rho == 1.0) and np.all(f.mom == -1.0)


def test_mass_balance_per_step(oracle_profile):
    cfg = SimConfig(N=600, perturbation=Perturbation(amplitude=0.02))
    grid, bc = cfg.grid, cfg.boundary()
    f = init_data(cfg, oracle_profile)
    for _ in range(100):
        dt = cfl_dt(f, grid, GAS, 0.4)
        res = step(f, dt, grid, GAS, bc)
        assert abs(mass(res.field, grid) - mass(f, grid) - res.mass_inflow) <= 1e-12 * mass(f, grid)
        f = res.field


def test_positivity_error_reports_time():
    grid = Grid(10.0, 20)
    bc = Boundary(-0.5, 1.0, -1.0)
    rho = np.ones(20)
    rho[10] = 1e-6
    f = FluidField(1.5, rho, rho * np.linspace(3, -3, 20))
    with pytest.raises(PositivityError) as exc:
        step(f, 0.5, grid, GAS, bc)
    assert exc.value.t == pytest.approx(2.0)


# ---- the run loop


def test_zero_final_time_single_record(oracle_profile):
    cfg = SimConfig(N=600, t_final=0.0, perturbation=Perturbation(amplitude=0.01))
    recs = list(run(cfg, oracle_profile))
    assert len(recs) == 1
    f0 = init_data(cfg, oracle_profile)
    assert np.array_equal(recs[0].field.rho, f0.rho)
    assert recs[0].X == 0.0


def test_run_is_deterministic(oracle_profile):
    cfg = SimConfig(N=600, t_final=2.0, perturbation=Perturbation("random", amplitude=0.01), seed=7)
    a = [r.diag.row() + [r.X] for r in run(cfg, oracle_profile)]
    b = [r.diag.row() + [r.X] for r in run(cfg, oracle_profile)]
    assert a == b


def test_random_perturbation_depends_on_seed(oracle_profile):
    x = np.linspace(60, 100, 400)
    from shockline.solver import perturbation_values

    p = Perturbation("random", amplitude=0.01)
    a = perturbation_values(SimConfig(perturbation=p, seed=1), x)
    b = perturbation_values(SimConfig(perturbation=p, seed=2), x)
    assert not np.array_equal(a, b)


def test_run_record_cadence_and_mass(oracle_profile):
    cfg = SimConfig(N=600, t_final=4.0, records_per_unit=5, snapshot_stride=3,
                    perturbation=Perturbation(amplitude=0.01))
    st_ = RunState(oracle_profile.conn, oracle_profile, cfg.grid, None)
    recs = list(run(cfg, oracle_profile, st_))
    t = np.array([r.diag.t for r in recs])
    rec_dt = 1.0 / (5 * oracle_profile.conn.sigma)
    assert t[0] == 0.0 and t[-1] == 4.0
    assert np.all(np.diff(t) > 0)
    assert len(recs) == math.floor(4.0 / rec_dt) + 2 or len(recs) == math.ceil(4.0 / rec_dt) + 1
    snaps = [i for i, r in enumerate(recs) if r.field is not None]
    assert snaps[0] == 0 and snaps[-1] == len(recs) - 1
    assert st_.mass_error_max <= 1e-10 * st_.mass0
