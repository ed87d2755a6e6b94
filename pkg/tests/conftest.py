import pytest

from shockline.hugoniot import EndState, GasParams, solve_hugoniot
from shockline.profile import integrate_profile

DELTAS = (0.2, 0.1, 0.05, 0.025)


def connection(delta, rho_plus=1.0, u_plus=-1.0, gamma=2.0):
    return solve_hugoniot(EndState(rho_plus, u_plus), u_plus + delta, GasParams(gamma))


@pytest.fixture(scope="session")
def gas2():
    return GasParams(2.0)


@pytest.fixture(scope="session")
def oracle_conn():
    return connection(0.1)


@pytest.fixture(scope="session")
def oracle_profile(oracle_conn):
    return integrate_profile(oracle_conn)


@pytest.fixture(scope="session")
def profile_family():
    return {d: integrate_profile(connection(d)) for d in DELTAS}


# criterion id -> (passed, detail); filled by test_acceptance, printed at the end of the session
ACCEPTANCE = {}


def record_acceptance(cid, passed, detail):
    ACCEPTANCE[cid] = (bool(passed), detail)
    print(f"ACCEPTANCE {cid}: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'} - {detail}")
