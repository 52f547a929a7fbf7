import numpy as np
import pytest
from hypothesis import strategies as st

from aap_altitude import model
from aap_altitude.errors import AltitudeError


@pytest.fixture(scope="session")
def params():
    return model.default_scenario()


@pytest.fixture(scope="session")
def coeffs(params):
    return model.derive_coefficients(params)


def random_scenario(rng):
    """Draw a feasible scenario around the reference one; retries on infeasible draws."""
    while True:
        try:
            p = model.default_scenario(
                h0=10 ** rng.uniform(-4.5, -3.5),
                p_t_dbm=rng.uniform(0, 20),
                phi_deg=rng.uniform(25, 70),
                rho_ue=10 ** rng.uniform(-3.5, -1.5),
                hover_time_s=rng.uniform(100, 1000),
                r0_bps=rng.uniform(0, 60e6),
                h_min_m=rng.uniform(5, 30),
                h_max_m=rng.uniform(80, 300),
                energy=model.EnergyConstants(
                    315 * rng.uniform(0, 2), -211.261, 4.917 * rng.uniform(0, 2), 275.204
                ),
            )
            model.derive_coefficients(p)
            return p
        except AltitudeError:
            continue


@pytest.fixture(scope="session")
def random_scenarios():
    rng = np.random.default_rng(20200401)
    return [random_scenario(rng) for _ in range(20)]


scenario_strategy = st.builds(
    lambda seed: random_scenario(np.random.default_rng(seed)),
    st.integers(min_value=0, max_value=2**32 - 1),
)
