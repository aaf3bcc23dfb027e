import numpy as np
import pytest

from fimbeam import (FimGeometry, ScenarioGeometry, ScatteringEnvironment, make_link_budget,
                     noise_power, sample_environment, sample_user_positions)

CARRIER = 28e9


def make_scenario(seed, n_x=2, n_z=2, users=4, paths=8):
    """A reference-setup realization: geometry, link budget and environment."""
    rng = np.random.default_rng(seed)
    geom = FimGeometry.half_wavelength(n_x, n_z, CARRIER)
    scen = ScenarioGeometry(user_count=users)
    link = make_link_budget(sample_user_positions(rng, scen), 1.0, 2.2, geom.wavelength,
                            noise_power(-174, 1e8))
    env = sample_environment(rng, scen, paths, link)
    return geom, link, env


def unit_environment(rng, users, paths):
    """Environment with unit-variance path gains (no path loss)."""
    az = rng.uniform(0, np.pi, paths)
    el = rng.uniform(0, np.pi, paths)
    g = (rng.standard_normal((users, paths)) + 1j * rng.standard_normal((users, paths))) / np.sqrt(2)
    return ScatteringEnvironment(az, el, g, np.ones((users, paths)))


def random_channel(rng, n, k):
    return (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
