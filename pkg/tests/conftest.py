import numpy as np
import pytest

from ergospin.disorder import DisorderField, constant, uniform
from ergospin.interaction import Interaction, field_germ, xy_bond


def xy_field(seed=7, law=None, mu=1.0, gamma=0.3, nu=1):
    """XY chain with a random transverse field; the workhorse model of the suite."""
    law = uniform(0.0, 1.0) if law is None else law
    germs = [xy_bond(mu, gamma, nu, d) for d in range(nu)] + [field_germ(nu)]
    return Interaction(tuple(germs), {"default": DisorderField(seed, law, nu)})


def xy_uniform_field(h=0.4, mu=1.0, gamma=0.3):
    return xy_field(0, constant(h), mu, gamma)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
