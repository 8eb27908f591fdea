import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from inexact_picard.model import CouplingSettings, CrossSectionSet, SlabModel, validate

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

PWR_XS = CrossSectionSet()
K_INF = 0.0255 / (0.04 * 0.534)


def heat_balance_model(**kw):
    # inlet 560 K with a 30 K rise keeps the mean coolant at 575 K
    return SlabModel(coolant_mode="heat-balance", T_m=560.0, coolant_rise=30.0, **kw)


@pytest.fixture(scope="session")
def xs():
    return PWR_XS


@pytest.fixture(scope="session")
def constant_problem():
    return validate(SlabModel(), PWR_XS, CouplingSettings())


@pytest.fixture(scope="session")
def coupled_problem():
    return validate(heat_balance_model(), PWR_XS, CouplingSettings(accel="lpcmfd", coarsening=6))


@pytest.fixture(scope="session")
def unaccelerated_problem():
    return validate(heat_balance_model(), PWR_XS, CouplingSettings())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
