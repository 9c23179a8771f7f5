"""Shared fixtures for the Chronos test suite."""

import math

import numpy as np
import pytest

from chronos.basis import EnergyBasis, WaveFunction
from chronos.config import Scenario, ScenarioConfig, SystemConfig


@pytest.fixture
def system() -> SystemConfig:
    return SystemConfig(gamma=0.01)


@pytest.fixture
def system_pi6() -> SystemConfig:
    return SystemConfig(gamma=math.pi / 6)


@pytest.fixture
def small_basis(system) -> EnergyBasis:
    return EnergyBasis(system, 8)


@pytest.fixture
def random_state(small_basis) -> WaveFunction:
    rng = np.random.default_rng(7)
    coefficients = rng.standard_normal(small_basis.dim) + 1j * rng.standard_normal(small_basis.dim)
    return WaveFunction(small_basis, coefficients).normalized()


@pytest.fixture
def scenario_config(tmp_path):
    """Factory for scenario configs writing under tmp_path."""

    def make(scenario: Scenario, **overrides) -> ScenarioConfig:
        values = {"out": tmp_path / "out" / str(scenario), "cache": tmp_path / "cache"}
        values.update(overrides)
        return ScenarioConfig(scenario=scenario, **values)

    return make
