"""Shared fixtures: canonical qubit observables, schedules, and the
expensive high-resolution walk reused by several tests."""

from __future__ import annotations

import numpy as np
import pytest

import seqmeas as sm
from seqmeas.joint import JointPointerSetup, pointer_joint_distribution

from oracles import SX, SY, SZ


@pytest.fixture(scope="session")
def pauli():
    return {
        "x": sm.spectral_decompose(SX),
        "y": sm.spectral_decompose(SY),
        "z": sm.spectral_decompose(SZ),
    }


@pytest.fixture(scope="session")
def sigma_third():
    """Qubit operator at 60 degrees from x in the x-y plane."""
    theta = np.pi / 3
    return sm.spectral_decompose(np.cos(theta) * SX + np.sin(theta) * SY)


@pytest.fixture(scope="session")
def qubit_xy_schedule(pauli):
    """Prepare along +x, free evolution, measure along y."""
    return sm.Schedule(
        times=(0.0, 1.0),
        observables=(pauli["x"], pauli["y"]),
        evolution=sm.Evolution.zero(2),
        prep_index=1,
    )


@pytest.fixture(scope="session")
def qubit_third_schedule(pauli, sigma_third):
    """Prepare along +x, measure at 60 degrees in the x-y plane."""
    return sm.Schedule(
        times=(0.0, 1.0),
        observables=(pauli["x"], sigma_third),
        evolution=sm.Evolution.zero(2),
        prep_index=1,
    )


@pytest.fixture(scope="session")
def up_states():
    return {
        "x": np.array([1.0, 1.0]) / np.sqrt(2.0),
        "y": np.array([1.0, 1.0j]) / np.sqrt(2.0),
        "z": np.array([1.0, 0.0], dtype=complex),
    }


@pytest.fixture(scope="session")
def reading_grid_41():
    return np.linspace(-1.5, 1.5, 41)


@pytest.fixture(scope="session")
def walk_map_hires(up_states, reading_grid_41):
    """Fully overlapping pointer map from the 2^10-step walk (expensive;
    computed once per session)."""
    setup = JointPointerSetup.from_pre_post(
        up_states["x"], up_states["y"], 0.0, width=0.05, steps=1024
    )
    grid = reading_grid_41
    return pointer_joint_distribution(setup, grid, grid)
