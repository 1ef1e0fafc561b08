"""Shared fixtures.

Scenario solves are the expensive part of the suite, so they are computed
once per session and handed out by name.
"""
import pytest

import garzfv


@pytest.fixture(scope="session")
def solved():
    """name -> (Scenario, Trajectory), cached across the whole session."""
    cache = {}

    def run(name: str):
        if name not in cache:
            sc = garzfv.scenario(name)
            traj = garzfv.solve_global(sc.data, sc.grid, sc.t_final,
                                       sc.model())
            cache[name] = (sc, traj)
        return cache[name]

    return run


@pytest.fixture(scope="session")
def audited(solved):
    """name -> (Scenario, Trajectory, RunReport), cached."""
    cache = {}

    def run(name: str):
        if name not in cache:
            sc, traj = solved(name)
            cache[name] = (sc, traj, garzfv.audit_trajectory(traj))
        return cache[name]

    return run
