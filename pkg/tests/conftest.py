"""Shared scenario fixtures.

Full-size runs are expensive enough to share: every fixture here is
session-scoped and read-only for the tests that consume it.
"""

from __future__ import annotations

from dataclasses import replace

import pytest

from cbtcsim.channel import Medium
from cbtcsim.config import ScenarioConfig
from cbtcsim.sim import run_scenario, sweep_fhss

TRACED_TRAIN = 14


def leaky_cfg(jam: bool, demand: bool = False) -> ScenarioConfig:
    cfg = ScenarioConfig()
    if demand:
        cfg = replace(cfg, demand_source="synthetic")
    return replace(cfg, jammer=replace(cfg.jammer, active=jam))


def free_cfg(jam: bool) -> ScenarioConfig:
    cfg = ScenarioConfig()
    return replace(
        cfg,
        channel=replace(cfg.channel, medium=Medium.FREE),
        jammer=replace(cfg.jammer, active=jam),
    )


@pytest.fixture(scope="session")
def baseline_leaky():
    """Jammer off, leaky medium, synthetic demand."""
    return run_scenario(leaky_cfg(jam=False, demand=True))


@pytest.fixture(scope="session")
def attack_leaky():
    """Jammer on, leaky medium, synthetic demand, one train traced."""
    return run_scenario(leaky_cfg(jam=True, demand=True),
                        trace_train=TRACED_TRAIN)


@pytest.fixture(scope="session")
def baseline_free():
    return run_scenario(free_cfg(jam=False))


@pytest.fixture(scope="session")
def attack_free():
    return run_scenario(free_cfg(jam=True), trace_train=TRACED_TRAIN)


@pytest.fixture(scope="session")
def fhss_sweep():
    """Train impact for n in {1,2,4,6,8,10}, common jammer-off baseline."""
    return sweep_fhss(leaky_cfg(jam=False), [1, 2, 4, 6, 8, 10])
