"""Shared fixtures and the acceptance-criterion report."""

import pytest

from gvdlink.channel import AtmosphereState
from gvdlink.link import Link, catalog_channel, pure_gdd_channel
from gvdlink.shaping import PulseShapeSpec

CARRIER = 250e9
HUMID = AtmosphereState(temperature=293.15, pressure=101325.0, water_vapor_density=10.37)

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def humid_channel():
    return catalog_channel(HUMID)


@pytest.fixture(scope="session")
def link30(humid_channel):
    return Link(humid_channel, CARRIER, PulseShapeSpec(30e9, 0.5))


@pytest.fixture(scope="session")
def gdd_link():
    """30 GBd link over a pure-GDD channel; path length in metres equals phi2 / (1e-22 s^2)."""

    def make(gdd_per_metre=1e-22, symbol_rate=30e9, rolloff=0.5, split="matched-root-pair", span=3):
        return Link(pure_gdd_channel(CARRIER, gdd_per_metre), CARRIER, PulseShapeSpec(symbol_rate, rolloff, split), span)

    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
