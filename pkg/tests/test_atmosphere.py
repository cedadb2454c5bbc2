import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvdlink.channel import (
    AtmosphereState,
    AtmosphericChannel,
    complex_refractivity,
    load_bundled_catalog,
    saturation_vapor_pressure,
    specific_attenuation_db_per_km,
    synthesize_transfer_function,
    vapor_density_from_relative_humidity,
)
from gvdlink.channel.catalog import SpectralLine
from gvdlink.channel.transfer import FrequencyGrid
from gvdlink.errors import DomainError

LINES = load_bundled_catalog()
STD = AtmosphereState(288.15, 101325.0, 7.5)
DRY = AtmosphereState(288.15, 101325.0, 0.0)


def vvw_oracle(line, atm, f_hz):
    """Single-line refractivity written out longhand in scalar complex arithmetic."""
    theta = 300.0 / atm.temperature
    rv = 8.314462618 / 0.01801528
    e = atm.water_vapor_density * 1e-3 * rv * atm.temperature / 100.0  # hPa
    pd = atm.pressure / 100.0 - e
    absorber, x = (e, 3.5) if line.species == "h2o" else (pd, 3.0)
    s = line.line_intensity * absorber * theta**x * math.exp(1.4387769 * line.lower_state_energy * (1 / 300 - 1 / atm.temperature))
    gamma_ghz = (line.air_broadening / 1e7 * pd + line.self_broadening / 1e7 * e) * theta**line.temperature_exponent
    f, f0 = f_hz / 1e9, line.center_frequency / 1e9
    return s * (f / f0) * (1 / complex(f0 - f, -gamma_ghz) - 1 / complex(f0 + f, gamma_ghz))


@pytest.mark.parametrize("index", [0, 3, 40, 50])
@pytest.mark.parametrize("f", [22e9, 183.31e9, 250e9, 61.15e9])
def test_single_line_matches_longhand_oracle(index, f):
    line = LINES[index]
    got = complex_refractivity([line], STD, np.array([f]))[0]
    want = vvw_oracle(line, STD, f)
    assert got == pytest.approx(want, rel=1e-12)


def test_absorption_is_positive_everywhere():
    f = np.linspace(1e9, 1e12, 2000)
    assert np.all(complex_refractivity(LINES, STD, f).imag > 0)


def test_dispersion_changes_sign_across_an_isolated_line():
    f0 = 22.23508e9
    n = complex_refractivity(LINES[:1], STD, np.array([f0 - 3e9, f0 + 3e9])).real
    assert n[0] > 0 > n[1]


# Reference magnitudes from the well-known sea-level attenuation curves.
@pytest.mark.parametrize(
    "atm, f, lo, hi",
    [
        (STD, 22.235e9, 0.15, 0.25),
        (STD, 183.31e9, 20.0, 40.0),
        (DRY, 60e9, 10.0, 17.0),
        (STD, 94e9, 0.3, 0.7),
    ],
)
def test_attenuation_magnitudes(atm, f, lo, hi):
    assert lo < specific_attenuation_db_per_km(LINES, atm, np.array([f]))[0] < hi


def test_attenuation_db_per_km_matches_transfer_function():
    grid = FrequencyGrid(249e9, 0.5e9, 5)
    tf = synthesize_transfer_function(LINES, STD, grid, 1000.0)
    np.testing.assert_allclose(tf.attenuation_db, specific_attenuation_db_per_km(LINES, STD, grid.frequencies), rtol=1e-12)
    n2 = complex_refractivity(LINES, STD, grid.frequencies).imag
    np.testing.assert_allclose(tf.attenuation_db, 0.1820 * grid.frequencies / 1e9 * n2, rtol=5e-4)  # 0.1820 is rounded


def test_relative_humidity_helper():
    # 60 % relative humidity at 20 C
    assert vapor_density_from_relative_humidity(60.0, 293.15) == pytest.approx(10.37, abs=0.005)
    assert saturation_vapor_pressure(373.15) == pytest.approx(101325, rel=0.01)
    assert AtmosphereState.from_relative_humidity(0.0, 293.15).water_vapor_density == 0.0


@pytest.mark.parametrize(
    "kwargs", [dict(temperature=0.0), dict(pressure=-1.0), dict(water_vapor_density=-0.1)]
)
def test_state_validation(kwargs):
    with pytest.raises(DomainError):
        AtmosphereState(**kwargs)


def test_nonpositive_frequency_rejected():
    with pytest.raises(DomainError):
        complex_refractivity(LINES, STD, np.array([0.0, 1e9]))


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 20e3), st.floats(0.0, 20e3))
def test_channel_composability(l1, l2):
    channel = AtmosphericChannel(LINES, STD)
    f = np.linspace(230e9, 270e9, 65)
    joint = channel.response(f, l1 + l2)
    np.testing.assert_allclose(joint, channel.response(f, l1) * channel.response(f, l2), rtol=1e-9, atol=1e-300)


def test_zero_length_is_identity():
    tf = synthesize_transfer_function(LINES, STD, FrequencyGrid(240e9, 1e9, 21), 0.0)
    assert np.all(tf.values == 1.0)


def test_exponent_cache_reuses_summation():
    channel = AtmosphericChannel(LINES, STD, cache_size=2)
    f = np.linspace(240e9, 260e9, 11)
    a = channel.exponent(f)
    assert channel.exponent(f.copy()) is a
    channel.exponent(f + 1)
    channel.exponent(f + 2)
    assert channel.exponent(f) is not a
