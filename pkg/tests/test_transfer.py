import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gvdlink.channel import (
    ChannelTransferFunction,
    FrequencyGrid,
    PhaseTaylorCoefficients,
    PolynomialChannel,
    TabulatedChannel,
    complex_refractivity,
    export_transfer_function,
    fit_taylor_coefficients,
    identity_channel,
    import_transfer_function,
    link_grid,
    load_bundled_catalog,
    polynomial_phase_channel,
    synthesize_transfer_function,
    unwrap_phase,
)
from gvdlink.channel.atmosphere import SPEED_OF_LIGHT
from gvdlink.errors import DomainError, FormatError, ResolutionError

from conftest import CARRIER, HUMID

W0 = 2 * math.pi * CARRIER


def test_link_grid_puts_carrier_on_center_index():
    g = link_grid(CARRIER, 30e9, 0.5)
    assert g.step == 30e9 / 1024
    assert g.frequencies[g.count // 2] == pytest.approx(CARRIER, abs=1e-3)
    assert g.span >= 8 * 45e9
    assert g.count % 2 == 0


def test_grid_validation():
    with pytest.raises(DomainError):
        FrequencyGrid(0.0, 0.0, 10)
    with pytest.raises(DomainError):
        FrequencyGrid(0.0, 1.0, 1)


def test_unwrap_recovers_a_steep_ramp_anchored_at_reference():
    phase = 0.4 * np.arange(200) - 30.0
    got = unwrap_phase(np.angle(np.exp(1j * phase)), anchor=75)
    want = phase - 2 * np.pi * np.round(phase[75] / (2 * np.pi))
    np.testing.assert_allclose(got, want, atol=1e-12)
    assert abs(got[75]) <= math.pi


def test_unwrap_refuses_ambiguous_steps():
    with pytest.raises(ResolutionError):
        unwrap_phase(np.angle(np.exp(1j * 2.0 * np.arange(10))))


@settings(max_examples=40, deadline=None)
@given(
    phi0=st.floats(-3.0, 3.0),
    phi1=st.floats(-2e-10, 2e-10),
    phi2=st.floats(-5e-22, 5e-22),
    phi3=st.floats(-5e-33, 5e-33),
)
def test_taylor_round_trip(phi0, phi1, phi2, phi3):
    coeffs = PhaseTaylorCoefficients(W0, (phi0, phi1, phi2, phi3))
    grid = FrequencyGrid.centered(CARRIER, 30e9 / 256, 1025)
    tf = polynomial_phase_channel(coeffs, 1.5, grid)
    fit = fit_taylor_coefficients(tf, W0, order=3, half_window_hz=22.5e9)
    assert fit.coefficients[0] == pytest.approx(phi0, abs=1e-9)
    assert fit.coefficients[1] == pytest.approx(phi1, abs=1e-18)
    assert fit.coefficients[2] == pytest.approx(phi2, abs=1e-28)
    assert fit.coefficients[3] == pytest.approx(phi3, abs=1e-38)
    np.testing.assert_allclose(tf.attenuation_db, 1.5)


def test_catalog_gdd_matches_finite_difference_of_refractivity():
    lines = load_bundled_catalog()
    length = 10e3
    grid = FrequencyGrid.centered(CARRIER, 30e9 / 1024, 3073)
    tf = synthesize_transfer_function(lines, HUMID, grid, length)
    fit = fit_taylor_coefficients(tf, W0, order=4, half_window_hz=22.5e9)

    # phi(w) = w L N'(w) 1e-6 / c; second derivative by central differences
    h = 2 * math.pi * 1e9

    def phi(w):
        return w * length * 1e-6 * complex_refractivity(lines, HUMID, np.array([w / (2 * math.pi)]))[0].real / SPEED_OF_LIGHT

    fd = (phi(W0 + h) - 2 * phi(W0) + phi(W0 - h)) / h**2
    assert fit.gdd == pytest.approx(fd, rel=1e-3)
    assert 2.5e-22 < fit.gdd < 3.8e-22  # ~3.1e-23 s^2/km at 10.37 g/m^3


def test_polynomial_channel_scales_with_length():
    base = PhaseTaylorCoefficients(W0, (0.0, 0.0, 3e-23, 1e-34))
    ch = PolynomialChannel(base, attenuation_db=4.0, reference_length=1e3)
    f = CARRIER + np.linspace(-20e9, 20e9, 9)
    np.testing.assert_allclose(ch.response(f, 2e3), ch.response(f, 1e3) ** 2, rtol=1e-10)
    assert abs(ch.response(np.array([CARRIER]), 3e3)[0]) == pytest.approx(10 ** (-12 / 20))


def test_identity_channel():
    f = CARRIER + np.linspace(-1e9, 1e9, 5)
    assert np.all(identity_channel(CARRIER).response(f, 12e3) == 1.0)


def test_csv_round_trip_is_exact():
    grid = FrequencyGrid.centered(CARRIER, 1e8, 33)
    tf = synthesize_transfer_function(load_bundled_catalog(), HUMID, grid, 5e3)
    buf = io.StringIO()
    export_transfer_function(tf, buf)
    back = import_transfer_function(buf.getvalue().encode(), path_length=5e3)
    np.testing.assert_array_equal(back.values, tf.values)
    assert back.grid.count == 33


def test_import_rejects_bad_tables():
    with pytest.raises(FormatError):
        import_transfer_function(b"frequency_hz,real,imag\n1,0,0\n2,0,0\n4,0,0\n")
    with pytest.raises(FormatError):
        import_transfer_function(b"1,0,x\n2,0,0\n")


def test_tabulated_channel_interpolates_and_scales():
    grid = FrequencyGrid.centered(CARRIER, 5e7, 801)
    lines = load_bundled_catalog()
    table = synthesize_transfer_function(lines, HUMID, grid, 1e3)
    ch = TabulatedChannel(table)
    np.testing.assert_allclose(ch.response(grid.frequencies, 1e3), table.values, rtol=1e-9)
    f = CARRIER + np.linspace(-10e9, 10e9, 7) + 1.3e7
    exact = synthesize_transfer_function(lines, HUMID, FrequencyGrid(f[0], f[1] - f[0], 7), 2e3).values
    np.testing.assert_allclose(ch.response(f, 2e3), exact, rtol=1e-5)
    with pytest.raises(DomainError):
        ch.response(np.array([CARRIER + 30e9]), 1e3)


def test_product_requires_same_grid():
    a = ChannelTransferFunction(FrequencyGrid(1.0, 1.0, 3), np.ones(3))
    b = ChannelTransferFunction(FrequencyGrid(2.0, 1.0, 3), np.ones(3))
    with pytest.raises(DomainError):
        a * b
    assert np.all((a * a).values == 1)
