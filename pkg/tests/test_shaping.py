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
    identity_channel,
    link_grid,
)
from gvdlink.errors import DomainError, SpanError
from gvdlink.link import Link
from gvdlink.shaping import (
    PulseShapeSpec,
    WeightVector,
    composite_impulse_response,
    extract_weights,
    filter_pair,
    raised_cosine_spectrum,
    symbol_offsets,
)

from conftest import CARRIER


def rc_pulse(t, T, beta):
    """Closed-form raised-cosine impulse response with unit value at t = 0."""
    x = t / T
    out = np.sinc(x) * np.cos(np.pi * beta * x)
    den = 1 - (2 * beta * x) ** 2
    sing = np.isclose(den, 0.0)
    out[~sing] /= den[~sing]
    out[sing] = np.pi / 4 * np.sinc(1 / (2 * beta))
    return out


def test_raised_cosine_spectrum_shape():
    rs, beta = 10e9, 0.5
    f = np.array([0.0, 2.5e9, 5e9, 7.5e9, 8e9])
    np.testing.assert_allclose(raised_cosine_spectrum(f, rs, beta), [1, 1, 0.5, 0, 0], atol=1e-15)
    np.testing.assert_array_equal(raised_cosine_spectrum(-f, rs, beta), raised_cosine_spectrum(f, rs, beta))


@pytest.mark.parametrize("beta", [0.2, 0.5, 1.0])
def test_identity_response_matches_closed_form(beta):
    link = Link(identity_channel(CARRIER), CARRIER, PulseShapeSpec(30e9, beta))
    h = link.impulse_response(0.0)
    T = 1 / 30e9
    t = np.linspace(-6.3 * T, 6.3 * T, 97)
    got = h.evaluate(t) / 30e9  # integral of the unit-peak spectrum is the symbol rate
    np.testing.assert_allclose(got.real, rc_pulse(t, T, beta), atol=1e-6)
    assert np.max(np.abs(got.imag)) < 1e-9


@settings(max_examples=30, deadline=None)
@given(
    rate=st.sampled_from([10e9, 15e9, 20e9, 30e9, 50e9]),
    beta=st.floats(0.0, 1.0),
    split=st.sampled_from(["matched-root-pair", "single-raised-cosine"]),
    span=st.integers(1, 5),
)
def test_nyquist_zero_weights(rate, beta, split, span):
    link = Link(identity_channel(CARRIER), CARRIER, PulseShapeSpec(rate, beta, split), span, oversample=256)
    w = link.weights(0.0)
    assert np.max(np.abs(w.weights)) < 1e-9
    assert abs(w.alignment_time) < 1e-9 / rate


@settings(max_examples=20, deadline=None)
@given(delay_symbols=st.floats(-20.0, 20.0))
def test_alignment_tracks_a_pure_delay(delay_symbols):
    rate = 30e9
    tau = delay_symbols / rate
    ch = PolynomialChannel(PhaseTaylorCoefficients(2 * math.pi * CARRIER, (0.7, tau, 0.0)))
    w = Link(ch, CARRIER, PulseShapeSpec(rate, 0.5)).weights(0.0)
    assert w.alignment_time == pytest.approx(tau, abs=1e-7 / rate)
    assert np.max(np.abs(w.weights)) < 1e-6
    assert np.angle(w.center_tap) == pytest.approx(-0.7, abs=1e-9)


def test_splits_give_the_same_weights(gdd_link):
    a = gdd_link(split="matched-root-pair").weights(2.5)
    b = gdd_link(split="single-raised-cosine").weights(2.5)
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-12)


def test_pure_gdd_weights_are_mirror_symmetric(gdd_link):
    w = gdd_link().weights(3.0).weights
    np.testing.assert_allclose(w[:3], w[3:][::-1], atol=1e-10)
    assert np.max(np.abs(w)) > 0.05


def test_weight_ordering():
    np.testing.assert_array_equal(symbol_offsets(3), [3, 2, 1, -1, -2, -3])
    assert WeightVector.zeros(2).weights.shape == (4,)
    with pytest.raises(DomainError):
        WeightVector(2, np.zeros(3))


def test_span_beyond_the_time_window_is_rejected():
    link = Link(identity_channel(CARRIER), CARRIER, PulseShapeSpec(30e9, 0.5), oversample=16)
    with pytest.raises(SpanError):
        extract_weights(link.impulse_response(0.0), link.pulse, p=9)


def test_off_grid_carrier_keeps_nyquist_zeros():
    pulse = PulseShapeSpec(30e9, 0.5)
    step = 30e9 / 512
    grid = FrequencyGrid(CARRIER - 2048.3 * step, step, 4096)
    tx, rx = filter_pair(pulse, grid, CARRIER)
    ones = ChannelTransferFunction(grid, np.ones(grid.count))
    h = composite_impulse_response(ones, tx, rx, CARRIER)
    assert h.frequency_offset != 0
    w = extract_weights(h, pulse, 3)
    assert np.max(np.abs(w.weights)) < 1e-6


def test_filters_must_cover_the_band():
    grid = link_grid(CARRIER, 30e9, 0.5, span_factor=1.0)
    with pytest.raises(DomainError):
        filter_pair(PulseShapeSpec(30e9, 0.5), FrequencyGrid(CARRIER, grid.step, 10), CARRIER)


def test_pulse_spec_validation():
    for kwargs in (dict(symbol_rate=0.0), dict(symbol_rate=1e9, rolloff=1.5), dict(symbol_rate=1e9, split="x")):
        with pytest.raises(DomainError):
            PulseShapeSpec(**kwargs)
    assert PulseShapeSpec(30e9, 0.5).occupied_bandwidth == 45e9


def test_impulse_csv_export(tmp_path):
    h = Link(identity_channel(CARRIER), CARRIER, PulseShapeSpec(30e9, 0.5), oversample=16).impulse_response(0.0)
    path = tmp_path / "h.csv"
    h.export_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "time_s,real,imag"
    assert len(rows) == h.samples.size + 1
