import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gvdlink.errors import DomainError
from gvdlink.qam import (
    QAM4,
    bits_to_indices,
    decide,
    decide_indices,
    decision_region,
    demodulate,
    modulate,
    square_qam,
)

S = 1 / math.sqrt(2)


def test_4qam_gray_map():
    pts = QAM4.points
    assert pts[0] == pytest.approx(cmath.exp(1j * math.pi / 4))
    assert pts[1] == pytest.approx(-S + 1j * S)  # 01 -> quadrant II
    assert pts[3] == pytest.approx(-S - 1j * S)  # 11 -> quadrant III
    assert pts[2] == pytest.approx(S - 1j * S)  # 10 -> quadrant IV


@pytest.mark.parametrize("order", [4, 16, 64])
def test_unit_energy_and_gray_neighbours(order):
    c = square_qam(order)
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0)
    dmin = np.min(np.abs(c.points[:, None] - c.points[None, :]) + 10 * np.eye(order))
    labels = c.labels
    for i in range(order):
        for j in range(order):
            if i != j and abs(c.points[i] - c.points[j]) < dmin * 1.01:
                assert np.sum(labels[i] != labels[j]) == 1


@pytest.mark.parametrize("order", [2, 8, 12])
def test_non_square_orders_rejected(order):
    with pytest.raises(DomainError):
        square_qam(order)


@given(st.lists(st.integers(0, 1), min_size=0, max_size=64).filter(lambda b: len(b) % 4 == 0))
def test_bit_round_trip(bits):
    for c in (QAM4, square_qam(16)):
        np.testing.assert_array_equal(demodulate(modulate(bits, c), c), np.array(bits, dtype=np.uint8))


def test_ties_go_to_the_positive_side():
    assert decide(0j) == (0, (0, 0))
    assert decide(-1e-300 + 0j)[0] == 1
    assert decide(0 - 1e-300j)[0] == 2


def test_decision_regions_are_quadrants():
    r = decision_region(QAM4, 0)
    assert (r.i_low, r.i_high, r.q_low, r.q_high) == (0.0, math.inf, 0.0, math.inf)
    assert r.contains(0j) and not r.contains(-1e-9 + 1j)
    r3 = decision_region(QAM4, 3)
    assert (r3.i_low, r3.i_high) == (-math.inf, 0.0)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_decision_agrees_with_region(y):
    c = square_qam(16)
    idx = int(decide_indices(np.array([y]), c)[0])
    assert decision_region(c, idx).contains(y)


def test_bits_validation():
    with pytest.raises(DomainError):
        bits_to_indices([0, 1, 1])
    with pytest.raises(DomainError):
        bits_to_indices([0, 2])
