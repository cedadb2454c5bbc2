"""Square m-QAM constellations with Gray mapping.

A symbol carries ``k = log2(m)`` bits, most significant first. The first
``k/2`` bits pick the quadrature level, the rest the in-phase level, each
through a Gray code whose all-zero word is the most positive level. For
4-QAM this gives::

    00 -> Q1 (e^{j pi/4})   01 -> Q2   11 -> Q3   10 -> Q4

Decisions are per-axis nearest level. A sample exactly on a threshold goes
to the more positive side, so ``0 + 0j`` decides to quadrant I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gvdlink.errors import DomainError


def _gray(n: np.ndarray) -> np.ndarray:
    return n ^ (n >> 1)


def _gray_inverse(g: np.ndarray) -> np.ndarray:
    n = g.copy()
    shift = g >> 1
    while np.any(shift):
        n ^= shift
        shift >>= 1
    return n


@dataclass(frozen=True, eq=False)
class Constellation:
    """Unit mean-energy square QAM alphabet.

    ``points[i]`` is the symbol whose bit label, read as a big-endian
    integer, equals ``i``.
    """

    order: int
    points: np.ndarray
    levels: np.ndarray  # per-axis amplitudes, most positive first

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.order))

    @property
    def bits_per_axis(self) -> int:
        return self.bits_per_symbol // 2

    @property
    def thresholds(self) -> np.ndarray:
        """Per-axis decision thresholds, descending."""
        return 0.5 * (self.levels[:-1] + self.levels[1:])

    @property
    def labels(self) -> np.ndarray:
        """Bit labels, shape ``(order, bits_per_symbol)``."""
        k = self.bits_per_symbol
        idx = np.arange(self.order)
        return ((idx[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)

    def index_of(self, point: complex, tol: float = 1e-9) -> int:
        i = int(np.argmin(np.abs(self.points - point)))
        if abs(self.points[i] - point) > tol:
            raise DomainError(f"{point} is not a constellation point")
        return i

    def region(self, index: int) -> "DecisionRegion":
        return decision_region(self, index)


def square_qam(order: int = 4) -> Constellation:
    k = math.log2(order) if order > 0 else 0
    if order < 4 or k != int(k) or int(k) % 2:
        raise DomainError(f"square QAM needs an order that is a power of 4, got {order}")
    half = int(k) // 2
    side = 1 << half
    scale = math.sqrt(3.0 / (2.0 * (side * side - 1)))
    levels = scale * (side - 1 - 2 * np.arange(side, dtype=float))
    idx = np.arange(order)
    q_word, i_word = idx >> half, idx & (side - 1)
    points = levels[_gray_inverse(i_word)] + 1j * levels[_gray_inverse(q_word)]
    points.setflags(write=False)
    levels.setflags(write=False)
    return Constellation(order, points, levels)


QAM4 = square_qam(4)


def bits_to_indices(bits: Sequence[int] | np.ndarray, c: Constellation = QAM4) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64).ravel()
    k = c.bits_per_symbol
    if b.size % k:
        raise DomainError(f"bit count {b.size} is not a multiple of {k}")
    if b.size and (b.min() < 0 or b.max() > 1):
        raise DomainError("bits must be 0 or 1")
    words = b.reshape(-1, k)
    return words @ (1 << np.arange(k - 1, -1, -1))


def indices_to_bits(indices: np.ndarray, c: Constellation = QAM4) -> np.ndarray:
    k = c.bits_per_symbol
    idx = np.asarray(indices, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8).ravel()


def modulate(bits: Sequence[int] | np.ndarray, c: Constellation = QAM4) -> np.ndarray:
    """Gray-map a bit sequence onto unit mean-energy symbols."""
    return c.points[bits_to_indices(bits, c)]


def _axis_position(x: np.ndarray, c: Constellation) -> np.ndarray:
    # Number of thresholds strictly above x; ties go to the more positive level.
    thr = c.thresholds
    return np.sum(x[..., None] < thr, axis=-1)


def decide_indices(y: np.ndarray, c: Constellation = QAM4) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    half = c.bits_per_axis
    i_word = _gray(_axis_position(y.real, c))
    q_word = _gray(_axis_position(y.imag, c))
    return (q_word << half) | i_word


def decide(y: complex, c: Constellation = QAM4) -> tuple[int, tuple[int, ...]]:
    """Hard decision for one received sample: ``(symbol index, bits)``."""
    idx = int(decide_indices(np.array([y]), c)[0])
    return idx, tuple(int(b) for b in c.labels[idx])


def demodulate(y: np.ndarray, c: Constellation = QAM4) -> np.ndarray:
    return indices_to_bits(decide_indices(y, c), c)


@dataclass(frozen=True)
class DecisionRegion:
    """Axis-aligned box ``[i_low, i_high) x [q_low, q_high)``."""

    i_low: float
    i_high: float
    q_low: float
    q_high: float

    def contains(self, y: complex) -> bool:
        return self.i_low <= y.real < self.i_high and self.q_low <= y.imag < self.q_high


def decision_region(c: Constellation, index: int) -> DecisionRegion:
    bounds = np.concatenate([[math.inf], c.thresholds, [-math.inf]])
    p = c.points[index]
    pi = _axis_position(np.array([p.real]), c)[0]
    pq = _axis_position(np.array([p.imag]), c)[0]
    return DecisionRegion(bounds[pi + 1], bounds[pi], bounds[pq + 1], bounds[pq])
