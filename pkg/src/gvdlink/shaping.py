"""Pulse shaping, composite baseband impulse response and ISI weights.

The weight vector samples the normalized baseband response ``h(t)`` at whole
symbol periods around the alignment point ``t_a``. A symbol ``i`` periods
*before* the one being decided arrives through ``h(t_a + i T)``, a symbol
``i`` periods *after* it through ``h(t_a - i T)``. Weights are stored in
neighbour order::

    index:   1        ...  p        p+1      ...  2p
    symbol:  s[k-p]   ...  s[k-1]   s[k+1]   ...  s[k+p]
    sample:  h(t_a+pT)...  h(t_a+T) h(t_a-T) ...  h(t_a-pT)

each divided by ``h(t_a)``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Union

import numpy as np

from gvdlink.channel.transfer import ChannelTransferFunction, FrequencyGrid, _check_same_grid, _readonly
from gvdlink.errors import DomainError, SpanError

SPLITS = ("matched-root-pair", "single-raised-cosine")


@dataclass(frozen=True)
class PulseShapeSpec:
    """Raised-cosine pulse shaping.

    Attributes:
        symbol_rate: Baud.
        rolloff: Excess-bandwidth factor in [0, 1].
        split: ``matched-root-pair`` puts a root raised cosine at both ends;
            ``single-raised-cosine`` puts the full filter at the transmitter.
    """

    symbol_rate: float
    rolloff: float = 0.5
    split: str = "matched-root-pair"

    def __post_init__(self):
        if not self.symbol_rate > 0:
            raise DomainError(f"symbol rate must be positive, got {self.symbol_rate}")
        if not 0.0 <= self.rolloff <= 1.0:
            raise DomainError(f"rolloff must be in [0, 1], got {self.rolloff}")
        if self.split not in SPLITS:
            raise DomainError(f"split must be one of {SPLITS}, got {self.split!r}")

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.symbol_rate

    @property
    def occupied_bandwidth(self) -> float:
        """Two-sided RF bandwidth ``(1 + rolloff) / T``."""
        return (1.0 + self.rolloff) * self.symbol_rate


def raised_cosine_spectrum(baseband: np.ndarray, symbol_rate: float, rolloff: float) -> np.ndarray:
    """Unit-peak raised-cosine magnitude at baseband frequencies (Hz)."""
    a = np.abs(np.asarray(baseband, dtype=float)) / symbol_rate
    lo, hi = (1.0 - rolloff) / 2.0, (1.0 + rolloff) / 2.0
    out = np.zeros_like(a)
    out[a <= lo] = 1.0
    if rolloff > 0:
        edge = (a > lo) & (a <= hi)
        out[edge] = 0.5 * (1.0 + np.cos(np.pi / rolloff * (a[edge] - lo)))
    # Exactly 1/2 at the Nyquist frequency for every rolloff, including the
    # brick-wall limit; this keeps sampled spectra Nyquist.
    out[a == 0.5] = 0.5
    return out


def raised_cosine_response(
    spec: PulseShapeSpec, grid: FrequencyGrid, center: float, root: bool | None = None
) -> ChannelTransferFunction:
    """Raised-cosine filter centred at ``center`` with zero phase.

    ``root`` defaults to ``True`` in matched-root-pair mode, giving the
    per-end root response.
    """
    half = spec.occupied_bandwidth / 2.0
    if not grid.covers(center - half, center + half):
        raise DomainError("grid does not span the raised-cosine passband")
    rc = raised_cosine_spectrum(grid.frequencies - center, spec.symbol_rate, spec.rolloff)
    if root is None:
        root = spec.split == "matched-root-pair"
    return ChannelTransferFunction(grid, np.sqrt(rc) if root else rc)


def filter_pair(
    spec: PulseShapeSpec, grid: FrequencyGrid, center: float
) -> tuple[ChannelTransferFunction, ChannelTransferFunction]:
    """Transmit and receive filters for the configured split."""
    if spec.split == "matched-root-pair":
        r = raised_cosine_response(spec, grid, center, root=True)
        return r, r
    return raised_cosine_response(spec, grid, center, root=False), ChannelTransferFunction(
        grid, np.ones(grid.count)
    )


@dataclass(frozen=True, eq=False)
class BasebandImpulseResponse:
    """Uniformly sampled complex baseband impulse response.

    Samples sit at ``(n - center_index) * time_step``. The response is band
    limited, so :meth:`evaluate` interpolates exactly between samples with
    the trigonometric series of the underlying spectrum (equivalent to
    unlimited zero padding), including a sub-bin ``frequency_offset`` when
    the carrier does not fall on a grid point.
    """

    time_step: float
    samples: np.ndarray
    center_index: int
    frequency_offset: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1 or s.size < 3:
            raise DomainError("impulse response needs at least 3 samples")
        if not np.all(np.isfinite(s)):
            raise DomainError("impulse response samples must be finite")
        if not self.time_step > 0:
            raise DomainError("time step must be positive")
        if not 0 <= self.center_index < s.size:
            raise DomainError("center index out of range")
        object.__setattr__(self, "samples", _readonly(s))

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.samples.size) - self.center_index) * self.time_step

    @cached_property
    def _series(self) -> tuple[np.ndarray, np.ndarray]:
        n = self.samples.size
        t = self.times
        base = self.samples * np.exp(-2j * np.pi * self.frequency_offset * t)
        coeff = np.fft.fft(np.roll(base, -self.center_index)) / n
        nu = np.fft.fftfreq(n, self.time_step) + self.frequency_offset
        return coeff, nu

    def evaluate(self, t, derivative: int = 0) -> np.ndarray:
        """``d^k h / dt^k`` at arbitrary times (k = ``derivative``)."""
        coeff, nu = self._series
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        w = coeff * (2j * np.pi * nu) ** derivative if derivative else coeff
        return np.exp(2j * np.pi * np.outer(tt, nu)) @ w

    def scaled(self, factor: complex) -> "BasebandImpulseResponse":
        return BasebandImpulseResponse(self.time_step, self.samples * factor, self.center_index, self.frequency_offset)

    def export_csv(self, target: Union[str, os.PathLike, IO[str]]) -> None:
        def write(fh: IO[str]) -> None:
            fh.write("time_s,real,imag\n")
            for t, v in zip(self.times, self.samples):
                fh.write(f"{float(t)!r},{float(v.real)!r},{float(v.imag)!r}\n")

        if isinstance(target, (str, os.PathLike)):
            with open(target, "w", encoding="utf-8", newline="") as fh:
                write(fh)
        else:
            write(target)


def composite_impulse_response(
    atmosphere: ChannelTransferFunction,
    tx_filter: ChannelTransferFunction,
    rx_filter: ChannelTransferFunction,
    carrier: float,
) -> BasebandImpulseResponse:
    """Baseband ``h(t) = integral of H_tx H_atm H_rx (f + carrier) e^{j 2 pi f t} df``.

    The DFT time window is ``1 / step`` long with ``time_step = 1 / span``;
    ``t = 0`` sits at ``center_index = count // 2``.
    """
    _check_same_grid(atmosphere, tx_filter, rx_filter)
    grid = atmosphere.grid
    n, df = grid.count, grid.step
    k0 = grid.index_of(carrier)
    if not 0 <= k0 < n:
        raise DomainError("carrier lies outside the frequency grid")
    offset = grid.start + k0 * df - carrier
    product = atmosphere.values * tx_filter.values * rx_filter.values
    raw = n * np.fft.ifft(np.roll(product, -k0)) * df
    center = n // 2
    samples = np.roll(raw, center)
    dt = 1.0 / (n * df)
    if offset:
        samples = samples * np.exp(2j * np.pi * offset * (np.arange(n) - center) * dt)
    return BasebandImpulseResponse(dt, samples, center, offset)


def align_peak(h: BasebandImpulseResponse, max_newton: int = 20) -> float:
    """Time of the ``|h(t)|`` maximum.

    Parabolic refinement around the largest sample, then Newton steps on
    ``|h|^2`` using the exact band-limited derivatives.
    """
    mag = np.abs(h.samples)
    k = int(np.argmax(mag))
    dt = h.time_step
    t = h.times[k]
    if 0 < k < mag.size - 1:
        y0, y1, y2 = mag[k - 1], mag[k], mag[k + 1]
        denom = y0 - 2 * y1 + y2
        if denom < 0:
            t += 0.5 * (y0 - y2) / denom * dt
    for _ in range(max_newton):
        h0, h1, h2 = (h.evaluate(t, d)[0] for d in (0, 1, 2))
        g1 = 2 * (h0.conjugate() * h1).real
        g2 = 2 * (abs(h1) ** 2 + (h0.conjugate() * h2).real)
        if not g2 < 0:
            break
        step = float(np.clip(-g1 / g2, -dt, dt))
        t += step
        if abs(step) <= 1e-13 * dt:
            break
    return t


@dataclass(frozen=True, eq=False)
class WeightVector:
    """The ``2p`` complex ISI weights, neighbour order (see module docs)."""

    span: int
    weights: np.ndarray
    alignment_time: float = 0.0
    center_tap: complex = 1.0
    symbol_period: float = math.nan

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=complex)
        if self.span < 1 or w.shape != (2 * self.span,):
            raise DomainError(f"expected {2 * self.span} weights, got shape {w.shape}")
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def offsets(self) -> np.ndarray:
        """Sampling offsets in symbol periods, aligned with ``weights``."""
        return symbol_offsets(self.span)

    @classmethod
    def zeros(cls, span: int) -> "WeightVector":
        return cls(span, np.zeros(2 * span, dtype=complex))


def symbol_offsets(p: int) -> np.ndarray:
    return np.concatenate([np.arange(p, 0, -1), -np.arange(1, p + 1)])


def extract_weights(h: BasebandImpulseResponse, spec: PulseShapeSpec, p: int = 3) -> WeightVector:
    """Sample ``h`` at whole symbol periods around its peak and normalize.

    Raises:
        SpanError: ``h`` does not reach ``p`` symbol periods either side of
            the alignment point.
    """
    if p < 1:
        raise DomainError("symbol span must be at least 1")
    period = spec.symbol_period
    t_a = align_peak(h)
    times = h.times
    if t_a - p * period < times[0] or t_a + p * period > times[-1]:
        raise SpanError(f"impulse response does not cover +-{p} symbol periods around its peak")
    center = h.evaluate(t_a)[0]
    if center == 0:
        raise SpanError("impulse response vanishes at its peak")
    w = h.evaluate(t_a + symbol_offsets(p) * period) / center
    return WeightVector(p, w, t_a, complex(center), period)
