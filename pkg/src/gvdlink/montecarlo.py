"""End-to-end stochastic link simulation at complex baseband.

Each frame is processed as one circular block of ``guard + data + guard``
symbols at ``samples_per_symbol`` samples per symbol:

1. random bits, Gray-mapped to 4-QAM (guard symbols are random too),
2. impulse train times the transmit filter, the channel and the receive
   filter, all applied as one spectrum product (the carrier is handled as a
   frequency shift, so homodyne detection is the identity),
3. white Gaussian noise added at the receiver input, i.e. before the
   receive filter,
4. sampling once per symbol at the aligned instant, hard decision, and
   error counting on the data symbols only.

Because the frame is circular, the first data symbol sees the trailing guard
symbols as its predecessors, so every counted symbol gets full two-sided ISI.

Receiver synchronization is ideal: the sampling instant is the peak of the
composite ``|h(t)|`` (as in :func:`gvdlink.shaping.align_peak`), and the
complex gain ``h(t_a)`` is divided out. Noise is scaled so that the
decision-point ``E/N0`` equals the configured SNR. The signal energy is
measured on a noiseless 0 km calibration run.

Randomness comes from Philox (a counter-based generator). Frame ``i`` draws
from ``SeedSequence(rng_seed, spawn_key=(0, i))``, so results do not depend on
how frames are distributed over worker threads.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.stats import binomtest

from gvdlink.channel import AtmosphereState, ChannelModel, identity_channel
from gvdlink.errors import CalibrationError, DomainError
from gvdlink.link import as_channel
from gvdlink.qam import QAM4, Constellation, bits_to_indices, decide_indices
from gvdlink.sermodel import SerCurve, SnrPoint
from gvdlink.shaping import BasebandImpulseResponse, PulseShapeSpec, align_peak, raised_cosine_spectrum

FRAME_STREAM = 0
CALIBRATION_STREAM = 1
NOISE_CHECK_STREAM = 2
CALIBRATION_TOLERANCE_DB = 0.1


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    """Everything that determines one Monte Carlo run.

    Attributes:
        carrier: Carrier frequency in Hz.
        pulse: Symbol rate, rolloff and filter split.
        path_length: Metres.
        channel: A channel model, an :class:`AtmosphereState` (uses the
            bundled catalog) or ``None`` for an ideal channel.
        snr: Decision-point ``E/N0``.
        frame_bits: Data bits per frame.
        frame_count: Number of frames.
        rng_seed: Unsigned 64-bit seed.
        samples_per_symbol: Simulation oversampling factor.
        span: ISI span ``p``; each frame edge carries ``p + 4`` guard symbols.
        workers: Threads used for frame processing (results are identical).
    """

    carrier: float
    pulse: PulseShapeSpec
    path_length: float = 0.0
    channel: Union[ChannelModel, AtmosphereState, None] = None
    snr: SnrPoint = field(default_factory=lambda: SnrPoint.from_db(10.0))
    frame_bits: int = 4000
    frame_count: int = 2000
    rng_seed: int = 0
    samples_per_symbol: int = 8
    span: int = 3
    constellation: Constellation = QAM4
    calibration_symbols: int = 10_000
    workers: int = 1

    def __post_init__(self):
        k = self.constellation.bits_per_symbol
        if self.frame_bits < k or self.frame_bits % k:
            raise DomainError(f"frame_bits must be a positive multiple of {k}")
        if self.samples_per_symbol < 4:
            raise DomainError("samples_per_symbol must be at least 4")
        if self.frame_count < 1:
            raise DomainError("frame_count must be at least 1")
        if self.path_length < 0:
            raise DomainError("path length must be non-negative")
        if not 0 <= self.rng_seed < 2**64:
            raise DomainError("rng_seed must be an unsigned 64-bit integer")
        if self.span < 1 or self.workers < 1:
            raise DomainError("span and workers must be at least 1")
        if not isinstance(self.snr, SnrPoint):
            object.__setattr__(self, "snr", SnrPoint(float(self.snr)))

    @property
    def symbol_rate(self) -> float:
        return self.pulse.symbol_rate

    @property
    def guard_symbols(self) -> int:
        return self.span + 4

    @property
    def data_symbols(self) -> int:
        return self.frame_bits // self.constellation.bits_per_symbol

    def replace(self, **changes) -> "SimulationConfig":
        return replace(self, **changes)

    def snapshot(self) -> dict:
        ch = as_channel(self.channel, self.carrier)
        return {
            "carrier_hz": self.carrier,
            "symbol_rate_bd": self.pulse.symbol_rate,
            "rolloff": self.pulse.rolloff,
            "split": self.pulse.split,
            "path_length_m": self.path_length,
            "channel": ch.describe(),
            "snr_db": self.snr.db if not self.snr.is_infinite else "inf",
            "frame_bits": self.frame_bits,
            "frame_count": self.frame_count,
            "rng_seed": self.rng_seed,
            "samples_per_symbol": self.samples_per_symbol,
            "span": self.span,
            "order": self.constellation.order,
            "calibration_symbols": self.calibration_symbols,
        }


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(errors, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    symbols_sent: int
    symbol_errors: int
    per_frame_errors: np.ndarray
    binomial_95ci: tuple[float, float]
    measured_snr_db: Optional[float]
    config: dict

    @property
    def ser_estimate(self) -> float:
        return self.symbol_errors / self.symbols_sent

    @property
    def std_error(self) -> float:
        """Binomial standard error, floored at one error to stay nonzero."""
        p = max(self.ser_estimate, 1.0 / self.symbols_sent)
        return math.sqrt(p * (1 - p) / self.symbols_sent)

    def to_dict(self) -> dict:
        return {
            "symbols_sent": self.symbols_sent,
            "symbol_errors": self.symbol_errors,
            "ser_estimate": self.ser_estimate,
            "binomial_95ci": list(self.binomial_95ci),
            "measured_snr_db": self.measured_snr_db,
            "per_frame_errors": [int(e) for e in self.per_frame_errors],
            "config": self.config,
        }

    def to_json(self, path: Union[str, os.PathLike]) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _frame_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream, index))))


class _Engine:
    """Precomputed spectra for one (channel, distance, pulse, frame) setup."""

    def __init__(self, cfg: SimulationConfig, channel: ChannelModel, path_length: float):
        self.cfg = cfg
        sps = cfg.samples_per_symbol
        self.n_sym = cfg.data_symbols + 2 * cfg.guard_symbols
        n = self.n_sym * sps
        self.n = n
        f_bb = np.fft.fftfreq(n, 1.0 / (sps * cfg.symbol_rate))
        rc = raised_cosine_spectrum(f_bb, cfg.symbol_rate, cfg.pulse.rolloff)
        if cfg.pulse.split == "matched-root-pair":
            tx = rx = np.sqrt(rc)
        else:
            tx, rx = rc, np.ones(n)
        band = np.flatnonzero(tx * rx != 0)
        g = np.zeros(n, dtype=complex)
        g[band] = tx[band] * channel.response(cfg.carrier + f_bb[band], path_length) * rx[band]
        if not np.all(np.isfinite(g)):
            raise DomainError("channel response is not finite on the simulation grid")

        h = BasebandImpulseResponse(1.0 / (sps * cfg.symbol_rate), np.roll(np.fft.ifft(g), n // 2), n // 2)
        self.alignment_time = align_peak(h)
        ramp = np.exp(2j * np.pi * f_bb * self.alignment_time)
        g0 = np.mean(g * ramp)
        if g0 == 0:
            raise DomainError("composite response vanishes at the sampling instant")
        self.folded = (g * ramp / g0).reshape(sps, self.n_sym).sum(axis=0)
        rx_n = rx * ramp / g0
        self.support = np.flatnonzero(rx_n != 0)
        self.rx_support = rx_n[self.support]
        self.noise_gain = float(np.mean(np.abs(rx_n) ** 2))

    def decision_samples(self, symbols: np.ndarray, rng: Optional[np.random.Generator], sigma2: float) -> np.ndarray:
        y = np.fft.fft(symbols) * self.folded
        if rng is not None and sigma2 > 0:
            y = y + self._folded_noise(rng, sigma2)
        return np.fft.ifft(y) / self.cfg.samples_per_symbol

    def _folded_noise(self, rng: np.random.Generator, sigma2: float) -> np.ndarray:
        m = self.support.size
        scale = math.sqrt(self.n * sigma2 / 2.0)
        w = np.zeros(self.n, dtype=complex)
        w[self.support] = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * scale * self.rx_support
        return w.reshape(self.cfg.samples_per_symbol, self.n_sym).sum(axis=0)

    def random_symbols(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        c = self.cfg.constellation
        bits = rng.integers(0, 2, size=self.n_sym * c.bits_per_symbol, dtype=np.uint8)
        idx = bits_to_indices(bits, c)
        return idx, c.points[idx]

    def data_slice(self) -> slice:
        g = self.cfg.guard_symbols
        return slice(g, g + self.cfg.data_symbols)


def _signal_power(cfg: SimulationConfig) -> float:
    """Mean decision-point energy of a noiseless 0 km run."""
    eng = _Engine(cfg, identity_channel(cfg.carrier), 0.0)
    frames = max(1, math.ceil(cfg.calibration_symbols / cfg.data_symbols))
    acc = 0.0
    for i in range(frames):
        _, s = eng.random_symbols(_frame_rng(cfg.rng_seed, CALIBRATION_STREAM, i))
        y = eng.decision_samples(s, None, 0.0)[eng.data_slice()]
        acc += float(np.mean(np.abs(y) ** 2))
    return acc / frames


def _check_noise(eng: _Engine, cfg: SimulationConfig, p_sig: float, sigma2: float, frames: int = 64) -> float:
    acc = 0.0
    zeros = np.zeros(eng.n_sym, dtype=complex)
    for i in range(frames):
        n = eng.decision_samples(zeros, _frame_rng(cfg.rng_seed, NOISE_CHECK_STREAM, i), sigma2)
        acc += float(np.mean(np.abs(n[eng.data_slice()]) ** 2))
    measured = 10 * math.log10(p_sig / (acc / frames))
    if abs(measured - cfg.snr.db) > CALIBRATION_TOLERANCE_DB:
        raise CalibrationError(
            f"measured decision-point SNR {measured:.3f} dB deviates from the target {cfg.snr.db:.3f} dB"
        )
    return measured


def run_simulation(cfg: SimulationConfig) -> SimulationResult:
    """Simulate ``frame_count`` frames and count symbol errors.

    Raises:
        CalibrationError: the decision-point SNR measured on a noise-only
            run misses the target by more than 0.1 dB.
    """
    channel = as_channel(cfg.channel, cfg.carrier)
    eng = _Engine(cfg, channel, cfg.path_length)
    sigma2, measured = 0.0, None
    if not cfg.snr.is_infinite:
        p_sig = _signal_power(cfg)
        sigma2 = p_sig / (cfg.snr.linear * eng.noise_gain)
        measured = _check_noise(eng, cfg, p_sig, sigma2)
    data = eng.data_slice()

    def frame(i: int) -> int:
        rng = _frame_rng(cfg.rng_seed, FRAME_STREAM, i)
        idx, s = eng.random_symbols(rng)
        y = eng.decision_samples(s, rng, sigma2)
        return int(np.count_nonzero(decide_indices(y[data], cfg.constellation) != idx[data]))

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            errors = list(pool.map(frame, range(cfg.frame_count)))
    else:
        errors = [frame(i) for i in range(cfg.frame_count)]

    per_frame = np.array(errors, dtype=np.int64)
    per_frame.setflags(write=False)
    sent = cfg.frame_count * cfg.data_symbols
    total = int(per_frame.sum())
    snapshot = cfg.snapshot()
    snapshot["alignment_time_s"] = eng.alignment_time
    return SimulationResult(sent, total, per_frame, wilson_interval(total, sent), measured, snapshot)


def point_seed(seed: int, index: int) -> int:
    """Seed for point ``index`` of a multi-point run, mixed through SeedSequence."""
    return int(np.random.SeedSequence(seed, spawn_key=(3, index)).generate_state(1, np.uint64)[0])


def run_waterfall(template: SimulationConfig, snr_db: Iterable[float]) -> SerCurve:
    """Run ``template`` at each SNR; point ``i`` uses ``point_seed(rng_seed, i)``."""
    xs = [float(x) for x in snr_db]
    if not xs:
        raise DomainError("need at least one SNR point")
    results = [
        run_simulation(template.replace(snr=SnrPoint.from_db(x), rng_seed=point_seed(template.rng_seed, i)))
        for i, x in enumerate(xs)
    ]
    return curve_from_results("snr", "dB", xs, results, {"engine": "montecarlo", **template.snapshot()})


def curve_from_results(
    variable: str, unit: str, xs: Sequence[float], results: Sequence[SimulationResult], metadata: dict
) -> SerCurve:
    return SerCurve(
        variable,
        unit,
        np.array(xs, dtype=float),
        np.array([r.ser_estimate for r in results]),
        np.array([r.binomial_95ci[0] for r in results]),
        np.array([r.binomial_95ci[1] for r in results]),
        metadata={
            **metadata,
            "point_seeds": [r.config["rng_seed"] for r in results],
            "symbol_errors": [r.symbol_errors for r in results],
            "symbols_sent": [r.symbols_sent for r in results],
        },
    )


def agrees(result: SimulationResult, predicted: float, sigmas: float = 3.0, slack: float = 1.0) -> bool:
    """``|estimate - predicted|`` within ``sigmas * slack`` binomial standard errors.

    The standard error uses the larger of the two rates (and at least one
    error) so a zero-error run can still be compared with a tiny prediction.
    """
    n = result.symbols_sent
    p = max(predicted, result.ser_estimate, 1.0 / n)
    return abs(result.ser_estimate - predicted) <= sigmas * slack * math.sqrt(p * (1 - p) / n)
