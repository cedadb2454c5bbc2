"""Channel transfer functions on uniform frequency grids.

Three ways to obtain a channel:

* :func:`synthesize_transfer_function` from a line catalog and an atmosphere,
* :func:`polynomial_phase_channel` from phase Taylor coefficients,
* :func:`import_transfer_function` from a ``frequency_hz,real,imag`` CSV.

The :class:`ChannelModel` implementations wrap the same three sources behind
``response(frequencies, path_length)`` so the simulator and sweeps can
evaluate a channel on whatever grid they need.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import IO, Optional, Protocol, Sequence, Union

import numpy as np

from gvdlink.channel.atmosphere import (
    AtmosphereState,
    complex_refractivity,
    propagation_exponent,
)
from gvdlink.channel.catalog import SpectralLine
from gvdlink.errors import DomainError, FormatError, ResolutionError


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform grid ``start + k * step`` for ``k = 0 .. count-1`` (Hz)."""

    start: float
    step: float
    count: int

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError(f"grid step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 2:
            raise DomainError(f"grid needs at least 2 points, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @property
    def frequencies(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @property
    def stop(self) -> float:
        return self.start + self.step * (self.count - 1)

    @property
    def span(self) -> float:
        """Width covered by the DFT of this grid, ``count * step``."""
        return self.count * self.step

    def index_of(self, frequency: float) -> int:
        return int(round((frequency - self.start) / self.step))

    def covers(self, low: float, high: float) -> bool:
        return self.start <= low and high <= self.stop

    @classmethod
    def centered(cls, center: float, step: float, count: int) -> "FrequencyGrid":
        """Grid with ``center`` exactly on index ``count // 2``."""
        return cls(center - (count // 2) * step, step, count)


def link_grid(
    center: float,
    symbol_rate: float,
    rolloff: float,
    oversample: int = 1024,
    span_factor: float = 8.0,
) -> FrequencyGrid:
    """Default analysis grid for a link.

    The step is ``symbol_rate / oversample`` and the span at least
    ``span_factor`` times the occupied bandwidth ``(1 + rolloff) * symbol_rate``.
    The step divides the symbol period into the DFT time window exactly,
    which keeps raised-cosine zero crossings exact after aliasing.
    """
    step = symbol_rate / oversample
    count = int(math.ceil(span_factor * (1 + rolloff) * symbol_rate / step))
    count += count % 2
    return FrequencyGrid.centered(center, step, count)


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ChannelTransferFunction:
    """Complex field transfer function ``H(f) = alpha(f) exp(-j phi(f))``."""

    grid: FrequencyGrid
    values: np.ndarray
    path_length: Optional[float] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.count,):
            raise DomainError(f"expected {self.grid.count} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("transfer function values must be finite")
        object.__setattr__(self, "values", _readonly(values))

    @property
    def frequencies(self) -> np.ndarray:
        return self.grid.frequencies

    @property
    def attenuation(self) -> np.ndarray:
        """Field amplitude ``alpha(f) = |H(f)|``."""
        return np.abs(self.values)

    @property
    def attenuation_db(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return -20.0 * np.log10(self.attenuation)

    @property
    def wrapped_phase(self) -> np.ndarray:
        return -np.angle(self.values)

    def phase(self, reference_frequency: Optional[float] = None) -> np.ndarray:
        """Unwrapped ``phi(f)``, branch chosen so ``|phi| <= pi`` at the reference."""
        ref = self.grid.count // 2 if reference_frequency is None else self.grid.index_of(reference_frequency)
        return unwrap_phase(self.wrapped_phase, anchor=ref)

    def __mul__(self, other: "ChannelTransferFunction") -> "ChannelTransferFunction":
        _check_same_grid(self, other)
        return ChannelTransferFunction(self.grid, self.values * other.values)


def _check_same_grid(*tfs: ChannelTransferFunction) -> None:
    g0 = tfs[0].grid
    for tf in tfs[1:]:
        g = tf.grid
        if g.count != g0.count or not math.isclose(g.step, g0.step, rel_tol=1e-12) or not math.isclose(
            g.start, g0.start, rel_tol=1e-12, abs_tol=1e-9 * g0.step
        ):
            raise DomainError("transfer functions live on different grids")


def unwrap_phase(wrapped: np.ndarray, anchor: int = 0, max_step: float = math.pi / 2) -> np.ndarray:
    """Nearest-multiple-of-2pi unwrapping along the grid.

    Raises ``ResolutionError`` when an adjacent step still exceeds
    ``max_step`` after unwrapping: such a step sits too close to the +-pi
    ambiguity to be trusted, so the grid needs refining.
    """
    wrapped = np.asarray(wrapped, dtype=float)
    d = np.diff(wrapped)
    d -= 2 * np.pi * np.round(d / (2 * np.pi))
    bad = np.flatnonzero(np.abs(d) > max_step)
    if bad.size:
        raise ResolutionError(
            f"phase step of {abs(d[bad[0]]):.3f} rad between grid points {bad[0]} and {bad[0] + 1}; "
            "use a finer frequency grid"
        )
    phase = np.concatenate([[0.0], np.cumsum(d)])
    phase += wrapped[anchor] - 2 * np.pi * np.round(wrapped[anchor] / (2 * np.pi)) - phase[anchor]
    return phase


# --- Taylor coefficients ----------------------------------------------------


@dataclass(frozen=True)
class PhaseTaylorCoefficients:
    """Phase expansion ``phi(w) = sum_n phi_n (w - w0)**n / n!``.

    Attributes:
        center_frequency: ``w0`` in rad/s.
        coefficients: ``phi_0 .. phi_N`` in rad s**n.
    """

    center_frequency: float
    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) < 3:
            raise DomainError("need at least phi_0, phi_1 and phi_2")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def gdd(self) -> float:
        """Group delay dispersion ``phi_2`` in rad s^2."""
        return self.coefficients[2]

    @classmethod
    def from_hz(cls, center_hz: float, coefficients: Sequence[float]) -> "PhaseTaylorCoefficients":
        return cls(2 * np.pi * center_hz, tuple(coefficients))

    def phase(self, omega: np.ndarray) -> np.ndarray:
        x = np.asarray(omega, dtype=float) - self.center_frequency
        out = np.zeros_like(x)
        for n in range(self.order, -1, -1):  # Horner on phi_n / n!
            out = out * x + self.coefficients[n] / math.factorial(n)
        return out

    def scaled(self, factor: float) -> "PhaseTaylorCoefficients":
        return PhaseTaylorCoefficients(self.center_frequency, tuple(c * factor for c in self.coefficients))


def polynomial_phase_channel(
    coeffs: PhaseTaylorCoefficients, attenuation_db: float, grid: FrequencyGrid
) -> ChannelTransferFunction:
    """``H = 10**(-attenuation_db/20) * exp(-j * sum phi_n (w - w0)**n / n!)``."""
    f0 = coeffs.center_frequency / (2 * np.pi)
    if not grid.covers(f0, f0):
        raise DomainError("grid does not cover the expansion frequency")
    return ChannelTransferFunction(grid, _polynomial_response(coeffs, attenuation_db, grid.frequencies))


def _polynomial_response(coeffs: PhaseTaylorCoefficients, attenuation_db: float, f: np.ndarray) -> np.ndarray:
    phi = coeffs.phase(2 * np.pi * np.asarray(f, dtype=float))
    return 10.0 ** (-attenuation_db / 20.0) * np.exp(-1j * phi)


def fit_taylor_coefficients(
    tf: ChannelTransferFunction,
    omega0: float,
    order: int = 4,
    bandwidth_hz: Optional[float] = None,
    half_window_hz: Optional[float] = None,
) -> PhaseTaylorCoefficients:
    """Least-squares polynomial fit of the unwrapped phase around ``omega0``.

    The fit window is ``half_window_hz`` if given, else ``1.5 * bandwidth_hz``
    if given, else the whole grid.
    """
    if order < 2:
        raise DomainError("fit order must be at least 2")
    f0 = omega0 / (2 * np.pi)
    if not tf.grid.covers(f0, f0):
        raise DomainError("expansion frequency outside the grid")
    if half_window_hz is None and bandwidth_hz is not None:
        half_window_hz = 1.5 * bandwidth_hz
    f = tf.frequencies
    mask = np.ones(f.size, bool) if half_window_hz is None else np.abs(f - f0) <= half_window_hz
    idx = np.flatnonzero(mask)
    if idx.size < order + 1:
        raise ResolutionError("too few grid points inside the fit window; use a finer grid")
    lo, hi = idx[0], idx[-1] + 1
    anchor = tf.grid.index_of(f0) - lo
    phase = unwrap_phase(tf.wrapped_phase[lo:hi], anchor=anchor)
    x = 2 * np.pi * (f[lo:hi] - f0)
    scale = np.max(np.abs(x)) or 1.0
    c = np.polynomial.polynomial.polyfit(x / scale, phase, order)
    phis = tuple(c[n] * math.factorial(n) / scale**n for n in range(order + 1))
    return PhaseTaylorCoefficients(omega0, phis)


# --- catalog synthesis ------------------------------------------------------


def synthesize_transfer_function(
    lines: Sequence[SpectralLine],
    atm: AtmosphereState,
    grid: FrequencyGrid,
    path_length: float,
) -> ChannelTransferFunction:
    """Line-by-line atmospheric transfer function over ``path_length`` metres."""
    if not lines:
        raise DomainError("need at least one spectral line")
    if path_length < 0:
        raise DomainError("path length must be non-negative")
    if grid.start <= 0:
        raise DomainError("frequency grid must be strictly positive")
    f = grid.frequencies
    gamma = propagation_exponent(complex_refractivity(lines, atm, f), f)
    return ChannelTransferFunction(grid, np.exp(gamma * path_length), path_length)


# --- channel models ---------------------------------------------------------


class ChannelModel(Protocol):
    def response(self, frequencies: np.ndarray, path_length: float) -> np.ndarray: ...

    def describe(self) -> dict: ...


def _freq_key(f: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(f, dtype=float).tobytes()).hexdigest()


@dataclass(eq=False)
class AtmosphericChannel:
    """Catalog-derived channel; path length enters only as a scale factor.

    Propagation exponents are cached per frequency array, so sweeping the
    distance reuses one line summation (``H(L1 + L2) = H(L1) H(L2)``).
    """

    lines: Sequence[SpectralLine]
    atmosphere: AtmosphereState
    cache_size: int = 16
    _cache: "OrderedDict[str, np.ndarray]" = field(default_factory=OrderedDict, repr=False)

    def __post_init__(self):
        if not self.lines:
            raise DomainError("need at least one spectral line")

    def exponent(self, frequencies: np.ndarray) -> np.ndarray:
        f = np.asarray(frequencies, dtype=float)
        key = _freq_key(f)
        hit = self._cache.get(key)
        if hit is None:
            if f.min() <= 0:
                raise DomainError("frequency grid must be strictly positive")
            hit = propagation_exponent(complex_refractivity(self.lines, self.atmosphere, f), f)
            hit.setflags(write=False)
            self._cache[key] = hit
            while len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        else:
            self._cache.move_to_end(key)
        return hit

    def response(self, frequencies: np.ndarray, path_length: float) -> np.ndarray:
        if path_length < 0:
            raise DomainError("path length must be non-negative")
        return np.exp(self.exponent(frequencies) * path_length)

    def transfer_function(self, grid: FrequencyGrid, path_length: float) -> ChannelTransferFunction:
        return ChannelTransferFunction(grid, self.response(grid.frequencies, path_length), path_length)

    def describe(self) -> dict:
        a = self.atmosphere
        return {
            "kind": "catalog",
            "lines": len(self.lines),
            "temperature_k": a.temperature,
            "pressure_pa": a.pressure,
            "water_vapor_density_gm3": a.water_vapor_density,
        }


@dataclass(frozen=True)
class PolynomialChannel:
    """Synthetic channel from phase Taylor coefficients.

    With ``reference_length`` set, coefficients and attenuation describe a
    path of that many metres and scale linearly with the requested path
    length; otherwise the channel ignores the path length.
    """

    coefficients: PhaseTaylorCoefficients
    attenuation_db: float = 0.0
    reference_length: Optional[float] = None

    def response(self, frequencies: np.ndarray, path_length: float) -> np.ndarray:
        coeffs, att = self.coefficients, self.attenuation_db
        if self.reference_length is not None:
            k = path_length / self.reference_length
            coeffs, att = coeffs.scaled(k), att * k
        return _polynomial_response(coeffs, att, frequencies)

    def describe(self) -> dict:
        return {
            "kind": "polynomial",
            "center_frequency_rad_s": self.coefficients.center_frequency,
            "coefficients": list(self.coefficients.coefficients),
            "attenuation_db": self.attenuation_db,
            "reference_length_m": self.reference_length,
        }


def identity_channel(center_hz: float) -> PolynomialChannel:
    return PolynomialChannel(PhaseTaylorCoefficients.from_hz(center_hz, (0.0, 0.0, 0.0)))


@dataclass(eq=False)
class TabulatedChannel:
    """Channel interpolated from a tabulated transfer function.

    Log-amplitude and unwrapped phase are interpolated linearly. If the table
    carries a path length, ``ln H`` is scaled to the requested one.
    """

    table: ChannelTransferFunction

    def __post_init__(self):
        self._log_amp = np.log(np.maximum(self.table.attenuation, np.finfo(float).tiny))
        self._phase = self.table.phase()

    def response(self, frequencies: np.ndarray, path_length: float) -> np.ndarray:
        f = np.asarray(frequencies, dtype=float)
        g = self.table.grid
        if f.min() < g.start - 1e-9 * g.step or f.max() > g.stop + 1e-9 * g.step:
            raise DomainError("requested frequencies fall outside the tabulated grid")
        fg = g.frequencies
        log_h = np.interp(f, fg, self._log_amp) - 1j * np.interp(f, fg, self._phase)
        length = self.table.path_length
        if length:
            log_h = log_h * (path_length / length)
        return np.exp(log_h)

    def describe(self) -> dict:
        g = self.table.grid
        return {"kind": "tabulated", "start_hz": g.start, "step_hz": g.step, "count": g.count,
                "path_length_m": self.table.path_length}


# --- CSV import / export ----------------------------------------------------

TextSource = Union[str, os.PathLike, IO[str], IO[bytes], bytes]


def _text(source: TextSource) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def import_transfer_function(source: TextSource, path_length: Optional[float] = None) -> ChannelTransferFunction:
    """Read a ``frequency_hz,real,imag`` CSV; the grid must be uniform to 1 ppm."""
    reader = csv.reader(io.StringIO(_text(source)))
    rows = [r for r in reader if r and not r[0].lstrip().startswith("#")]
    if rows and rows[0][0].strip().lower() == "frequency_hz":
        rows = rows[1:]
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise FormatError(f"non-numeric transfer-function entry: {exc}") from None
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] != 3:
        raise FormatError("expected at least two rows of frequency_hz,real,imag")
    f = data[:, 0]
    steps = np.diff(f)
    step = (f[-1] - f[0]) / (f.size - 1)
    if step <= 0 or np.max(np.abs(steps - step)) > 1e-6 * step:
        raise FormatError("frequency grid is not uniform to 1 ppm")
    return ChannelTransferFunction(FrequencyGrid(f[0], step, f.size), data[:, 1] + 1j * data[:, 2], path_length)


def export_transfer_function(tf: ChannelTransferFunction, target: Union[str, os.PathLike, IO[str]]) -> None:
    def write(fh: IO[str]) -> None:
        fh.write("frequency_hz,real,imag\n")
        for f, v in zip(tf.frequencies, tf.values):
            fh.write(f"{float(f)!r},{float(v.real)!r},{float(v.imag)!r}\n")

    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            write(fh)
    else:
        write(target)
