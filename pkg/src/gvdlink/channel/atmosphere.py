r"""Atmospheric state and line-by-line complex refractivity.

Every resonance contributes a van Vleck-Weisskopf (VVW) term to the complex
refractivity ``N(f) = N'(f) + j N''(f)`` (ppm)::

    S_i   = I_i * P_abs * theta**x_s * exp(c2 * E_i * (1/300 - 1/T))     [kHz]
    g_i   = (a_i * p_dry + b_i * e) * theta**n_i                         [GHz]
    F_i   = (f/f_i) * [1/(f_i - f - j g_i) - 1/(f_i + f + j g_i)]        [1/GHz]
    N'  =  sum_i S_i * Re F_i
    N'' =  sum_i S_i * Im F_i

with ``theta = 300/T``, ``e`` the water-vapour pressure, ``p_dry = p - e``
(both hPa), ``P_abs`` either ``e`` (h2o) or ``p_dry`` (o2) and ``x_s`` the
species intensity exponent. ``Im F_i`` is the VVW absorption profile and
``Re F_i`` its dispersive partner. ``N'`` vanishes at f = 0, so the
non-dispersive static refractivity (a pure delay) is left out.

A path of length ``L`` then has the field transfer function::

    H(f) = exp(-(2 pi f / c) * L * 1e-6 * (N'' + j N'))
         = alpha(f) * exp(-j phi(f))

so ``alpha`` is a field-amplitude (not power) attenuation and ``phi`` grows
with the excess phase delay. In dB, ``-20 log10 alpha`` equals the familiar
``0.1820 f[GHz] N''`` dB/km times the path length in km.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from gvdlink.channel.catalog import SPECIES, SpectralLine
from gvdlink.errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0
C2_CM_K = 1.4387769  # second radiation constant hc/k in cm K
R_WATER_VAPOUR = 8.314462618 / 0.01801528  # J/(kg K)
T_REF = 300.0


@dataclass(frozen=True)
class AtmosphereState:
    """Bulk conditions of a homogeneous atmosphere.

    Attributes:
        temperature: K.
        pressure: Total pressure in Pa.
        water_vapor_density: g/m^3.
    """

    temperature: float = 293.15
    pressure: float = 101_325.0
    water_vapor_density: float = 0.0

    def __post_init__(self):
        if not self.temperature > 0:
            raise DomainError(f"temperature must be positive, got {self.temperature}")
        if not self.pressure > 0:
            raise DomainError(f"pressure must be positive, got {self.pressure}")
        if not self.water_vapor_density >= 0:
            raise DomainError(f"water vapour density must be >= 0, got {self.water_vapor_density}")

    @property
    def vapor_pressure(self) -> float:
        """Water-vapour partial pressure in Pa (ideal gas)."""
        return self.water_vapor_density * 1e-3 * R_WATER_VAPOUR * self.temperature

    @property
    def dry_pressure(self) -> float:
        return self.pressure - self.vapor_pressure

    @classmethod
    def from_relative_humidity(
        cls, relative_humidity: float, temperature: float, pressure: float = 101_325.0
    ) -> "AtmosphereState":
        """Build a state from relative humidity in percent (0-100)."""
        if not 0 <= relative_humidity <= 100:
            raise DomainError(f"relative humidity must be in [0, 100], got {relative_humidity}")
        e = relative_humidity / 100.0 * saturation_vapor_pressure(temperature)
        rho = e / (R_WATER_VAPOUR * temperature) * 1e3
        return cls(temperature=temperature, pressure=pressure, water_vapor_density=rho)


def saturation_vapor_pressure(temperature: float) -> float:
    """Saturation pressure over liquid water in Pa.

    Buck-type formula as used by ITU-R P.453 (without the pressure enhancement
    factor), valid from -40 to +50 C.
    """
    t = temperature - 273.15
    return 611.21 * math.exp((18.678 - t / 234.5) * t / (257.14 + t))


def vapor_density_from_relative_humidity(relative_humidity: float, temperature: float) -> float:
    """Water-vapour density (g/m^3) for a relative humidity in percent."""
    return AtmosphereState.from_relative_humidity(relative_humidity, temperature).water_vapor_density


def complex_refractivity(
    lines: Sequence[SpectralLine], atm: AtmosphereState, frequencies: np.ndarray
) -> np.ndarray:
    """Sum of VVW line contributions, ``N' + j N''`` in ppm.

    Lines are accumulated one at a time in catalog order, so the result does
    not depend on how callers batch or parallelise frequency blocks.
    """
    f = np.asarray(frequencies, dtype=float) * 1e-9
    if f.size and f.min() <= 0:
        raise DomainError("frequency grid must be strictly positive")
    theta = T_REF / atm.temperature
    e_hpa = atm.vapor_pressure / 100.0
    p_dry_hpa = atm.dry_pressure / 100.0
    total = np.zeros(f.shape, dtype=complex)
    for line in lines:
        sp = SPECIES[line.species]
        absorber = e_hpa if sp.absorber == "h2o" else p_dry_hpa
        strength = (
            line.line_intensity
            * absorber
            * theta**sp.intensity_exponent
            * math.exp(C2_CM_K * line.lower_state_energy * (1.0 / T_REF - 1.0 / atm.temperature))
        )
        # Hz/Pa * hPa -> GHz: factor 100 / 1e9
        width = (
            (line.air_broadening * p_dry_hpa + line.self_broadening * e_hpa)
            * 1e-7
            * theta**line.temperature_exponent
        )
        f0 = line.center_frequency * 1e-9
        shape = (f / f0) * (1.0 / (f0 - f - 1j * width) - 1.0 / (f0 + f + 1j * width))
        total += strength * shape
    return total


def propagation_exponent(refractivity: np.ndarray, frequencies: np.ndarray) -> np.ndarray:
    """Per-metre log transfer function: ``ln H = L * propagation_exponent``."""
    k0 = 2 * np.pi * np.asarray(frequencies, dtype=float) / SPEED_OF_LIGHT
    return -k0 * 1e-6 * (refractivity.imag + 1j * refractivity.real)


def specific_attenuation_db_per_km(
    lines: Sequence[SpectralLine], atm: AtmosphereState, frequencies: np.ndarray
) -> np.ndarray:
    """Power attenuation in dB/km."""
    gamma = propagation_exponent(complex_refractivity(lines, atm, frequencies), frequencies)
    return -20.0 * np.log10(np.e) * gamma.real * 1e3
