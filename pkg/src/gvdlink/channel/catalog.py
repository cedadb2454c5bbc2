"""Molecular line catalogs in the ``gvdlink-catalog v1`` text format.

Layout::

    #gvdlink-catalog v1
    # free comment
    #species h2o
    <center_frequency_GHz> <intensity> <air_broadening_MHz_per_hPa>
        <self_broadening_MHz_per_hPa> <temperature_exponent> <lower_state_energy>
    ...

Each data row holds six whitespace-separated numbers. The first line must be
the ``#gvdlink-catalog v1`` header. Lines starting with ``#`` are comments,
except ``#species <name>``, which sets the species of every following row
(``h2o`` until the first directive). Blank lines are ignored.

Units of the columns:

* ``intensity``: line strength at 300 K per unit absorber pressure, in
  kHz/hPa. Multiplying by the absorber pressure in hPa and by the
  lineshape in 1/GHz gives refractivity in ppm.
* broadenings: pressure-broadening half-widths at 300 K. ``air`` scales with
  dry-air pressure, ``self`` with water-vapour pressure (for ``o2`` rows the
  second coefficient is the broadening by water vapour).
* ``temperature_exponent``: width scales as ``(300/T) ** n``.
* ``lower_state_energy``: in cm^-1; sets the Boltzmann factor.

Converting a HITRAN ``.par`` extract: frequency is ``nu * 29.9792458`` GHz,
and the broadenings ``gamma_air``/``gamma_self`` (cm^-1/atm at 296 K) become
MHz/hPa via ``gamma * 29979.2458 / 1013.25``. The HITRAN intensity
(cm/molecule) needs the usual conversion to kHz/hPa, which this module does
not do.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from importlib import resources
from typing import IO, Iterable, Union

from gvdlink.errors import CatalogParseError, EmptyCatalogError

HEADER = "#gvdlink-catalog v1"
DEFAULT_CUTOFF_HZ = 5e12


@dataclass(frozen=True)
class Species:
    name: str
    # "h2o": absorber pressure is the water-vapour partial pressure,
    # "dry": absorber pressure is the dry-air pressure (O2 at fixed mixing ratio).
    absorber: str
    intensity_exponent: float


SPECIES = {
    "h2o": Species("h2o", "h2o", 3.5),
    "o2": Species("o2", "dry", 3.0),
}


@dataclass(frozen=True)
class SpectralLine:
    """One molecular resonance.

    Attributes:
        center_frequency: Resonance frequency in Hz.
        line_intensity: Strength at 300 K in kHz/hPa.
        air_broadening: Dry-air broadening at 300 K in Hz/Pa.
        self_broadening: Water-vapour broadening at 300 K in Hz/Pa.
        temperature_exponent: Width temperature exponent.
        lower_state_energy: Lower state energy in cm^-1.
        species: Key into ``SPECIES``.
    """

    center_frequency: float
    line_intensity: float
    air_broadening: float
    self_broadening: float
    temperature_exponent: float
    lower_state_energy: float
    species: str = "h2o"

    def __post_init__(self):
        if not self.center_frequency > 0:
            raise ValueError(f"center frequency must be positive, got {self.center_frequency}")
        if not self.line_intensity >= 0:
            raise ValueError(f"line intensity must be non-negative, got {self.line_intensity}")
        if not (self.air_broadening > 0 and self.self_broadening > 0):
            raise ValueError("broadening coefficients must be positive")
        if self.species not in SPECIES:
            raise ValueError(f"unknown species {self.species!r}")


Source = Union[str, os.PathLike, IO[str], IO[bytes], bytes]

_MHZ_PER_HPA = 1e6 / 100.0  # MHz/hPa -> Hz/Pa


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def parse_rows(lines: Iterable[str], cutoff_hz: float = DEFAULT_CUTOFF_HZ) -> list[SpectralLine]:
    out: list[SpectralLine] = []
    species = "h2o"
    seen_header = False
    for row, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not seen_header:
            if text != HEADER:
                raise CatalogParseError(f"expected header {HEADER!r}", row)
            seen_header = True
            continue
        if not text:
            continue
        if text.startswith("#species"):
            parts = text.split()
            if len(parts) != 2 or parts[1] not in SPECIES:
                raise CatalogParseError(f"bad species directive {text!r}", row)
            species = parts[1]
            continue
        if text.startswith("#"):
            continue
        fields = text.split()
        if len(fields) != 6:
            raise CatalogParseError(f"expected 6 columns, found {len(fields)}", row)
        try:
            f_ghz, intensity, air, self_, n, elow = (float(v) for v in fields)
        except ValueError as exc:
            raise CatalogParseError(str(exc), row) from None
        try:
            line = SpectralLine(
                center_frequency=f_ghz * 1e9,
                line_intensity=intensity,
                air_broadening=air * _MHZ_PER_HPA,
                self_broadening=self_ * _MHZ_PER_HPA,
                temperature_exponent=n,
                lower_state_energy=elow,
                species=species,
            )
        except ValueError as exc:
            raise CatalogParseError(str(exc), row) from None
        if line.center_frequency <= cutoff_hz:
            out.append(line)
    if not seen_header:
        raise EmptyCatalogError("catalog is empty")
    if not out:
        raise EmptyCatalogError("catalog holds no lines below the cutoff")
    return out


def load_line_catalog(source: Source, cutoff_hz: float = DEFAULT_CUTOFF_HZ) -> list[SpectralLine]:
    """Parse a ``gvdlink-catalog v1`` file.

    Args:
        source: Path, raw bytes, or an open text/binary stream.
        cutoff_hz: Lines above this frequency are dropped.

    Raises:
        CatalogParseError: A row is malformed; carries the 1-based row number.
        EmptyCatalogError: No lines survive parsing and the cutoff.
    """
    return parse_rows(io.StringIO(_read_text(source)), cutoff_hz)


def bundled_catalog_path() -> str:
    """Filesystem path of the packaged water-vapour/oxygen catalog."""
    return str(resources.files("gvdlink") / "data" / "atmosphere_h2o_o2.cat")


def load_bundled_catalog(cutoff_hz: float = DEFAULT_CUTOFF_HZ) -> list[SpectralLine]:
    return load_line_catalog(bundled_catalog_path(), cutoff_hz)
