"""Atmospheric and synthetic channel transfer functions."""

from gvdlink.channel.atmosphere import (
    AtmosphereState,
    complex_refractivity,
    saturation_vapor_pressure,
    specific_attenuation_db_per_km,
    vapor_density_from_relative_humidity,
)
from gvdlink.channel.catalog import (
    SpectralLine,
    bundled_catalog_path,
    load_bundled_catalog,
    load_line_catalog,
)
from gvdlink.channel.transfer import (
    AtmosphericChannel,
    ChannelModel,
    ChannelTransferFunction,
    FrequencyGrid,
    PhaseTaylorCoefficients,
    PolynomialChannel,
    TabulatedChannel,
    export_transfer_function,
    fit_taylor_coefficients,
    identity_channel,
    import_transfer_function,
    link_grid,
    polynomial_phase_channel,
    synthesize_transfer_function,
    unwrap_phase,
)

__all__ = [
    "AtmosphereState",
    "AtmosphericChannel",
    "ChannelModel",
    "ChannelTransferFunction",
    "FrequencyGrid",
    "PhaseTaylorCoefficients",
    "PolynomialChannel",
    "SpectralLine",
    "TabulatedChannel",
    "bundled_catalog_path",
    "complex_refractivity",
    "export_transfer_function",
    "fit_taylor_coefficients",
    "identity_channel",
    "import_transfer_function",
    "link_grid",
    "load_bundled_catalog",
    "load_line_catalog",
    "polynomial_phase_channel",
    "saturation_vapor_pressure",
    "specific_attenuation_db_per_km",
    "synthesize_transfer_function",
    "unwrap_phase",
    "vapor_density_from_relative_humidity",
]
