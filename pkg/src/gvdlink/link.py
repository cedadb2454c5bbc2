"""One link configuration evaluated end to end by the analytical model.

:class:`Link` bundles a channel, a carrier and a pulse shape. For any path
length it builds the composite impulse response, extracts the ISI weights
and enumerates the displacement set that :mod:`gvdlink.sermodel` turns into
a symbol error rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from gvdlink.channel import (
    AtmosphereState,
    AtmosphericChannel,
    ChannelModel,
    ChannelTransferFunction,
    FrequencyGrid,
    PhaseTaylorCoefficients,
    PolynomialChannel,
    identity_channel,
    link_grid,
    load_bundled_catalog,
)
from gvdlink.errors import DomainError
from gvdlink.qam import QAM4, Constellation
from gvdlink.sermodel import (
    DEFAULT_BUDGET,
    DispersionDisplacementSet,
    SnrPoint,
    enumerate_displacements,
    model_ser,
)
from gvdlink.shaping import (
    BasebandImpulseResponse,
    PulseShapeSpec,
    WeightVector,
    composite_impulse_response,
    extract_weights,
    filter_pair,
)


def catalog_channel(atmosphere: AtmosphereState) -> AtmosphericChannel:
    """Channel built from the bundled water-vapour and oxygen catalog."""
    return AtmosphericChannel(load_bundled_catalog(), atmosphere)


def as_channel(channel: Union[ChannelModel, AtmosphereState, None], carrier: float) -> ChannelModel:
    if channel is None:
        return identity_channel(carrier)
    if isinstance(channel, AtmosphereState):
        return catalog_channel(channel)
    return channel


@dataclass(eq=False)
class Link:
    """Channel, carrier and pulse shape evaluated on the default analysis grid.

    Attributes:
        channel: Any :class:`~gvdlink.channel.ChannelModel`.
        carrier: Carrier frequency in Hz.
        pulse: Pulse-shaping parameters (symbol rate, rolloff, split).
        span: Neighbour symbols ``p`` on each side kept in the model.
        oversample: Grid points per symbol-rate bandwidth.
        span_factor: Grid span in multiples of the occupied bandwidth.
    """

    channel: ChannelModel
    carrier: float
    pulse: PulseShapeSpec
    span: int = 3
    oversample: int = 1024
    span_factor: float = 8.0
    constellation: Constellation = QAM4
    budget: int = DEFAULT_BUDGET
    _filters: Optional[tuple] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.carrier > 0:
            raise DomainError(f"carrier must be positive, got {self.carrier}")
        if self.span < 1:
            raise DomainError("symbol span must be at least 1")
        self.grid: FrequencyGrid = link_grid(
            self.carrier, self.pulse.symbol_rate, self.pulse.rolloff, self.oversample, self.span_factor
        )
        if self.carrier <= self.pulse.occupied_bandwidth / 2:
            raise DomainError("carrier is too low for the occupied bandwidth")

    def filters(self) -> tuple[ChannelTransferFunction, ChannelTransferFunction]:
        if self._filters is None:
            self._filters = filter_pair(self.pulse, self.grid, self.carrier)
        return self._filters

    def transfer_function(self, path_length: float) -> ChannelTransferFunction:
        """Channel over the filter passband; 1 elsewhere, where the filters null it anyway.

        Wide grids for fast links at low carriers reach negative
        frequencies, where a physical channel is undefined.
        """
        tx, rx = self.filters()
        band = np.flatnonzero((tx.values != 0) & (rx.values != 0))
        values = np.ones(self.grid.count, dtype=complex)
        values[band] = self.channel.response(self.grid.frequencies[band], path_length)
        return ChannelTransferFunction(self.grid, values, path_length)

    def impulse_response(self, path_length: float) -> BasebandImpulseResponse:
        tx, rx = self.filters()
        return composite_impulse_response(self.transfer_function(path_length), tx, rx, self.carrier)

    def weights(self, path_length: float, span: Optional[int] = None) -> WeightVector:
        return extract_weights(self.impulse_response(path_length), self.pulse, span or self.span)

    def displacements(self, path_length: float, span: Optional[int] = None) -> DispersionDisplacementSet:
        return enumerate_displacements(self.weights(path_length, span), self.constellation, self.budget)

    def ser(self, path_length: float, snr: Union[SnrPoint, float]) -> float:
        return model_ser(self.displacements(path_length), snr, constellation=self.constellation)

    def floor(self, path_length: float) -> float:
        return self.ser(path_length, SnrPoint.infinite())

    def with_symbol_rate(self, symbol_rate: float) -> "Link":
        pulse = PulseShapeSpec(symbol_rate, self.pulse.rolloff, self.pulse.split)
        return Link(self.channel, self.carrier, pulse, self.span, self.oversample, self.span_factor,
                    self.constellation, self.budget)

    def describe(self) -> dict:
        return {
            "channel": self.channel.describe(),
            "carrier_hz": self.carrier,
            "symbol_rate_bd": self.pulse.symbol_rate,
            "rolloff": self.pulse.rolloff,
            "split": self.pulse.split,
            "span": self.span,
            "oversample": self.oversample,
            "span_factor": self.span_factor,
            "order": self.constellation.order,
        }


def pure_gdd_channel(carrier: float, gdd_per_metre: float) -> ChannelModel:
    """Synthetic channel whose only distortion is ``phi2 = gdd_per_metre * L``."""
    coeffs = PhaseTaylorCoefficients(2 * math.pi * carrier, (0.0, 0.0, gdd_per_metre))
    return PolynomialChannel(coeffs, 0.0, reference_length=1.0)
