"""Distance, SNR and symbol-rate sweeps, and dispersion-limit search.

Library quantities are SI: distances in metres, symbol rates in baud, SNR
in dB on curve axes.

The dispersion limit is located on the noiseless error floor, which is a
step function of distance: it changes only when a displacement crosses a
decision boundary. The result is therefore a bracket ``[lower, upper]``
rather than a point: the floor is at most the threshold at ``lower`` and
exceeds it at ``upper``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from gvdlink.errors import DomainError, MonotonicityError
from gvdlink.link import Link
from gvdlink.montecarlo import SimulationConfig, curve_from_results, point_seed, run_simulation
from gvdlink.sermodel import SerCurve, SnrPoint

VARIABLES = {"distance": "m", "snr": "dB", "symbol_rate": "Bd"}
ENGINES = ("analytical", "montecarlo", "both")


@dataclass(frozen=True, eq=False)
class SweepSpec:
    """One swept variable over a link with every other parameter fixed.

    Attributes:
        variable: ``distance`` (m), ``snr`` (dB) or ``symbol_rate`` (Bd).
        values: Strictly increasing sweep points in those units.
        link: Channel, carrier, pulse and model span.
        snr: Fixed SNR for distance and symbol-rate sweeps.
        path_length: Fixed distance (m) for SNR and symbol-rate sweeps.
        engine: ``analytical``, ``montecarlo`` or ``both``.
        simulation: Monte Carlo template (frames, seed, oversampling). Its
            channel, carrier, pulse, distance and SNR are overridden per point.
    """

    variable: str
    values: tuple
    link: Link
    snr: SnrPoint = field(default_factory=SnrPoint.infinite)
    path_length: float = 0.0
    engine: str = "analytical"
    simulation: Optional[SimulationConfig] = None

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise DomainError(f"variable must be one of {sorted(VARIABLES)}, got {self.variable!r}")
        if self.engine not in ENGINES:
            raise DomainError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        v = tuple(float(x) for x in self.values)
        if not v:
            raise DomainError("sweep range is empty")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise DomainError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_range(cls, variable: str, start: float, stop: float, step: float, link: Link, **kw) -> "SweepSpec":
        if not step > 0:
            raise DomainError("sweep step must be positive")
        if stop < start:
            raise DomainError("sweep range is empty")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return cls(variable, tuple(start + step * np.arange(n)), link, **kw)

    @property
    def unit(self) -> str:
        return VARIABLES[self.variable]

    def point(self, x: float) -> tuple[Link, float, SnrPoint]:
        """Link, distance and SNR at sweep value ``x``."""
        if self.variable == "distance":
            return self.link, x, self.snr
        if self.variable == "snr":
            return self.link, self.path_length, SnrPoint.from_db(x)
        return self.link.with_symbol_rate(x), self.path_length, self.snr

    def metadata(self, engine: str) -> dict:
        fixed = {}
        if self.variable != "snr":
            fixed["snr_db"] = "inf" if self.snr.is_infinite else self.snr.db
        if self.variable != "distance":
            fixed["path_length_m"] = self.path_length
        return {"engine": engine, "variable": self.variable, "link": self.link.describe(), **fixed}


def _simulation_for(spec: SweepSpec, link: Link, distance: float, snr: SnrPoint, index: int) -> SimulationConfig:
    base = spec.simulation or SimulationConfig(link.carrier, link.pulse, span=link.span)
    return base.replace(
        carrier=link.carrier,
        pulse=link.pulse,
        channel=link.channel,
        path_length=distance,
        snr=snr,
        span=link.span,
        rng_seed=point_seed(base.rng_seed, index),
    )


def run_sweep(spec: SweepSpec) -> dict[str, SerCurve]:
    """SER over the sweep, one curve per engine (keys ``analytical``/``montecarlo``)."""
    curves: dict[str, SerCurve] = {}
    xs = np.array(spec.values)
    if spec.engine in ("analytical", "both"):
        ser = []
        for x in spec.values:
            link, distance, snr = spec.point(x)
            ser.append(link.ser(distance, snr))
        curves["analytical"] = SerCurve(spec.variable, spec.unit, xs, np.array(ser), metadata=spec.metadata("analytical"))
    if spec.engine in ("montecarlo", "both"):
        results = [run_simulation(_simulation_for(spec, *spec.point(x), i)) for i, x in enumerate(spec.values)]
        meta = spec.metadata("montecarlo")
        base = results[0].config
        meta["simulation"] = {k: base[k] for k in ("frame_bits", "frame_count", "samples_per_symbol")}
        curves["montecarlo"] = curve_from_results(spec.variable, spec.unit, xs, results, meta)
    return curves


@dataclass(frozen=True, eq=False)
class DispersionLimitResult:
    """Bracketed distance at which the noiseless floor first exceeds the threshold.

    ``limit_distance`` is the bracket midpoint, or ``inf`` when the floor
    stays at or below the threshold over the whole search range.
    """

    limit_distance: float
    threshold_ser: float
    bracket: tuple[float, float]
    curve: SerCurve

    def __post_init__(self):
        if not 0 < self.threshold_ser < 1:
            raise DomainError("threshold must lie in (0, 1)")
        lo, hi = self.bracket
        if not lo <= self.limit_distance <= hi:
            raise DomainError("limit distance lies outside its bracket")

    @property
    def found(self) -> bool:
        return math.isfinite(self.limit_distance)

    @property
    def bracket_width(self) -> float:
        return self.bracket[1] - self.bracket[0]

    def to_dict(self) -> dict:
        return {
            "limit_distance_m": self.limit_distance if self.found else None,
            "threshold_ser": self.threshold_ser,
            "bracket_m": [self.bracket[0], self.bracket[1] if self.found else None],
            "found": self.found,
        }


def find_dispersion_limit(
    link: Link,
    threshold_ser: float,
    start: float = 0.0,
    stop: float = 50e3,
    coarse_step: float = 1e3,
    bracket_width: float = 50.0,
) -> DispersionLimitResult:
    """Bisect the noiseless floor against ``threshold_ser`` over ``[start, stop]`` metres.

    The floor is first evaluated on a coarse grid, then the first coarse
    interval that crosses the threshold is bisected down to
    ``bracket_width``. Up to that crossing the floor must be non-decreasing,
    and afterwards it must stay above the threshold, otherwise the limit
    would not be unique. Small decreases above the threshold (a saturated
    floor jittering as displacements cross back) do not affect the limit;
    they are listed under ``floor_decreases_m`` in the curve metadata.

    Raises:
        DomainError: the floor already exceeds the threshold at ``start``.
        MonotonicityError: the floor decreases before the crossing, or falls
            back to the threshold after it.
    """
    if not 0 < threshold_ser < 1:
        raise DomainError("threshold must lie in (0, 1)")
    if not (stop > start >= 0 and coarse_step > 0 and bracket_width > 0):
        raise DomainError("need 0 <= start < stop and positive step and bracket width")
    n = int(math.ceil((stop - start) / coarse_step - 1e-9))
    grid = [float(x) for x in np.minimum(start + coarse_step * np.arange(n + 1), stop)]
    evaluated: dict[float, float] = {}

    def floor(d: float) -> float:
        if d not in evaluated:
            evaluated[d] = link.floor(d)
        return evaluated[d]

    if floor(grid[0]) > threshold_ser:
        raise DomainError(
            f"floor {floor(grid[0]):.3g} at the range start {grid[0]} m already exceeds the threshold"
        )
    crossing = None
    decreases = []
    for a, b in zip(grid, grid[1:]):
        fa, fb = floor(a), floor(b)
        if fb < fa:
            if crossing is None or fb <= threshold_ser:
                raise MonotonicityError(
                    f"error floor falls from {fa:.6g} at {a} m to {fb:.6g} at {b} m", (a, b)
                )
            decreases.append([a, b])
        if crossing is None and fb > threshold_ser:
            crossing = (a, b)

    if crossing is None:
        limit, bracket = math.inf, (grid[-1], math.inf)
    else:
        lo, hi = crossing
        while hi - lo > bracket_width:
            mid = 0.5 * (lo + hi)
            if floor(mid) > threshold_ser:
                hi = mid
            else:
                lo = mid
        limit, bracket = 0.5 * (lo + hi), (lo, hi)

    xs = sorted(evaluated)
    curve = SerCurve(
        "distance",
        "m",
        np.array(xs),
        np.array([evaluated[x] for x in xs]),
        metadata={
            "engine": "analytical",
            "snr_db": "inf",
            "threshold_ser": threshold_ser,
            "floor_decreases_m": decreases,
            "link": link.describe(),
        },
    )
    return DispersionLimitResult(limit, threshold_ser, bracket, curve)


def floor_ordering(links: Sequence[Link], distance: float) -> list[float]:
    """Noiseless floors of several links at one distance, in input order."""
    return [link.floor(distance) for link in links]
