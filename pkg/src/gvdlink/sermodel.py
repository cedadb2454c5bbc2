"""Analytical symbol error rate under dispersion and AWGN.

Every combination of the ``2p`` neighbouring symbols yields one deterministic
displacement ``d = sum_n s_n w_n`` of the decided symbol. Gaussian noise then
scatters the received point around ``X + d``. For 4-QAM with reference
``X = e^{j pi/4}`` and decision region quadrant I, the conditional error
probability is::

    q_I = erfc(sqrt(SNR) * Re(X + d)) / 2
    q_Q = erfc(sqrt(SNR) * Im(X + d)) / 2
    P   = 1 - (1 - q_I)(1 - q_Q) = q_I + q_Q - q_I q_Q

with ``SNR = E / N0`` per symbol (unit-energy ``X``, noise ``N0 / 2`` per
axis). The SER is the mean of ``P`` over all displacements.

Infinite SNR is evaluated as a limit, not by plugging in a large number: a
displacement is either an error (1) or not (0). Points exactly on a decision
boundary count as errors there and in :func:`deterministic_error_floor`,
while at finite SNR they contribute the ``erfc(0) / 2 = 1/2`` axis factor.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np
from scipy.special import erfc

from gvdlink.errors import BudgetError, DomainError
from gvdlink.qam import QAM4, Constellation, decision_region, square_qam
from gvdlink.shaping import WeightVector

DEFAULT_BUDGET = 4**8


@dataclass(frozen=True)
class SnrPoint:
    """Per-symbol ``E/N0`` as a linear ratio; ``math.inf`` means noiseless."""

    linear: float

    def __post_init__(self):
        if not (self.linear > 0):
            raise DomainError(f"SNR must be positive, got {self.linear}")

    @classmethod
    def from_db(cls, db: float) -> "SnrPoint":
        return cls(math.inf if math.isinf(db) and db > 0 else 10.0 ** (db / 10.0))

    @classmethod
    def infinite(cls) -> "SnrPoint":
        return cls(math.inf)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.linear)

    @property
    def db(self) -> float:
        return math.inf if self.is_infinite else 10.0 * math.log10(self.linear)


def _as_snr(snr: Union[SnrPoint, float]) -> SnrPoint:
    return snr if isinstance(snr, SnrPoint) else SnrPoint(float(snr))


@dataclass(frozen=True, eq=False)
class DispersionDisplacementSet:
    """All ``m**(2p)`` displacements (or a random subset of them)."""

    order: int
    span: int
    values: np.ndarray
    sampled: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if not self.sampled and v.shape != (self.order ** (2 * self.span),):
            raise DomainError(f"expected {self.order ** (2 * self.span)} displacements, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


def symbol_matrix(c: Constellation, p: int) -> np.ndarray:
    """Every neighbour combination, one per row, in odometer order.

    Column 0 (the earliest preceding symbol) is the most significant digit,
    the last column (the latest following symbol) the least significant.
    """
    n = 2 * p
    rows = np.arange(c.order**n)
    digits = (rows[:, None] // c.order ** np.arange(n - 1, -1, -1)) % c.order
    return c.points[digits]


def _accumulate(S: np.ndarray, w: np.ndarray) -> np.ndarray:
    # Column-by-column real arithmetic: fixed rounding order, no fused ops.
    re = np.zeros(S.shape[0])
    im = np.zeros(S.shape[0])
    sr, si = S.real, S.imag
    for n in range(w.size):
        wr, wi = float(w[n].real), float(w[n].imag)
        re = re + (sr[:, n] * wr - si[:, n] * wi)
        im = im + (sr[:, n] * wi + si[:, n] * wr)
    return re + 1j * im


def enumerate_displacements(
    W: WeightVector, c: Constellation = QAM4, budget: int = DEFAULT_BUDGET
) -> DispersionDisplacementSet:
    """``d = S_bar @ W`` over all neighbour combinations.

    Raises:
        BudgetError: ``m**(2p)`` exceeds ``budget``; use
            :func:`subsample_displacements` instead.
    """
    rows = c.order ** (2 * W.span)
    if rows > budget:
        raise BudgetError(
            f"{c.order}**{2 * W.span} = {rows} rows exceeds the budget of {budget}; "
            "use subsample_displacements for a Monte Carlo subset"
        )
    return DispersionDisplacementSet(c.order, W.span, _accumulate(symbol_matrix(c, W.span), W.weights))


def subsample_displacements(
    W: WeightVector, c: Constellation, rows: int, seed: int = 0
) -> DispersionDisplacementSet:
    """Displacements for ``rows`` uniformly drawn neighbour combinations."""
    rng = np.random.Generator(np.random.Philox(seed))
    S = c.points[rng.integers(0, c.order, size=(rows, 2 * W.span))]
    return DispersionDisplacementSet(c.order, W.span, _accumulate(S, W.weights), sampled=True)


def _axis_error(x: np.ndarray, low: float, high: float, root_snr: float) -> np.ndarray:
    q = np.zeros_like(x)
    if math.isfinite(low):
        q = q + 0.5 * erfc(root_snr * (x - low))
    if math.isfinite(high):
        q = q + 0.5 * erfc(root_snr * (high - x))
    return q


def _axis_outside(x: np.ndarray, low: float, high: float) -> np.ndarray:
    return (x <= low) | (x >= high)


def conditional_error_probability(
    X: complex,
    d_d,
    snr: Union[SnrPoint, float],
    constellation: Constellation = QAM4,
):
    """Probability that ``X + d_d`` plus noise leaves the region of ``X``.

    ``d_d`` may be a scalar or an array; the result has the same shape.
    """
    snr = _as_snr(snr)
    region = decision_region(constellation, constellation.index_of(X))
    y = X + np.asarray(d_d, dtype=complex)
    if snr.is_infinite:
        err = _axis_outside(y.real, region.i_low, region.i_high) | _axis_outside(
            y.imag, region.q_low, region.q_high
        )
        out = err.astype(float)
    else:
        r = math.sqrt(snr.linear)
        qi = _axis_error(y.real, region.i_low, region.i_high, r)
        qq = _axis_error(y.imag, region.q_low, region.q_high, r)
        out = qi + qq - qi * qq
    return float(out) if np.ndim(out) == 0 else out


def _references(dset: DispersionDisplacementSet, reference: Optional[complex], c: Constellation):
    if reference is not None:
        return [complex(reference)]
    return [complex(p) for p in c.points]


def _constellation_for(dset: DispersionDisplacementSet, c: Optional[Constellation]) -> Constellation:
    if c is None:
        c = QAM4 if dset.order == 4 else square_qam(dset.order)
    if c.order != dset.order:
        raise DomainError("constellation order does not match the displacement set")
    return c


def model_ser(
    dset: DispersionDisplacementSet,
    snr: Union[SnrPoint, float],
    reference: Optional[complex] = None,
    constellation: Optional[Constellation] = None,
) -> float:
    """Mean conditional error probability over all displacements.

    By default every constellation point serves as the decided symbol in
    turn and the results are averaged. For an exhaustive 4-QAM set this
    equals the single-reference value, because the set is closed under
    rotation by ``j``. Pass ``reference`` to condition on one symbol.
    """
    c = _constellation_for(dset, constellation)
    refs = _references(dset, reference, c)
    total = sum(float(np.mean(conditional_error_probability(X, dset.values, snr, c))) for X in refs)
    return total / len(refs)


def model_ser_sampling_error(
    dset: DispersionDisplacementSet,
    snr: Union[SnrPoint, float],
    reference: Optional[complex] = None,
    constellation: Optional[Constellation] = None,
) -> float:
    """Standard error of :func:`model_ser` for a subsampled set (0 if exhaustive)."""
    if not dset.sampled:
        return 0.0
    c = _constellation_for(dset, constellation)
    probs = np.concatenate(
        [np.atleast_1d(conditional_error_probability(X, dset.values, snr, c)) for X in _references(dset, reference, c)]
    )
    return float(np.std(probs, ddof=1) / math.sqrt(len(dset)))


def deterministic_error_floor(
    dset: DispersionDisplacementSet,
    reference: Optional[complex] = None,
    constellation: Optional[Constellation] = None,
) -> float:
    """Fraction of displacements that put the noiseless sample on or past a boundary."""
    return model_ser(dset, SnrPoint.infinite(), reference, constellation)


def classical_ser(snr: Union[SnrPoint, float]) -> float:
    """Dispersionless 4-QAM: ``erfc(a) - erfc(a)**2 / 4`` with ``a = sqrt(SNR/2)``."""
    snr = _as_snr(snr)
    if snr.is_infinite:
        return 0.0
    e = float(erfc(math.sqrt(snr.linear / 2.0)))
    return e - 0.25 * e * e


# --- SER curves -------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


@dataclass(frozen=True, eq=False)
class SerCurve:
    """SER against one independent variable, plus the run configuration.

    ``ci_low``/``ci_high`` are present for Monte Carlo curves.
    """

    variable: str
    unit: str
    x: np.ndarray
    ser: np.ndarray
    ci_low: Optional[np.ndarray] = None
    ci_high: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        ser = np.asarray(self.ser, dtype=float)
        if x.shape != ser.shape or x.ndim != 1:
            raise DomainError("x and ser must be 1-D arrays of equal length")
        if np.any(np.diff(x) <= 0):
            raise DomainError("x must be strictly increasing")
        if np.any((ser < 0) | (ser > 1)):
            raise DomainError("SER values must lie in [0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "ser", ser)
        for name in ("ci_low", "ci_high"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.asarray(v, dtype=float))

    def __len__(self) -> int:
        return self.x.size

    def to_csv(self, path: Union[str, os.PathLike]) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if self.ci_low is None:
                w.writerow(["x", "ser"])
                for x, s in zip(self.x, self.ser):
                    w.writerow([_fmt(x), _fmt(s)])
            else:
                w.writerow(["x", "ser", "ci_low", "ci_high"])
                for row in zip(self.x, self.ser, self.ci_low, self.ci_high):
                    w.writerow([_fmt(v) for v in row])

    def sidecar(self) -> dict:
        return {"variable": self.variable, "unit": self.unit, "points": len(self), "metadata": self.metadata}

    def write(self, stem: Union[str, os.PathLike]) -> tuple[str, str]:
        """Write ``<stem>.csv`` and the ``<stem>.json`` metadata sidecar."""
        stem = os.fspath(stem)
        self.to_csv(stem + ".csv")
        with open(stem + ".json", "w", encoding="utf-8") as fh:
            json.dump(self.sidecar(), fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        return stem + ".csv", stem + ".json"

    @classmethod
    def read_csv(cls, path: Union[str, os.PathLike], variable: str = "x", unit: str = "") -> "SerCurve":
        with open(path, encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
        if header[:2] != ["x", "ser"]:
            raise DomainError(f"unexpected SER curve header {header}")
        if len(header) == 4:
            return cls(variable, unit, body[:, 0], body[:, 1], body[:, 2], body[:, 3])
        return cls(variable, unit, body[:, 0], body[:, 1])


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def model_waterfall(
    dset: DispersionDisplacementSet, snr_db: Iterable[float], metadata: Optional[dict] = None
) -> SerCurve:
    xs = list(snr_db)
    ser = [model_ser(dset, SnrPoint.from_db(x)) for x in xs]
    return SerCurve("snr", "dB", np.array(xs, dtype=float), np.array(ser), metadata=dict(metadata or {}))
