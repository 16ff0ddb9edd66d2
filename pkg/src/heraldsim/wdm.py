"""Wavelength-division channel plans over one broadband pair source.

A broadband spontaneous four-wave-mixing source feeds many 50 GHz-spaced
wavelength channels at once.  This module lays out the channel grid,
converts measured noise-count scans into per-slot noise probabilities,
and aggregates per-channel link metrics (analytically, or from Monte
Carlo runs with per-channel derived seeds) into plan totals.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .core import (ChannelSpec, DetectorSpec, LinkMetrics, SourceSpec, Transmittance,
                   frequency_to_wavelength, link_metrics, wavelength_to_frequency)
from .montecarlo import (MetricsEstimate, SimConfig, derive_seed, estimate_metrics,
                         simulate)

__all__ = [
    "CHANNEL_COUNT",
    "CHANNEL_SPACING_HZ",
    "ANCHOR_WAVELENGTH_NM",
    "NOISE_SCAN_COLUMNS",
    "WdmChannel",
    "ChannelPlan",
    "NoiseScanRow",
    "ChannelMetrics",
    "WdmAggregate",
    "channel_wavelength",
    "p_noise_from_scan",
    "load_noise_scan",
    "aggregate",
]

CHANNEL_COUNT = 64
CHANNEL_SPACING_HZ = 50e9
ANCHOR_WAVELENGTH_NM = 1308.2

NOISE_SCAN_COLUMNS = ("laser_wavelength_nm", "noise_counts_per_s", "clock_rate_hz")


def channel_wavelength(index: int) -> float:
    """Center wavelength in nm of a grid channel.

    Channel 1 sits at the anchor wavelength; each increment steps up in
    frequency by the channel spacing, so wavelengths decrease with index.
    """
    if not isinstance(index, int) or not 1 <= index <= CHANNEL_COUNT:
        raise ValueError(f"channel index must be an integer in [1, {CHANNEL_COUNT}], got {index!r}")
    f0 = wavelength_to_frequency(ANCHOR_WAVELENGTH_NM * 1e-9)
    return frequency_to_wavelength(f0 + (index - 1) * CHANNEL_SPACING_HZ) * 1e9


@dataclass(frozen=True)
class WdmChannel:
    """One plan entry: grid position plus optional per-channel overrides.

    ``sfwm_weight`` scales the source's mean pair number for this
    channel, modeling the spectral shape of the pair-generation
    efficiency.  Transmittance and noise overrides, when given, replace
    the base channel values; None means inherit.
    """

    index: int
    center_wavelength_nm: float | None = None
    sfwm_weight: float = 1.0
    alpha_r: Transmittance | None = None
    alpha_d: Transmittance | None = None
    p_noise: float | None = None

    def __post_init__(self) -> None:
        grid_nm = channel_wavelength(self.index)
        if self.center_wavelength_nm is None:
            object.__setattr__(self, "center_wavelength_nm", grid_nm)
        elif not (math.isfinite(self.center_wavelength_nm) and self.center_wavelength_nm > 0.0):
            raise ValueError(f"center_wavelength_nm must be positive, got {self.center_wavelength_nm!r}")
        w = self.sfwm_weight
        if not (isinstance(w, (int, float)) and math.isfinite(w) and 0.0 < w <= 1.0):
            raise ValueError(f"sfwm_weight must be in (0, 1], got {w!r}")
        object.__setattr__(self, "sfwm_weight", float(w))
        if self.p_noise is not None and not 0.0 <= self.p_noise < 1.0:
            raise ValueError(f"p_noise override must be in [0, 1), got {self.p_noise!r}")

    def resolve(self, base: ChannelSpec) -> ChannelSpec:
        """Base channel with this entry's overrides applied."""
        return ChannelSpec(
            alpha_r=self.alpha_r if self.alpha_r is not None else base.alpha_r,
            alpha_d=self.alpha_d if self.alpha_d is not None else base.alpha_d,
            p_noise=self.p_noise if self.p_noise is not None else base.p_noise,
        )


@dataclass(frozen=True)
class ChannelPlan:
    """Ordered, duplicate-free set of WDM channels."""

    channels: tuple[WdmChannel, ...]

    def __post_init__(self) -> None:
        chans = tuple(self.channels)
        if not chans:
            raise ValueError("a channel plan needs at least one channel")
        indices = [c.index for c in chans]
        if len(set(indices)) != len(indices):
            raise ValueError(f"duplicate channel indices in plan: {sorted(indices)}")
        ordered = sorted(chans, key=lambda c: c.index)
        # frequency grid: wavelength must fall as index rises
        for lo, hi in zip(ordered, ordered[1:]):
            if hi.center_wavelength_nm >= lo.center_wavelength_nm:
                raise ValueError(
                    f"channel {hi.index} wavelength {hi.center_wavelength_nm} nm does not "
                    f"decrease from channel {lo.index} ({lo.center_wavelength_nm} nm)")
        object.__setattr__(self, "channels", ordered if chans != ordered else chans)

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelPlan":
        if not isinstance(data, dict) or "channels" not in data:
            raise ValueError("channel plan JSON must be an object with a 'channels' list")
        entries = data["channels"]
        if not isinstance(entries, list):
            raise ValueError("'channels' must be a list")
        chans = []
        for i, entry in enumerate(entries):
            if not isinstance(entry, dict):
                raise ValueError(f"channels[{i}] must be an object")
            known = {"index", "center_wavelength_nm", "sfwm_weight",
                     "alpha_r_db", "alpha_d_db", "p_noise"}
            unknown = set(entry) - known
            if unknown:
                raise ValueError(f"channels[{i}]: unknown fields {sorted(unknown)}")
            if "index" not in entry:
                raise ValueError(f"channels[{i}]: missing 'index'")
            chans.append(WdmChannel(
                index=entry["index"],
                center_wavelength_nm=entry.get("center_wavelength_nm"),
                sfwm_weight=entry.get("sfwm_weight", 1.0),
                alpha_r=(Transmittance.from_db(entry["alpha_r_db"])
                         if "alpha_r_db" in entry else None),
                alpha_d=(Transmittance.from_db(entry["alpha_d_db"])
                         if "alpha_d_db" in entry else None),
                p_noise=entry.get("p_noise"),
            ))
        return cls(tuple(chans))

    @classmethod
    def load(cls, path: "str | Path") -> "ChannelPlan":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class NoiseScanRow:
    """One noise-laser scan point: counts observed against a known clock."""

    laser_wavelength_nm: float
    noise_counts_per_s: float
    clock_rate_hz: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.laser_wavelength_nm) and self.laser_wavelength_nm > 0.0):
            raise ValueError(f"laser_wavelength_nm must be positive, got {self.laser_wavelength_nm!r}")
        if not (math.isfinite(self.noise_counts_per_s) and self.noise_counts_per_s >= 0.0):
            raise ValueError(f"noise_counts_per_s must be >= 0, got {self.noise_counts_per_s!r}")
        if not (math.isfinite(self.clock_rate_hz) and self.clock_rate_hz > 0.0):
            raise ValueError(f"clock_rate_hz must be > 0, got {self.clock_rate_hz!r}")
        if self.noise_counts_per_s >= self.clock_rate_hz:
            raise ValueError("noise_counts_per_s must be below clock_rate_hz; "
                             "at most one count fits per clock period")


def p_noise_from_scan(row: NoiseScanRow) -> float:
    """Per-slot noise probability: counts per second over gate openings per second."""
    return row.noise_counts_per_s / row.clock_rate_hz


def load_noise_scan(path: "str | Path") -> list[NoiseScanRow]:
    """Read a noise scan CSV with the pinned three-column header."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != NOISE_SCAN_COLUMNS:
            raise ValueError(
                f"noise scan header must be {','.join(NOISE_SCAN_COLUMNS)}, "
                f"got {reader.fieldnames}")
        rows = []
        for i, rec in enumerate(reader):
            try:
                rows.append(NoiseScanRow(*(float(rec[c]) for c in NOISE_SCAN_COLUMNS)))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"noise scan row {i + 1}: {exc}") from exc
    if not rows:
        raise ValueError("noise scan has no data rows")
    return rows


@dataclass(frozen=True)
class ChannelMetrics:
    """Per-channel aggregation row."""

    channel: WdmChannel
    wavelength_nm: float
    metrics: LinkMetrics
    rate_hz: float
    estimate: MetricsEstimate | None = None


@dataclass(frozen=True)
class WdmAggregate:
    """Plan-level rollup: per-channel rows plus totals.

    ``total_rate_hz`` sums the per-channel detected-photon rates;
    ``mean_qber`` weights each channel's QBER by its detection rate, so
    it is the error fraction of the pooled detections.
    """

    per_channel: tuple[ChannelMetrics, ...]
    total_rate_hz: float
    mean_qber: float | None


def _channel_rate_per_slot(source: SourceSpec, metrics: LinkMetrics) -> float:
    if source.kind == "wcs":
        return metrics.p_s
    return metrics.p_t * metrics.p_cond


def aggregate(plan: ChannelPlan, source: SourceSpec, channel: ChannelSpec,
              detector: DetectorSpec, sim: SimConfig | None = None) -> WdmAggregate:
    """Evaluate every plan channel against a base source/channel/detector.

    Each channel sees the base source with mu scaled by its
    ``sfwm_weight`` and the base channel with its overrides applied.
    When ``sim`` is given, a Monte Carlo run per channel (seed derived
    from ``sim.seed`` and the channel index, so results do not depend on
    plan order) supplies estimated metrics alongside the analytic ones;
    totals always come from the analytic values.
    """
    rows = []
    total_rate = 0.0
    qber_weight = 0.0
    for chan in plan.channels:
        if source.kind == "wcs":
            src = SourceSpec.wcs(source.mu * chan.sfwm_weight)
        else:
            src = replace(source, mu=source.mu * chan.sfwm_weight)
        ch_spec = chan.resolve(channel)
        lm = link_metrics(src, ch_spec)
        rate = _channel_rate_per_slot(src, lm) * detector.pulse_rate_hz
        est = None
        if sim is not None:
            cfg = replace(sim, source=src, channel=ch_spec, detector=detector,
                          seed=derive_seed(sim.seed, chan.index))
            est = estimate_metrics(simulate(cfg), cfg)
        rows.append(ChannelMetrics(chan, chan.center_wavelength_nm, lm, rate, est))
        total_rate += rate
        qber_weight += rate * lm.qber
    mean_qber = qber_weight / total_rate if total_rate > 0.0 else None
    return WdmAggregate(tuple(rows), total_rate, mean_qber)
