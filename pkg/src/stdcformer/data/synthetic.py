"""Seeded synthetic crowd-flow data for desk-scale experiments.

Flows are built from the same quantities that the emitted confounder tables
describe: each region's scale is a function of its synthetic POI counts and
the weekly modulation is a function of day-of-week, so the confounders carry
real signal about the series.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import List, Tuple

import numpy as np

from ..graph import AdjacencyGraph, grid_graph, ring_graph
from .confounders import (
    DEFAULT_POI_VOCAB,
    DEFAULT_WEATHER_VOCAB,
    SpatialRecord,
    TemporalRecord,
    encode_spatial_features,
    encode_temporal_features,
    SpatialConfounderTable,
    TemporalConfounderTable,
)
from .flow import FlowSeries, HOUR

EPOCH = datetime(2024, 1, 1, 0)  # a Monday, so day-of-week 0 at index 0

# relative weekday/weekend shape, scaled by the profile's dow_amplitude
DOW_SHAPE = (0.10, 0.15, 0.15, 0.10, 0.30, -0.40, -0.45)

# share of the leading timesteps used for temperature statistics; matches the
# training portion of the default 7:1:2 split
TEMP_STAT_FRAC = 0.7


@dataclass
class SyntheticProfile:
    """Declarative generator settings (graph kind, noise, region scales)."""

    graph: str = "grid"
    noise: float = 1.0
    dow_amplitude: float = 0.25
    region_scale: Tuple[float, float] = (5.0, 50.0)

    VALID_GRAPHS = ("grid", "ring")

    def __post_init__(self):
        if self.graph not in self.VALID_GRAPHS:
            raise ValueError(f"unknown graph kind {self.graph!r}; use {self.VALID_GRAPHS}")
        if self.noise < 0 or self.dow_amplitude < 0:
            raise ValueError("noise and dow_amplitude must be >= 0")
        lo, hi = self.region_scale
        if not 0 < lo <= hi:
            raise ValueError(f"region_scale range must satisfy 0 < lo <= hi, got {self.region_scale}")

    @classmethod
    def from_dict(cls, payload: dict) -> "SyntheticProfile":
        known = {"graph", "noise", "dow_amplitude", "region_scale"}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"invalid profile keys {sorted(unknown)}; known keys: {sorted(known)}")
        payload = dict(payload)
        if "region_scale" in payload:
            payload["region_scale"] = tuple(float(v) for v in payload["region_scale"])
        return cls(**payload)

    def to_dict(self) -> dict:
        return {
            "graph": self.graph,
            "noise": self.noise,
            "dow_amplitude": self.dow_amplitude,
            "region_scale": list(self.region_scale),
        }


@dataclass
class SyntheticData:
    flow: FlowSeries
    temporal: TemporalConfounderTable
    spatial: SpatialConfounderTable
    graph: AdjacencyGraph
    temporal_records: List[TemporalRecord] = field(default_factory=list)
    spatial_records: List[SpatialRecord] = field(default_factory=list)

    def __iter__(self):
        return iter((self.flow, self.temporal, self.spatial, self.graph))


def generate_synthetic(
    n: int, length: int, seed: int, profile: SyntheticProfile | dict | None = None
) -> SyntheticData:
    """Generate a fully reproducible synthetic city.

    Inflow/outflow rates are a region-scaled daily sinusoid times a
    day-of-week modulation; with noise > 0 the observed counts are
    Poisson-distributed around those rates.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if length < 24:
        raise ValueError("length must be >= 24")
    if profile is None:
        profile = SyntheticProfile()
    elif isinstance(profile, dict):
        profile = SyntheticProfile.from_dict(profile)

    rng = np.random.default_rng(seed)
    region_ids = [f"Z{i:03d}" for i in range(n)]
    graph = grid_graph(n) if profile.graph == "grid" else ring_graph(n)

    # spatial records; region scale derives from total POI count
    poi_counts = rng.integers(0, 30, size=(n, len(DEFAULT_POI_VOCAB)))
    totals = poi_counts.sum(axis=1).astype(np.float64)
    max_total = totals.max() if totals.max() > 0 else 1.0
    lo, hi = profile.region_scale
    scales = lo + (hi - lo) * totals / max_total
    spatial_records = []
    for i, rid in enumerate(region_ids):
        spatial_records.append(
            SpatialRecord(
                region_id=rid,
                poi_counts={c: float(poi_counts[i, k]) for k, c in enumerate(DEFAULT_POI_VOCAB)},
                houses_for_sale=float(rng.integers(0, 200)),
                avg_price=float(rng.uniform(2e5, 2e6)),
                shootings=float(rng.integers(0, 10)),
                complaints=float(rng.integers(0, 500)),
            )
        )

    # temporal records; weather/temperature drawn per day
    timestamps = [EPOCH + t * HOUR for t in range(length)]
    days = (length + 23) // 24
    day_weather = rng.choice(len(DEFAULT_WEATHER_VOCAB), size=days)
    day_base_temp = 10.0 + 8.0 * np.sin(2 * np.pi * np.arange(days) / 28.0) + rng.normal(0, 2, size=days)
    holiday_days = set(np.nonzero(rng.random(days) < 1 / 30)[0].tolist())
    temporal_records = []
    for t, ts in enumerate(timestamps):
        day = t // 24
        temporal_records.append(
            TemporalRecord(
                hour=ts.hour,
                day_of_week=ts.weekday(),
                is_holiday=day in holiday_days,
                weather=DEFAULT_WEATHER_VOCAB[day_weather[day]],
                temperature=float(day_base_temp[day] + 4.0 * np.sin(2 * np.pi * (ts.hour - 14) / 24.0)),
            )
        )

    # flows: rate(t, i, feature) with inflow peaking mid-morning, outflow evening
    peak_in = rng.uniform(7.0, 11.0, size=n)
    peak_out = peak_in + 9.0
    hours = np.array([ts.hour for ts in timestamps], dtype=np.float64)
    dows = np.array([ts.weekday() for ts in timestamps])
    dow_mod = 1.0 + profile.dow_amplitude * np.asarray(DOW_SHAPE)[dows]
    values = np.zeros((length, n, 2), dtype=np.float64)
    for i in range(n):
        daily_in = 1.0 + 0.9 * np.sin(2 * np.pi * (hours - peak_in[i]) / 24.0)
        daily_out = 1.0 + 0.9 * np.sin(2 * np.pi * (hours - peak_out[i]) / 24.0)
        values[:, i, 0] = scales[i] * daily_in * dow_mod
        values[:, i, 1] = scales[i] * daily_out * dow_mod
    if profile.noise > 0:
        values = rng.poisson(values / profile.noise) * profile.noise

    flow = FlowSeries(values=values, timestamps=timestamps, region_ids=region_ids)
    temporal = encode_confounders_with_train_stats(temporal_records)
    spatial = encode_spatial_features(spatial_records, DEFAULT_POI_VOCAB)
    return SyntheticData(
        flow=flow,
        temporal=temporal,
        spatial=spatial,
        graph=graph,
        temporal_records=temporal_records,
        spatial_records=spatial_records,
    )


def encode_confounders_with_train_stats(
    records: List[TemporalRecord], weather_vocab=DEFAULT_WEATHER_VOCAB
) -> TemporalConfounderTable:
    """Encode temporal records standardizing temperature on the leading
    TEMP_STAT_FRAC of rows (the training range of the chronological split)."""
    cut = max(1, int(len(records) * TEMP_STAT_FRAC))
    temps = np.array([r.temperature for r in records[:cut]], dtype=np.float64)
    return encode_temporal_features(
        records, weather_vocab, temp_stats=(float(temps.mean()), float(temps.std()))
    )
