"""Temporal and spatial confounder tables.

Temporal rows describe each timestep (calendar, holiday, weather, temperature);
spatial rows describe each region (POI mix, housing, safety). Column order is
published as a schema descriptor so that models trained on one city can be
applied to another with the same layout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..validation import check_finite

DEFAULT_WEATHER_VOCAB = ("clear", "cloudy", "rain", "snow", "fog")
DEFAULT_POI_VOCAB = ("food", "retail", "office", "park", "school", "transit")

HOURS_PER_DAY = 24
DAYS_PER_WEEK = 7


@dataclass
class TemporalRecord:
    hour: int
    day_of_week: int
    is_holiday: bool
    weather: str
    temperature: float


@dataclass
class SpatialRecord:
    region_id: str
    poi_counts: dict
    houses_for_sale: float
    avg_price: float
    shootings: float
    complaints: float


@dataclass
class TemporalConfounderTable:
    rows: np.ndarray  # [L, t_dim]
    schema: List[str]
    weather_vocab: Tuple[str, ...]
    temp_mean: float
    temp_std: float

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.shape[1] != len(self.schema):
            raise ValueError("temporal schema width does not match rows")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def column_slices(self) -> dict:
        """Index ranges of each feature group, keyed by group name."""
        w = len(self.weather_vocab)
        return {
            "hour": slice(0, HOURS_PER_DAY),
            "day_of_week": slice(HOURS_PER_DAY, HOURS_PER_DAY + DAYS_PER_WEEK),
            "is_holiday": slice(31, 32),
            "weather": slice(32, 32 + w),
            "temperature": slice(32 + w, 33 + w),
        }


@dataclass
class SpatialConfounderTable:
    rows: np.ndarray  # [n, s_dim]
    schema: List[str]
    region_ids: List[str]

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        if self.rows.shape[1] != len(self.schema):
            raise ValueError("spatial schema width does not match rows")
        if self.rows.shape[0] != len(self.region_ids):
            raise ValueError("spatial row count does not match region ids")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def temporal_schema(weather_vocab: Sequence[str]) -> List[str]:
    cols = [f"hour_{h}" for h in range(HOURS_PER_DAY)]
    cols += [f"dow_{d}" for d in range(DAYS_PER_WEEK)]
    cols.append("is_holiday")
    cols += [f"weather_{w}" for w in weather_vocab]
    cols.append("temperature")
    return cols


def encode_temporal_features(
    records: Sequence[TemporalRecord],
    weather_vocab: Sequence[str] = DEFAULT_WEATHER_VOCAB,
    temp_stats: Optional[Tuple[float, float]] = None,
) -> TemporalConfounderTable:
    """One-hot calendar/weather encoding with standardized temperature.

    `temp_stats` holds the (mean, std) used for temperature; pass statistics
    from the training range to avoid leakage. Defaults to statistics over the
    given records.
    """
    vocab = tuple(weather_vocab)
    weather_index = {w: i for i, w in enumerate(vocab)}
    schema = temporal_schema(vocab)
    if temp_stats is None:
        temps = np.array([r.temperature for r in records], dtype=np.float64)
        temp_stats = (float(temps.mean()), float(temps.std()))
    temp_mean, temp_std = temp_stats
    scale = temp_std if temp_std > 0 else 1.0

    rows = np.zeros((len(records), len(schema)), dtype=np.float64)
    for i, rec in enumerate(records):
        if not 0 <= rec.hour < HOURS_PER_DAY:
            raise ValueError(f"record {i}: hour {rec.hour} out of range")
        if not 0 <= rec.day_of_week < DAYS_PER_WEEK:
            raise ValueError(f"record {i}: day_of_week {rec.day_of_week} out of range")
        if rec.weather not in weather_index:
            raise ValueError(
                f"record {i}: weather category {rec.weather!r} not in vocabulary {vocab}"
            )
        rows[i, rec.hour] = 1.0
        rows[i, HOURS_PER_DAY + rec.day_of_week] = 1.0
        rows[i, 31] = 1.0 if rec.is_holiday else 0.0
        rows[i, 32 + weather_index[rec.weather]] = 1.0
        rows[i, -1] = (rec.temperature - temp_mean) / scale
    check_finite(rows, "temporal confounder rows")
    return TemporalConfounderTable(
        rows=rows, schema=schema, weather_vocab=vocab,
        temp_mean=temp_mean, temp_std=temp_std,
    )


def spatial_schema(poi_vocab: Sequence[str]) -> List[str]:
    cols = [f"poi_{c}" for c in poi_vocab]
    cols += ["houses_for_sale", "avg_price", "shootings", "complaints"]
    return cols


def encode_spatial_features(
    records: Sequence[SpatialRecord],
    poi_vocab: Sequence[str] = DEFAULT_POI_VOCAB,
    include_zone_onehot: bool = False,
    required_regions: Optional[Sequence[str]] = None,
) -> SpatialConfounderTable:
    """Per-region feature rows: log1p counts, standardized price.

    Zone-id one-hots are excluded by default: they bind the schema to one
    region set and break cross-city transfer. `include_zone_onehot=True`
    restores them for single-city runs.
    """
    vocab = tuple(poi_vocab)
    region_ids = [r.region_id for r in records]
    if len(set(region_ids)) != len(region_ids):
        raise ValueError("duplicate region ids in spatial records")
    if required_regions is not None:
        missing = [rid for rid in required_regions if rid not in set(region_ids)]
        if missing:
            raise ValueError(f"missing spatial records for regions {missing}")
    schema = spatial_schema(vocab)
    if include_zone_onehot:
        schema = [f"zone_{rid}" for rid in region_ids] + schema

    prices = np.array([r.avg_price for r in records], dtype=np.float64)
    price_mean = float(prices.mean())
    price_std = float(prices.std())
    price_scale = price_std if price_std > 0 else 1.0

    rows = np.zeros((len(records), len(schema)), dtype=np.float64)
    offset = len(region_ids) if include_zone_onehot else 0
    for i, rec in enumerate(records):
        if include_zone_onehot:
            rows[i, i] = 1.0
        counts = [rec.poi_counts.get(c, 0.0) for c in vocab]
        counts += [rec.houses_for_sale, rec.shootings, rec.complaints]
        for value in counts:
            if value < 0:
                raise ValueError(f"region {rec.region_id!r}: negative count {value}")
        k = len(vocab)
        rows[i, offset:offset + k] = np.log1p(np.asarray(counts[:k], dtype=np.float64))
        rows[i, offset + k] = np.log1p(rec.houses_for_sale)
        rows[i, offset + k + 1] = (rec.avg_price - price_mean) / price_scale
        rows[i, offset + k + 2] = np.log1p(rec.shootings)
        rows[i, offset + k + 3] = np.log1p(rec.complaints)
    check_finite(rows, "spatial confounder rows")
    return SpatialConfounderTable(rows=rows, schema=schema, region_ids=region_ids)


def read_temporal_csv(path) -> List[TemporalRecord]:
    """Read `timestamp,hour,dow,is_holiday,weather,temperature` rows."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(
                TemporalRecord(
                    hour=int(row["hour"]),
                    day_of_week=int(row["dow"]),
                    is_holiday=row["is_holiday"] in ("1", "true", "True"),
                    weather=row["weather"],
                    temperature=float(row["temperature"]),
                )
            )
    return records


def write_temporal_csv(path, records: Sequence[TemporalRecord], timestamps) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "hour", "dow", "is_holiday", "weather", "temperature"])
        for ts, rec in zip(timestamps, records):
            writer.writerow(
                [ts.isoformat(), rec.hour, rec.day_of_week, int(rec.is_holiday),
                 rec.weather, repr(float(rec.temperature))]
            )


def read_spatial_csv(path) -> Tuple[List[SpatialRecord], List[str]]:
    """Read spatial rows; all columns between region_id and houses_for_sale
    are POI categories. Returns (records, poi_vocab)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        fixed = ["houses_for_sale", "avg_price", "shootings", "complaints"]
        if header[0] != "region_id" or header[-4:] != fixed:
            raise ValueError(f"{path}: expected region_id,<poi..>,{','.join(fixed)}")
        poi_vocab = header[1:-4]
        records = []
        for row in reader:
            poi = {c: float(v) for c, v in zip(poi_vocab, row[1:-4])}
            records.append(
                SpatialRecord(
                    region_id=row[0],
                    poi_counts=poi,
                    houses_for_sale=float(row[-4]),
                    avg_price=float(row[-3]),
                    shootings=float(row[-2]),
                    complaints=float(row[-1]),
                )
            )
    return records, poi_vocab


def write_spatial_csv(path, records: Sequence[SpatialRecord], poi_vocab: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["region_id", *poi_vocab, "houses_for_sale", "avg_price", "shootings", "complaints"]
        )
        for rec in records:
            writer.writerow(
                [rec.region_id,
                 *[repr(float(rec.poi_counts.get(c, 0.0))) for c in poi_vocab],
                 repr(float(rec.houses_for_sale)), repr(float(rec.avg_price)),
                 repr(float(rec.shootings)), repr(float(rec.complaints))]
            )
