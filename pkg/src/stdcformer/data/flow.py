"""Hourly inflow/outflow series and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import List, Sequence

import numpy as np

from ..validation import check_finite

HOUR = timedelta(hours=1)

FEATURES = ("inflow", "outflow")


@dataclass
class FlowSeries:
    """Dense crowd-flow observations, shape [L timesteps, n regions, 2 features].

    Missing raw records are zero counts; timestamps form a contiguous hourly
    grid. Feature order is fixed: (inflow, outflow).
    """

    values: np.ndarray
    timestamps: List[datetime]
    region_ids: List[str] = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3 or self.values.shape[2] != len(FEATURES):
            raise ValueError(
                f"flow values must be [L, n, {len(FEATURES)}], got {self.values.shape}"
            )
        if self.values.shape[0] != len(self.timestamps):
            raise ValueError("timestamp count does not match value rows")
        if self.values.shape[1] != len(self.region_ids):
            raise ValueError("region id count does not match value columns")
        for prev, cur in zip(self.timestamps, self.timestamps[1:]):
            if cur - prev != HOUR:
                raise ValueError(f"timestamps must be hourly: {prev} -> {cur}")
        check_finite(self.values, "flow values")
        if (self.values < 0).any():
            raise ValueError("flow counts must be non-negative")

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def num_regions(self) -> int:
        return self.values.shape[1]


def _parse_timestamp(raw: str, row_num: int) -> datetime:
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValueError(f"row {row_num}: unparsable timestamp {raw!r}") from exc
    if ts.minute or ts.second or ts.microsecond:
        raise ValueError(f"row {row_num}: timestamp {raw!r} is not on the hourly grid")
    return ts


def load_flow_csv(path, region_ids: Sequence[str]) -> FlowSeries:
    """Load a `timestamp,region_id,inflow,outflow` CSV into a dense FlowSeries.

    Absent (timestamp, region) pairs become zero counts. Unknown region ids and
    off-grid timestamps are rejected with the offending id / row number.
    """
    region_ids = list(region_ids)
    index = {rid: i for i, rid in enumerate(region_ids)}
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["timestamp", "region_id", "inflow", "outflow"]
        if reader.fieldnames is None or list(reader.fieldnames) != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        for row_num, row in enumerate(reader, start=2):
            ts = _parse_timestamp(row["timestamp"], row_num)
            rid = row["region_id"]
            if rid not in index:
                raise ValueError(f"row {row_num}: unknown region_id {rid!r}")
            records.append((ts, index[rid], float(row["inflow"]), float(row["outflow"])))
    if not records:
        raise ValueError(f"{path}: no data rows")

    start = min(r[0] for r in records)
    end = max(r[0] for r in records)
    length = int((end - start) / HOUR) + 1
    timestamps = [start + i * HOUR for i in range(length)]
    values = np.zeros((length, len(region_ids), len(FEATURES)), dtype=np.float64)
    for ts, region, inflow, outflow in records:
        t = int((ts - start) / HOUR)
        values[t, region, 0] = inflow
        values[t, region, 1] = outflow
    return FlowSeries(values=values, timestamps=timestamps, region_ids=region_ids)


def write_flow_csv(path, flow: FlowSeries) -> None:
    """Emit the dense series back to the ingestion CSV format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "region_id", "inflow", "outflow"])
        for t, ts in enumerate(flow.timestamps):
            for i, rid in enumerate(flow.region_ids):
                writer.writerow(
                    [ts.isoformat(), rid, repr(float(flow.values[t, i, 0])),
                     repr(float(flow.values[t, i, 1]))]
                )
