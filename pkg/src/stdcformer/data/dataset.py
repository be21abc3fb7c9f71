"""Dataset bundle: flow series + confounder tables + region graph.

A dataset archive is a directory holding the encoded tensors, a manifest with
the schema descriptors, and the adjacency edge list, so runs are reproducible
without re-reading the raw CSVs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from ..graph import AdjacencyGraph, load_edge_list, write_edge_list
from .confounders import (
    SpatialConfounderTable,
    SpatialRecord,
    TemporalConfounderTable,
    TemporalRecord,
    encode_spatial_features,
    read_spatial_csv,
    read_temporal_csv,
    write_spatial_csv,
    write_temporal_csv,
)
from .flow import HOUR, FlowSeries, load_flow_csv, write_flow_csv
from .synthetic import SyntheticData, encode_confounders_with_train_stats

ARCHIVE_VERSION = 1


@dataclass
class Dataset:
    flow: FlowSeries
    temporal: TemporalConfounderTable
    spatial: SpatialConfounderTable
    graph: AdjacencyGraph

    def __post_init__(self):
        if self.temporal.rows.shape[0] != self.flow.length:
            raise ValueError(
                f"temporal table has {self.temporal.rows.shape[0]} rows, "
                f"flow has {self.flow.length} timesteps"
            )
        if self.spatial.region_ids != self.flow.region_ids:
            raise ValueError("spatial table region order does not match flow")
        if self.graph.n != self.flow.num_regions:
            raise ValueError("graph size does not match region count")

    @property
    def num_regions(self) -> int:
        return self.flow.num_regions

    def schema_descriptor(self) -> dict:
        return {
            "temporal": list(self.temporal.schema),
            "spatial": list(self.spatial.schema),
        }


def build_dataset(
    flow: FlowSeries,
    temporal_records: Sequence[TemporalRecord],
    spatial_records: Sequence[SpatialRecord],
    graph: AdjacencyGraph,
    weather_vocab: Sequence[str],
    poi_vocab: Sequence[str],
) -> Dataset:
    """Encode raw records into a Dataset aligned with the flow series."""
    if len(temporal_records) != flow.length:
        raise ValueError(
            f"{len(temporal_records)} temporal records for {flow.length} timesteps"
        )
    by_region = {r.region_id: r for r in spatial_records}
    ordered = []
    for rid in flow.region_ids:
        if rid not in by_region:
            raise ValueError(f"missing spatial records for regions ['{rid}']")
        ordered.append(by_region[rid])
    temporal = encode_confounders_with_train_stats(list(temporal_records), weather_vocab)
    spatial = encode_spatial_features(ordered, poi_vocab, required_regions=flow.region_ids)
    return Dataset(flow=flow, temporal=temporal, spatial=spatial, graph=graph)


def save_archive(dataset: Dataset, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    np.save(out / "flow.npy", dataset.flow.values)
    np.save(out / "temporal.npy", dataset.temporal.rows)
    np.save(out / "spatial.npy", dataset.spatial.rows)
    write_edge_list(out / "adjacency.txt", dataset.graph, dataset.flow.region_ids)
    manifest = {
        "format_version": ARCHIVE_VERSION,
        "start": dataset.flow.timestamps[0].isoformat(),
        "length": dataset.flow.length,
        "region_ids": list(dataset.flow.region_ids),
        "temporal_schema": list(dataset.temporal.schema),
        "weather_vocab": list(dataset.temporal.weather_vocab),
        "temp_mean": dataset.temporal.temp_mean,
        "temp_std": dataset.temporal.temp_std,
        "spatial_schema": list(dataset.spatial.schema),
        "shapes": {
            "flow": list(dataset.flow.values.shape),
            "temporal": list(dataset.temporal.rows.shape),
            "spatial": list(dataset.spatial.rows.shape),
        },
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return out


def load_archive(path) -> Dataset:
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        raise ValueError(f"not a dataset archive (no manifest): {root}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != ARCHIVE_VERSION:
        raise ValueError(
            f"archive format version {manifest.get('format_version')} != {ARCHIVE_VERSION}"
        )
    values = np.load(root / "flow.npy")
    temporal_rows = np.load(root / "temporal.npy")
    spatial_rows = np.load(root / "spatial.npy")
    for name, arr in (("flow", values), ("temporal", temporal_rows), ("spatial", spatial_rows)):
        expected = tuple(manifest["shapes"][name])
        if tuple(arr.shape) != expected:
            raise ValueError(f"{name}.npy shape {arr.shape} does not match manifest {expected}")
    start = datetime.fromisoformat(manifest["start"])
    timestamps = [start + i * HOUR for i in range(manifest["length"])]
    region_ids = list(manifest["region_ids"])
    flow = FlowSeries(values=values, timestamps=timestamps, region_ids=region_ids)
    temporal = TemporalConfounderTable(
        rows=temporal_rows,
        schema=list(manifest["temporal_schema"]),
        weather_vocab=tuple(manifest["weather_vocab"]),
        temp_mean=manifest["temp_mean"],
        temp_std=manifest["temp_std"],
    )
    spatial = SpatialConfounderTable(
        rows=spatial_rows, schema=list(manifest["spatial_schema"]), region_ids=region_ids
    )
    graph = load_edge_list(root / "adjacency.txt", region_ids)
    return Dataset(flow=flow, temporal=temporal, spatial=spatial, graph=graph)


def write_dataset_csvs(out_dir, data: SyntheticData, poi_vocab: Sequence[str]) -> None:
    """Emit the raw-CSV form of a synthetic dataset (ingestable round trip)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_flow_csv(out / "flow.csv", data.flow)
    write_temporal_csv(out / "temporal.csv", data.temporal_records, data.flow.timestamps)
    write_spatial_csv(out / "spatial.csv", data.spatial_records, poi_vocab)
    write_edge_list(out / "adjacency.txt", data.graph, data.flow.region_ids)


def ingest_csvs(
    flow_csv,
    temporal_csv,
    spatial_csv,
    adjacency_file,
    weather_vocab: Optional[Sequence[str]] = None,
) -> Dataset:
    """Build a Dataset from the documented CSV formats.

    Region order follows the spatial CSV; the POI vocabulary is taken from its
    header columns.
    """
    from .confounders import DEFAULT_WEATHER_VOCAB

    spatial_records, poi_vocab = read_spatial_csv(spatial_csv)
    region_ids: List[str] = [r.region_id for r in spatial_records]
    flow = load_flow_csv(flow_csv, region_ids)
    temporal_records = read_temporal_csv(temporal_csv)
    graph = load_edge_list(adjacency_file, region_ids)
    vocab = tuple(weather_vocab) if weather_vocab else DEFAULT_WEATHER_VOCAB
    return build_dataset(flow, temporal_records, spatial_records, graph, vocab, poi_vocab)
