from .confounders import (
    DEFAULT_POI_VOCAB,
    DEFAULT_WEATHER_VOCAB,
    SpatialConfounderTable,
    SpatialRecord,
    TemporalConfounderTable,
    TemporalRecord,
    encode_spatial_features,
    encode_temporal_features,
)
from .dataset import Dataset, build_dataset, ingest_csvs, load_archive, save_archive
from .flow import FlowSeries, load_flow_csv, write_flow_csv
from .scaling import FlowScaler, standardize_windows
from .synthetic import SyntheticData, SyntheticProfile, generate_synthetic
from .windows import WindowSample, make_windows, split_windows

__all__ = [
    "DEFAULT_POI_VOCAB",
    "DEFAULT_WEATHER_VOCAB",
    "Dataset",
    "FlowScaler",
    "FlowSeries",
    "SpatialConfounderTable",
    "SpatialRecord",
    "SyntheticData",
    "SyntheticProfile",
    "TemporalConfounderTable",
    "TemporalRecord",
    "WindowSample",
    "build_dataset",
    "encode_spatial_features",
    "encode_temporal_features",
    "generate_synthetic",
    "ingest_csvs",
    "load_archive",
    "load_flow_csv",
    "make_windows",
    "save_archive",
    "split_windows",
    "standardize_windows",
    "write_flow_csv",
]
