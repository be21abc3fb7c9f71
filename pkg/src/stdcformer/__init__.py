"""Spatial-temporal de-confounded transformer for crowd flow forecasting."""

from .data import (
    Dataset,
    FlowScaler,
    FlowSeries,
    SpatialConfounderTable,
    SyntheticProfile,
    TemporalConfounderTable,
    WindowSample,
    generate_synthetic,
    ingest_csvs,
    load_archive,
    make_windows,
    save_archive,
    split_windows,
)
from .estimator import STDCFormerForecaster
from .evaluation import (
    EvalReport,
    compute_metrics,
    export_cta_attention,
    export_gate_weights,
    persistence_baseline,
    zero_shot_eval,
)
from .graph import AdjacencyGraph, laplacian_embedding
from .nn import ModelConfig, STDCFormer, load_checkpoint, mae_loss, save_checkpoint
from .oracle import oracle_forward, weights_from_state_dict
from .training import TrainConfig, TrainState, gradient_check, train

__version__ = "0.1.0"

__all__ = [
    "AdjacencyGraph",
    "Dataset",
    "EvalReport",
    "FlowScaler",
    "FlowSeries",
    "ModelConfig",
    "STDCFormer",
    "STDCFormerForecaster",
    "SpatialConfounderTable",
    "SyntheticProfile",
    "TemporalConfounderTable",
    "TrainConfig",
    "TrainState",
    "WindowSample",
    "compute_metrics",
    "export_cta_attention",
    "export_gate_weights",
    "generate_synthetic",
    "gradient_check",
    "ingest_csvs",
    "laplacian_embedding",
    "load_archive",
    "load_checkpoint",
    "mae_loss",
    "make_windows",
    "oracle_forward",
    "persistence_baseline",
    "save_archive",
    "save_checkpoint",
    "split_windows",
    "train",
    "weights_from_state_dict",
    "zero_shot_eval",
]
