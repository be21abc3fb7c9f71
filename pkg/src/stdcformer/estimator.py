"""Scikit-learn style forecaster wrapping the model and training protocol."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .data.dataset import Dataset
from .data.scaling import FlowScaler, standardize_windows
from .data.windows import make_windows, split_windows
from .evaluation import EvalReport, evaluate_windows, predict_windows
from .graph import laplacian_embedding
from .nn.model import ModelConfig, STDCFormer, load_checkpoint, save_checkpoint
from .training import TrainConfig, train


class STDCFormerForecaster(BaseEstimator):
    """Crowd-flow forecaster with the fit/predict estimator interface.

    Hyperparameters mirror the model and training configs so `get_params` /
    `set_params` compose with scikit-learn tooling (grid sweeps, cloning).
    `fit` consumes a Dataset bundle; fitted state lives in trailing-underscore
    attributes.
    """

    def __init__(self, hidden_dim=64, lap_dim=8, encoder_layers=5, decoder_layers=5,
                 heads=8, past_steps=6, future_steps=6,
                 use_dc=True, use_map=True, use_sc=True, use_tc=True, use_lap=True,
                 str_compose="concat", layer_norm=True, residual=True,
                 head_proj=False, dropout=0.0,
                 lr=1e-3, max_epochs=120, early_stop_patience=50,
                 plateau_factor=0.5, plateau_patience=10, min_lr=1e-5,
                 batch_size=64, grad_clip=None, split_ratios=(7, 1, 2),
                 window_stride=1, future_weather="actual", seed=0):
        self.hidden_dim = hidden_dim
        self.lap_dim = lap_dim
        self.encoder_layers = encoder_layers
        self.decoder_layers = decoder_layers
        self.heads = heads
        self.past_steps = past_steps
        self.future_steps = future_steps
        self.use_dc = use_dc
        self.use_map = use_map
        self.use_sc = use_sc
        self.use_tc = use_tc
        self.use_lap = use_lap
        self.str_compose = str_compose
        self.layer_norm = layer_norm
        self.residual = residual
        self.head_proj = head_proj
        self.dropout = dropout
        self.lr = lr
        self.max_epochs = max_epochs
        self.early_stop_patience = early_stop_patience
        self.plateau_factor = plateau_factor
        self.plateau_patience = plateau_patience
        self.min_lr = min_lr
        self.batch_size = batch_size
        self.grad_clip = grad_clip
        self.split_ratios = split_ratios
        self.window_stride = window_stride
        self.future_weather = future_weather
        self.seed = seed

    def model_config(self, dataset: Dataset) -> ModelConfig:
        return ModelConfig(
            t_dim=dataset.temporal.dim,
            s_dim=dataset.spatial.dim,
            features=dataset.flow.values.shape[-1],
            hidden_dim=self.hidden_dim,
            lap_dim=self.lap_dim,
            encoder_layers=self.encoder_layers,
            decoder_layers=self.decoder_layers,
            heads=self.heads,
            past_steps=self.past_steps,
            future_steps=self.future_steps,
            use_dc=self.use_dc,
            use_map=self.use_map,
            use_sc=self.use_sc,
            use_tc=self.use_tc,
            use_lap=self.use_lap,
            str_compose=self.str_compose,
            layer_norm=self.layer_norm,
            residual=self.residual,
            head_proj=self.head_proj,
            dropout=self.dropout,
            seed=self.seed,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            max_epochs=self.max_epochs,
            early_stop_patience=self.early_stop_patience,
            plateau_factor=self.plateau_factor,
            plateau_patience=self.plateau_patience,
            min_lr=self.min_lr,
            batch_size=self.batch_size,
            seed=self.seed,
            grad_clip=self.grad_clip,
        )

    def dataset_splits(self, dataset: Dataset):
        windows = make_windows(dataset.flow, self.past_steps, self.future_steps,
                               stride=self.window_stride)
        return split_windows(windows, ratios=tuple(self.split_ratios), seed=self.seed)

    def fit(self, dataset: Dataset, log_path=None) -> "STDCFormerForecaster":
        """Train on the dataset's chronological training split."""
        train_w, val_w, test_w = self.dataset_splits(dataset)
        scaler = FlowScaler().fit(train_w)
        lap = laplacian_embedding(dataset.graph, self.lap_dim)
        model = STDCFormer(self.model_config(dataset))
        state = train(
            model,
            (standardize_windows(train_w, scaler), standardize_windows(val_w, scaler)),
            scaler,
            self.train_config(),
            dataset.temporal,
            dataset.spatial.rows,
            lap,
            future_weather=self.future_weather,
            log_path=log_path,
        )
        self.model_ = model
        self.scaler_ = scaler
        self.lap_ = lap
        self.train_state_ = state
        self.schema_ = dataset.schema_descriptor()
        self.splits_ = (train_w, val_w, test_w)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise ValueError("forecaster is not fitted; call fit() or load()")

    def predict(self, dataset: Dataset, windows=None) -> np.ndarray:
        """Original-unit forecasts for the given windows (default: the
        dataset's test split)."""
        self._check_fitted()
        if windows is None:
            windows = self.dataset_splits(dataset)[2]
        lap = laplacian_embedding(dataset.graph, self.lap_dim)
        return predict_windows(
            self.model_, windows, self.scaler_, dataset.temporal,
            dataset.spatial.rows, lap, future_weather=self.future_weather,
        )

    def evaluate(self, dataset: Dataset, windows=None) -> EvalReport:
        self._check_fitted()
        if windows is None:
            windows = self.dataset_splits(dataset)[2]
        lap = laplacian_embedding(dataset.graph, self.lap_dim)
        return evaluate_windows(
            self.model_, windows, self.scaler_, dataset.temporal,
            dataset.spatial.rows, lap, region_ids=dataset.flow.region_ids,
            future_weather=self.future_weather,
        )

    def score(self, dataset: Dataset) -> float:
        """Negative pooled test MAE (higher is better, sklearn convention)."""
        return -self.evaluate(dataset).overall["io"].mae

    def save(self, path) -> None:
        self._check_fitted()
        extras = {
            "estimator_params": _jsonable(self.get_params()),
            "scaler": self.scaler_.to_dict(),
            "schema": self.schema_,
        }
        save_checkpoint(path, self.model_, extras)

    @classmethod
    def load(cls, path) -> "STDCFormerForecaster":
        model, extras = load_checkpoint(path)
        params = extras["estimator_params"]
        if isinstance(params.get("split_ratios"), list):
            params["split_ratios"] = tuple(params["split_ratios"])
        est = cls(**params)
        est.model_ = model
        est.scaler_ = FlowScaler.from_dict(extras["scaler"])
        est.schema_ = extras["schema"]
        return est


def _jsonable(params: dict) -> dict:
    out = {}
    for key, value in params.items():
        if isinstance(value, tuple):
            value = list(value)
        if isinstance(value, (np.integer,)):
            value = int(value)
        if isinstance(value, (np.floating,)):
            value = float(value)
        out[key] = value
    return out
