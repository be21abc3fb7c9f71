"""Metrics, reports, zero-shot transfer, and interpretability exports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import zip_longest
from typing import Dict, List, Optional, Sequence

import numpy as np
import torch

from .data.dataset import Dataset
from .data.scaling import FlowScaler
from .validation import as_float_array
from .data.windows import WindowSample, make_windows, split_windows
from .graph import laplacian_embedding
from .training import stack_windows

MAPE_THRESHOLD = 1.0  # entries with |y| below this are excluded (zero-flow tokens)

FEATURE_KEYS = ("in", "out", "io")


@dataclass
class MetricSet:
    mae: float
    rmse: float
    mse: float
    mape: Optional[float]  # None when every entry is below the MAPE threshold

    def to_dict(self) -> dict:
        return {"mae": self.mae, "rmse": self.rmse, "mse": self.mse, "mape": self.mape}


@dataclass
class BreakdownStats:
    values: List[float]
    mean: float
    std: float

    def to_dict(self) -> dict:
        return {"values": self.values, "mean": self.mean, "std": self.std}


@dataclass
class EvalReport:
    overall: Dict[str, MetricSet]
    per_region: Dict[str, BreakdownStats]
    per_horizon: Dict[str, BreakdownStats]
    inflow_outflow_mae_ratio: float
    region_ids: Optional[List[str]] = None

    def to_dict(self) -> dict:
        return {
            "overall": {k: v.to_dict() for k, v in self.overall.items()},
            "per_region": {k: v.to_dict() for k, v in self.per_region.items()},
            "per_horizon": {k: v.to_dict() for k, v in self.per_horizon.items()},
            "inflow_outflow_mae_ratio": self.inflow_outflow_mae_ratio,
            "region_ids": self.region_ids,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def _metric_set(y_hat: np.ndarray, y: np.ndarray) -> MetricSet:
    err = y_hat - y
    mae = float(np.mean(np.abs(err)))
    mse = float(np.mean(err ** 2))
    mask = np.abs(y) >= MAPE_THRESHOLD
    mape = float(np.mean(np.abs(err[mask]) / np.abs(y[mask])) * 100.0) if mask.any() else None
    return MetricSet(mae=mae, rmse=float(np.sqrt(mse)), mse=mse, mape=mape)


def _breakdown(y_hat: np.ndarray, y: np.ndarray, axis_index: int) -> Dict[str, BreakdownStats]:
    size = y.shape[axis_index]
    maes, rmses = [], []
    for k in range(size):
        yh = np.take(y_hat, k, axis=axis_index)
        yy = np.take(y, k, axis=axis_index)
        err = yh - yy
        maes.append(float(np.mean(np.abs(err))))
        rmses.append(float(np.sqrt(np.mean(err ** 2))))
    out = {}
    for name, vals in (("mae", maes), ("rmse", rmses)):
        arr = np.asarray(vals)
        out[name] = BreakdownStats(values=vals, mean=float(arr.mean()), std=float(arr.std()))
    return out


def compute_metrics(y_hat, y, region_ids: Optional[Sequence[str]] = None) -> EvalReport:
    """Error report over predictions in ORIGINAL units.

    Accepts [T_f, n, f] or [windows, T_f, n, f]; breakdowns slice by feature
    (inflow / outflow / pooled), region, and horizon step.
    """
    y_hat = as_float_array(y_hat, "predictions")
    y = as_float_array(y, "targets")
    if y_hat.shape != y.shape:
        raise ValueError(f"metrics: prediction shape {y_hat.shape} != target {y.shape}")
    if y.ndim == 3:
        y_hat = y_hat[None]
        y = y[None]
    if y.ndim != 4:
        raise ValueError(f"metrics: expected 3- or 4-d tensors, got {y.shape}")

    overall = {
        "in": _metric_set(y_hat[..., 0], y[..., 0]),
        "out": _metric_set(y_hat[..., 1], y[..., 1]),
        "io": _metric_set(y_hat, y),
    }
    out_mae = overall["out"].mae
    ratio = overall["in"].mae / out_mae if out_mae > 0 else float("inf")
    return EvalReport(
        overall=overall,
        per_region=_breakdown(y_hat, y, axis_index=2),
        per_horizon=_breakdown(y_hat, y, axis_index=1),
        inflow_outflow_mae_ratio=ratio,
        region_ids=list(region_ids) if region_ids is not None else None,
    )


def persistence_baseline(x, future_steps: int) -> np.ndarray:
    """Repeat the last observed step over the whole horizon (sanity floor)."""
    x = as_float_array(x, "observations")
    last = x[..., -1:, :, :]
    reps = [1] * x.ndim
    reps[-3] = future_steps
    return np.tile(last, reps)


def predict_windows(
    model, windows: Sequence[WindowSample], scaler: FlowScaler, temporal,
    s_rows, lap, future_weather: str = "actual", batch_size: int = 256,
) -> np.ndarray:
    """Forward raw windows through the model, returning original-unit forecasts."""
    dtype = next(model.parameters()).dtype
    batch = stack_windows(windows, temporal, future_weather, dtype)
    x_std = torch.as_tensor(
        scaler.transform(batch.x.numpy()), dtype=dtype
    )
    s_rows = torch.as_tensor(np.asarray(s_rows), dtype=dtype)
    lap = torch.as_tensor(np.asarray(lap), dtype=dtype)
    was_training = model.training
    model.eval()
    preds = []
    with torch.no_grad():
        for lo in range(0, len(batch), batch_size):
            hi = lo + batch_size
            pred, _ = model(x_std[lo:hi], batch.t_past[lo:hi], batch.t_future[lo:hi],
                            s_rows, lap)
            preds.append(pred)
    if was_training:
        model.train()
    y_hat_std = torch.cat(preds, dim=0).numpy()
    return scaler.inverse_transform(y_hat_std)


def evaluate_windows(
    model, windows: Sequence[WindowSample], scaler: FlowScaler, temporal,
    s_rows, lap, region_ids=None, future_weather: str = "actual",
) -> EvalReport:
    y_hat = predict_windows(model, windows, scaler, temporal, s_rows, lap, future_weather)
    y = np.stack([w.y for w in windows])
    return compute_metrics(y_hat, y, region_ids=region_ids)


def check_schema_compatible(expected: dict, actual: dict) -> None:
    """Column-order-and-width schema comparison; names the first mismatch."""
    for kind in ("temporal", "spatial"):
        for i, (exp, act) in enumerate(zip_longest(expected[kind], actual[kind])):
            if exp != act:
                raise ValueError(
                    f"{kind} schema mismatch at column {i}: "
                    f"checkpoint has {exp!r}, dataset has {act!r}"
                )


def zero_shot_eval(
    model, checkpoint_schema: dict, ood: Dataset,
    ratios=(7, 1, 2), seed: int = 0, future_weather: str = "actual",
) -> EvalReport:
    """Frozen-parameter evaluation on another city's test split.

    The scaler is refit on the target city's training portion (standardization
    only); model parameters are untouched. The confounder schema must match
    the checkpoint column-for-column.
    """
    check_schema_compatible(checkpoint_schema, ood.schema_descriptor())
    cfg = model.config
    windows = make_windows(ood.flow, cfg.past_steps, cfg.future_steps)
    train, _, test = split_windows(windows, ratios=ratios, seed=seed)
    scaler = FlowScaler().fit(train)
    lap = laplacian_embedding(ood.graph, cfg.lap_dim)
    return evaluate_windows(
        model, test, scaler, ood.temporal, ood.spatial.rows, lap,
        region_ids=ood.flow.region_ids, future_weather=future_weather,
    )


@dataclass
class GateExport:
    rows: List[dict] = field(default_factory=list)  # region_id, timestamp, p_cs
    per_region: Dict[str, float] = field(default_factory=dict)


def export_gate_weights(
    model, dataset: Dataset, scaler: FlowScaler, lap,
    future_weather: str = "actual",
) -> GateExport:
    """Scalar gate weight per (region, timestep): mean over the hidden dims of
    the first encoder block's p_cs.

    The series is tiled with non-overlapping past windows so each covered
    timestep is exported exactly once.
    """
    cfg = model.config
    windows = make_windows(dataset.flow, cfg.past_steps, cfg.future_steps,
                           stride=cfg.past_steps)
    dtype = next(model.parameters()).dtype
    batch = stack_windows(windows, dataset.temporal, future_weather, dtype)
    x_std = torch.as_tensor(scaler.transform(batch.x.numpy()), dtype=dtype)
    s_rows = torch.as_tensor(dataset.spatial.rows, dtype=dtype)
    lap_t = torch.as_tensor(np.asarray(lap), dtype=dtype)

    model.eval()
    export = GateExport()
    totals = np.zeros(dataset.num_regions)
    counts = 0
    with torch.no_grad():
        for w_idx in range(len(batch)):
            _, diag = model(
                x_std[w_idx], batch.t_past[w_idx], batch.t_future[w_idx],
                s_rows, lap_t, collect_diagnostics=True,
            )
            gate = diag["gate_first_encoder"].numpy().mean(axis=-1)  # [T_past, n]
            for step, t in enumerate(windows[w_idx].past_time_idx):
                ts = dataset.flow.timestamps[int(t)]
                for r, rid in enumerate(dataset.flow.region_ids):
                    export.rows.append(
                        {"region_id": rid, "timestamp": ts.isoformat(),
                         "p_cs": float(gate[step, r])}
                    )
                totals += gate[step]
                counts += 1
    for r, rid in enumerate(dataset.flow.region_ids):
        export.per_region[rid] = float(totals[r] / counts)
    return export


def export_cta_attention(
    model, dataset: Dataset, scaler: FlowScaler, lap, window: WindowSample,
    future_weather: str = "actual", per_head: bool = False,
) -> dict:
    """Head-averaged cross-time attention for one window, with metadata.

    `per_head=True` adds the unaveraged [region][head][future][past] tensor.
    """
    dtype = next(model.parameters()).dtype
    batch = stack_windows([window], dataset.temporal, future_weather, dtype)
    x_std = torch.as_tensor(scaler.transform(batch.x.numpy()), dtype=dtype)
    s_rows = torch.as_tensor(dataset.spatial.rows, dtype=dtype)
    lap_t = torch.as_tensor(np.asarray(lap), dtype=dtype)
    model.eval()
    with torch.no_grad():
        _, diag = model(x_std[0], batch.t_past[0], batch.t_future[0],
                        s_rows, lap_t, collect_diagnostics=True)
    attention = diag["cta_attention"]
    if attention is None:
        raise ValueError("cross-time attention is ablated in this model")
    payload = {
        "attention": attention.numpy().tolist(),  # [region][future_step][past_step]
        "region_ids": list(dataset.flow.region_ids),
        "past_time_idx": [int(t) for t in window.past_time_idx],
        "future_time_idx": [int(t) for t in window.future_time_idx],
        "past_timestamps": [dataset.flow.timestamps[int(t)].isoformat()
                            for t in window.past_time_idx],
        "future_timestamps": [dataset.flow.timestamps[int(t)].isoformat()
                              for t in window.future_time_idx],
    }
    if per_head:
        payload["attention_per_head"] = diag["cta_attention_heads"].numpy().tolist()
    return payload
