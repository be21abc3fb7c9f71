"""Training loop: Adam, reduce-on-plateau, early stopping, gradient checks."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import torch

from .data.confounders import TemporalConfounderTable
from .data.scaling import FlowScaler
from .data.windows import WindowSample
from .nn.model import STDCFormer, mae_loss


@dataclass
class TrainConfig:
    lr: float = 1e-3
    max_epochs: int = 120
    early_stop_patience: int = 50
    plateau_factor: float = 0.5
    plateau_patience: int = 10
    min_lr: float = 1e-5
    batch_size: int = 64
    seed: int = 0
    grad_clip: Optional[float] = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.early_stop_patience >= self.max_epochs:
            raise ValueError("early_stop_patience must be below max_epochs")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_mae: float
    lr: float


@dataclass
class TrainState:
    best_val_mae: float
    best_epoch: int
    best_state: dict
    history: List[EpochRecord] = field(default_factory=list)
    stopped_early: bool = False


@dataclass
class WindowTensors:
    """Stacked window batch: values plus per-window temporal confounder rows."""

    x: torch.Tensor
    y: torch.Tensor
    t_past: torch.Tensor
    t_future: torch.Tensor

    def __len__(self):
        return self.x.shape[0]


def stack_windows(
    windows: Sequence[WindowSample],
    temporal: TemporalConfounderTable,
    future_weather: str = "actual",
    dtype=torch.float32,
) -> WindowTensors:
    """Gather window tensors and their aligned temporal confounder rows.

    future_weather="persist" replaces the future rows' weather and temperature
    columns with the last observed past row (leakage-free evaluation); the
    calendar columns stay exact since they are known in advance.
    """
    if future_weather not in ("actual", "persist"):
        raise ValueError(f"future_weather must be 'actual' or 'persist', got {future_weather!r}")
    if not windows:
        raise ValueError("empty window list")
    rows = temporal.rows
    x = np.stack([w.x for w in windows])
    y = np.stack([w.y for w in windows])
    t_past = np.stack([rows[w.past_time_idx] for w in windows])
    t_future = np.stack([rows[w.future_time_idx] for w in windows])
    if future_weather == "persist":
        slices = temporal.column_slices()
        for group in ("weather", "temperature"):
            sl = slices[group]
            t_future[:, :, sl] = t_past[:, -1:, sl]
    return WindowTensors(
        x=torch.as_tensor(x, dtype=dtype),
        y=torch.as_tensor(y, dtype=dtype),
        t_past=torch.as_tensor(t_past, dtype=dtype),
        t_future=torch.as_tensor(t_future, dtype=dtype),
    )


def _predict_batched(model, batch: WindowTensors, s_rows, lap, batch_size: int):
    preds = []
    with torch.no_grad():
        for lo in range(0, len(batch), batch_size):
            hi = lo + batch_size
            pred, _ = model(batch.x[lo:hi], batch.t_past[lo:hi], batch.t_future[lo:hi],
                            s_rows, lap)
            preds.append(pred)
    return torch.cat(preds, dim=0)


def validation_mae(model, batch: WindowTensors, s_rows, lap, scaler: FlowScaler,
                   batch_size: int = 256) -> float:
    """MAE in original units (predictions and targets inverse-scaled)."""
    was_training = model.training
    model.eval()
    pred = _predict_batched(model, batch, s_rows, lap, batch_size)
    if was_training:
        model.train()
    pred_orig = scaler.inverse_transform(pred.numpy())
    y_orig = scaler.inverse_transform(batch.y.numpy())
    return float(np.mean(np.abs(pred_orig - y_orig)))


def train(
    model: STDCFormer,
    splits,
    scaler: FlowScaler,
    cfg: TrainConfig,
    temporal: TemporalConfounderTable,
    s_rows,
    lap,
    future_weather: str = "actual",
    log_path=None,
) -> TrainState:
    """Run the full protocol; the model ends up holding the best snapshot.

    `splits` is (train_windows, val_windows), both already standardized with
    the train-fitted scaler. Per epoch: seeded shuffle, Adam minibatch steps,
    validation MAE in original units, plateau schedule, early stopping.
    """
    train_windows, val_windows = splits
    if not train_windows or not val_windows:
        raise ValueError("train and validation splits must be non-empty")

    dtype = next(model.parameters()).dtype
    train_batch = stack_windows(train_windows, temporal, future_weather, dtype)
    val_batch = stack_windows(val_windows, temporal, future_weather, dtype)
    s_rows = torch.as_tensor(np.asarray(s_rows), dtype=dtype)
    lap = torch.as_tensor(np.asarray(lap), dtype=dtype)

    optimizer = torch.optim.Adam(
        model.parameters(), lr=cfg.lr, betas=(0.9, 0.999), eps=1e-8
    )
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)

    state = TrainState(best_val_mae=float("inf"), best_epoch=-1, best_state={})
    lr = cfg.lr
    since_best = 0
    since_plateau = 0
    log_fh = open(log_path, "w") if log_path else None
    try:
        for epoch in range(cfg.max_epochs):
            model.train()
            perm = rng.permutation(len(train_batch))
            total, count = 0.0, 0
            for step, lo in enumerate(range(0, len(perm), cfg.batch_size)):
                idx = torch.as_tensor(perm[lo:lo + cfg.batch_size])
                pred, _ = model(
                    train_batch.x[idx], train_batch.t_past[idx],
                    train_batch.t_future[idx], s_rows, lap,
                )
                loss = mae_loss(pred, train_batch.y[idx])
                if not torch.isfinite(loss):
                    raise RuntimeError(f"non-finite training loss at epoch {epoch}, step {step}")
                optimizer.zero_grad()
                loss.backward()
                if cfg.grad_clip is not None:
                    torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
                optimizer.step()
                total += float(loss.detach()) * len(idx)
                count += len(idx)
            train_loss = total / count

            val_mae = validation_mae(model, val_batch, s_rows, lap, scaler)
            record = EpochRecord(epoch=epoch, train_loss=train_loss, val_mae=val_mae, lr=lr)
            state.history.append(record)
            if log_fh:
                log_fh.write(json.dumps(asdict(record)) + "\n")
                log_fh.flush()

            if val_mae < state.best_val_mae:
                state.best_val_mae = val_mae
                state.best_epoch = epoch
                state.best_state = copy.deepcopy(model.state_dict())
                since_best = 0
                since_plateau = 0
            else:
                since_best += 1
                since_plateau += 1

            if since_best >= cfg.early_stop_patience:
                state.stopped_early = True
                break
            if since_plateau >= cfg.plateau_patience and lr > cfg.min_lr:
                lr = max(lr * cfg.plateau_factor, cfg.min_lr)
                for group in optimizer.param_groups:
                    group["lr"] = lr
                since_plateau = 0
    finally:
        if log_fh:
            log_fh.close()

    model.load_state_dict(state.best_state)
    return state


@dataclass
class GradCheckReport:
    tolerance: float
    per_param: Dict[str, float]
    passed: bool

    @property
    def worst(self):
        return max(self.per_param, key=self.per_param.get)


def analytic_gradients(model, x, t_past, t_future, s_rows, lap, y) -> Dict[str, torch.Tensor]:
    model.zero_grad()
    pred, _ = model(x, t_past, t_future, s_rows, lap)
    loss = mae_loss(pred, y)
    loss.backward()
    return {
        name: (p.grad.detach().clone() if p.grad is not None else torch.zeros_like(p))
        for name, p in model.named_parameters()
    }


def gradient_check(
    model: STDCFormer, x, t_past, t_future, s_rows, lap, y,
    tolerance: float = 1e-4, step: float = 1e-5,
) -> GradCheckReport:
    """Compare analytic gradients with central finite differences.

    Runs on a double-precision copy of the model. Relative error uses a
    denominator floored at 1e-2 so that true-zero gradients compare on an
    absolute scale instead of blowing up.
    """
    work = copy.deepcopy(model).double()
    tensors = [torch.as_tensor(np.asarray(t), dtype=torch.float64)
               for t in (x, t_past, t_future, s_rows, lap, y)]
    x, t_past, t_future, s_rows, lap, y = tensors

    analytic = analytic_gradients(work, x, t_past, t_future, s_rows, lap, y)

    def loss_value():
        with torch.no_grad():
            pred, _ = work(x, t_past, t_future, s_rows, lap)
            return float(mae_loss(pred, y))

    per_param = {}
    for name, param in work.named_parameters():
        flat = param.data.view(-1)
        grads = analytic[name].view(-1)
        worst = 0.0
        for i in range(flat.numel()):
            original = float(flat[i])
            flat[i] = original + step
            up = loss_value()
            flat[i] = original - step
            down = loss_value()
            flat[i] = original
            numeric = (up - down) / (2.0 * step)
            a = float(grads[i])
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-2)
            worst = max(worst, rel)
        per_param[name] = worst
    passed = all(v < tolerance for v in per_param.values())
    return GradCheckReport(tolerance=tolerance, per_param=per_param, passed=passed)
