"""Per-feature standardization fitted on the training split only."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .flow import FEATURES
from .windows import WindowSample


class FlowScaler:
    """Standard scaler over the flow features (population standard deviation).

    Fit must see only training windows; transform/inverse_transform apply to
    any tensor whose last axis is the feature axis.
    """

    def __init__(self):
        self.mean_ = None
        self.std_ = None

    def fit(self, train_windows: Sequence[WindowSample]) -> "FlowScaler":
        stacked = np.concatenate(
            [w.x.reshape(-1, w.x.shape[-1]) for w in train_windows]
            + [w.y.reshape(-1, w.y.shape[-1]) for w in train_windows],
            axis=0,
        )
        mean = stacked.mean(axis=0)
        std = stacked.std(axis=0)
        for f, s in enumerate(std):
            if s <= 0:
                name = FEATURES[f] if f < len(FEATURES) else f"feature {f}"
                raise ValueError(f"degenerate feature {name!r}: zero standard deviation")
        self.mean_ = mean
        self.std_ = std
        return self

    def _check_fitted(self):
        if self.mean_ is None:
            raise ValueError("scaler is not fitted")

    def transform(self, values: np.ndarray) -> np.ndarray:
        self._check_fitted()
        return (np.asarray(values, dtype=np.float64) - self.mean_) / self.std_

    def inverse_transform(self, values: np.ndarray) -> np.ndarray:
        self._check_fitted()
        return np.asarray(values, dtype=np.float64) * self.std_ + self.mean_

    def to_dict(self) -> dict:
        self._check_fitted()
        return {"mean": self.mean_.tolist(), "std": self.std_.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "FlowScaler":
        scaler = cls()
        scaler.mean_ = np.asarray(payload["mean"], dtype=np.float64)
        scaler.std_ = np.asarray(payload["std"], dtype=np.float64)
        return scaler


def standardize_windows(windows: Sequence[WindowSample], scaler: FlowScaler):
    """Return copies of the windows with x and y standardized."""
    return [
        WindowSample(
            x=scaler.transform(w.x),
            y=scaler.transform(w.y),
            past_time_idx=w.past_time_idx,
            future_time_idx=w.future_time_idx,
        )
        for w in windows
    ]
