"""Sliding-window samples and the chronological train/val/test split."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from ..validation import check_positive_int
from .flow import FlowSeries


@dataclass
class WindowSample:
    """One (past, future) training instance with aligned timestep indices."""

    x: np.ndarray  # [past_steps, n, f]
    y: np.ndarray  # [future_steps, n, f]
    past_time_idx: np.ndarray
    future_time_idx: np.ndarray

    @property
    def start(self) -> int:
        return int(self.past_time_idx[0])


def make_windows(
    flow: FlowSeries, past_steps: int, future_steps: int, stride: int = 1
) -> List[WindowSample]:
    """Slice the series into windows ordered by start index.

    Window count is floor((L - past - future) / stride) + 1. Consecutive
    windows overlap in raw timesteps; disjointness holds at the window level
    only.
    """
    for name, value in (("past_steps", past_steps), ("future_steps", future_steps),
                        ("stride", stride)):
        check_positive_int(value, name)
    length = flow.length
    needed = past_steps + future_steps
    if length < needed:
        raise ValueError(
            f"series length {length} below minimum {needed} (past + future steps)"
        )
    windows = []
    for start in range(0, length - needed + 1, stride):
        past = np.arange(start, start + past_steps)
        future = np.arange(start + past_steps, start + needed)
        windows.append(
            WindowSample(
                x=flow.values[past].copy(),
                y=flow.values[future].copy(),
                past_time_idx=past,
                future_time_idx=future,
            )
        )
    return windows


def split_windows(
    windows: Sequence[WindowSample],
    ratios: Tuple[float, float, float] = (7, 1, 2),
    seed: int = 0,
) -> Tuple[List[WindowSample], List[WindowSample], List[WindowSample]]:
    """Chronological 7:1:2 split by window start; train gets the remainder.

    Train and validation orders are shuffled with `seed` for batching; the
    test order is preserved. The temporal assignment itself is never shuffled,
    so no future window leaks into training.
    """
    if any(r <= 0 for r in ratios):
        raise ValueError("split ratios must be positive")
    ordered = sorted(windows, key=lambda w: w.start)
    total = len(ordered)
    denom = sum(ratios)
    n_train = int(total * ratios[0] / denom)
    n_val = int(total * ratios[1] / denom)
    n_test = int(total * ratios[2] / denom)
    n_train += total - (n_train + n_val + n_test)

    train = ordered[:n_train]
    val = ordered[n_train:n_train + n_val]
    test = ordered[n_train + n_val:]
    for name, part in (("train", train), ("val", val), ("test", test)):
        if not part:
            raise ValueError(f"{name} split is empty for {total} windows, ratios {ratios}")

    rng = np.random.default_rng(seed)
    train = [train[i] for i in rng.permutation(len(train))]
    val = [val[i] for i in rng.permutation(len(val))]
    return train, val, test
