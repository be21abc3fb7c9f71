from datetime import datetime, timedelta

import numpy as np
import pytest

from stdcformer.data.flow import FlowSeries
from stdcformer.data.windows import make_windows, split_windows


def series(length, n=2, seed=0):
    rng = np.random.default_rng(seed)
    start = datetime(2024, 1, 1)
    return FlowSeries(
        values=rng.integers(0, 20, size=(length, n, 2)).astype(float),
        timestamps=[start + timedelta(hours=h) for h in range(length)],
        region_ids=[f"R{i}" for i in range(n)],
    )


class TestMakeWindows:
    def test_exact_fit_yields_one_window(self):
        assert len(make_windows(series(12), 6, 6)) == 1

    def test_mht_scale_window_count(self):
        # floor((5808 - 6 - 6) / 1) + 1
        assert len(make_windows(series(5808, n=1), 6, 6)) == 5797

    def test_stride_two_start_indices(self):
        windows = make_windows(series(12), 3, 3, stride=2)
        assert [w.start for w in windows] == [0, 2, 4, 6]

    def test_window_contents_and_index_contiguity(self):
        flow = series(10)
        for w in make_windows(flow, 4, 3):
            assert w.future_time_idx[0] == w.past_time_idx[-1] + 1
            assert np.array_equal(w.x, flow.values[w.past_time_idx])
            assert np.array_equal(w.y, flow.values[w.future_time_idx])

    def test_too_short_series_rejected(self):
        with pytest.raises(ValueError, match="minimum"):
            make_windows(series(10), 6, 6)


class TestSplitWindows:
    def test_exact_ratio_sizes(self):
        # 20 - 6 - 5 + 1 = 10 windows
        train, val, test = split_windows(make_windows(series(20), 6, 5), seed=1)
        assert (len(train), len(val), len(test)) == (7, 1, 2)

    def test_mht_scale_sizes_with_remainder_to_train(self):
        windows = make_windows(series(5808, n=1), 6, 6)
        train, val, test = split_windows(windows, seed=0)
        assert (len(train), len(val), len(test)) == (4059, 579, 1159)

    def test_split_is_chronological(self):
        windows = make_windows(series(40), 4, 4)
        train, val, test = split_windows(windows, seed=5)
        assert max(w.start for w in train) < min(w.start for w in val)
        assert max(w.start for w in val) < min(w.start for w in test)

    def test_partition_each_window_in_exactly_one_split(self):
        windows = make_windows(series(40), 4, 4)
        train, val, test = split_windows(windows, seed=5)
        starts = sorted(w.start for w in train + val + test)
        assert starts == [w.start for w in windows]

    def test_same_seed_reproduces_train_order(self):
        windows = make_windows(series(40), 4, 4)
        first, _, _ = split_windows(windows, seed=9)
        second, _, _ = split_windows(windows, seed=9)
        assert [w.start for w in first] == [w.start for w in second]

    def test_test_order_preserved(self):
        windows = make_windows(series(40), 4, 4)
        _, _, test = split_windows(windows, seed=9)
        assert [w.start for w in test] == sorted(w.start for w in test)

    def test_empty_bucket_rejected(self):
        windows = make_windows(series(12), 4, 4)  # 5 windows -> val bucket empty
        with pytest.raises(ValueError, match="empty"):
            split_windows(windows, ratios=(20, 1, 2), seed=0)

    def test_nonpositive_ratio_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            split_windows(make_windows(series(20), 4, 4), ratios=(7, 0, 2))
