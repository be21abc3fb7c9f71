import numpy as np
import pytest
import torch
from sklearn.base import clone

from conftest import make_dataset
from stdcformer.estimator import STDCFormerForecaster


def small_forecaster(**overrides):
    params = dict(
        hidden_dim=8, lap_dim=2, encoder_layers=1, decoder_layers=1, heads=2,
        past_steps=3, future_steps=2, lr=0.005, max_epochs=3,
        early_stop_patience=2, batch_size=16, seed=4,
    )
    params.update(overrides)
    return STDCFormerForecaster(**params)


@pytest.fixture(scope="module")
def fitted():
    dataset = make_dataset(n=4, length=24 * 8, seed=6)
    est = small_forecaster().fit(dataset)
    return dataset, est


class TestEstimatorInterface:
    def test_get_set_params_round_trip(self):
        est = small_forecaster()
        params = est.get_params()
        assert params["hidden_dim"] == 8
        est.set_params(hidden_dim=16)
        assert est.hidden_dim == 16

    def test_sklearn_clone_compatible(self):
        est = small_forecaster(use_dc=False)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_fit_returns_self_and_sets_state(self, fitted):
        dataset, est = fitted
        assert est.train_state_.best_epoch >= 0
        assert est.model_.parameter_count() > 0
        assert est.schema_ == dataset.schema_descriptor()

    def test_predict_default_test_split(self, fitted):
        dataset, est = fitted
        y_hat = est.predict(dataset)
        test_w = est.dataset_splits(dataset)[2]
        assert y_hat.shape == (len(test_w), 2, 4, 2)

    def test_evaluate_and_score_consistent(self, fitted):
        dataset, est = fitted
        report = est.evaluate(dataset)
        assert est.score(dataset) == pytest.approx(-report.overall["io"].mae)

    def test_unfitted_predict_rejected(self):
        dataset = make_dataset(n=3, length=24 * 5, seed=1)
        with pytest.raises(ValueError, match="not fitted"):
            small_forecaster().predict(dataset)

    def test_save_load_round_trip_predictions(self, fitted, tmp_path):
        dataset, est = fitted
        path = tmp_path / "ckpt.pt"
        est.save(path)
        loaded = STDCFormerForecaster.load(path)
        assert loaded.get_params() == est.get_params()
        a = est.predict(dataset)
        b = loaded.predict(dataset)
        assert np.array_equal(a, b)

    def test_same_seed_refit_is_deterministic(self):
        dataset = make_dataset(n=3, length=24 * 6, seed=2)
        a = small_forecaster().fit(dataset)
        b = small_forecaster().fit(dataset)
        history_a = [(r.train_loss, r.val_mae) for r in a.train_state_.history]
        history_b = [(r.train_loss, r.val_mae) for r in b.train_state_.history]
        assert history_a == history_b
        for pa, pb in zip(a.model_.parameters(), b.model_.parameters()):
            assert torch.equal(pa, pb)


class TestTrainOnlyFitting:
    def test_scaler_statistics_come_from_train_split_only(self, fitted):
        from stdcformer.data.scaling import FlowScaler

        dataset, est = fitted
        train_w, _, _ = est.dataset_splits(dataset)
        reference = FlowScaler().fit(train_w)
        assert np.array_equal(est.scaler_.mean_, reference.mean_)
        assert np.array_equal(est.scaler_.std_, reference.std_)

    def test_head_proj_param_reaches_model(self):
        dataset = make_dataset(n=3, length=24 * 5, seed=3)
        est = small_forecaster(head_proj=True, max_epochs=2, early_stop_patience=1)
        est.fit(dataset)
        assert est.model_.config.head_proj is True
        assert est.model_.encoder[0].spatial_attn.out_map is not None
