import json

import numpy as np
import pytest

from conftest import make_dataset
from stdcformer.data.dataset import build_dataset, load_archive, save_archive
from stdcformer.data.synthetic import generate_synthetic


def test_archive_round_trip_preserves_everything(tmp_path):
    dataset = make_dataset(n=4, length=24 * 4, seed=17)
    save_archive(dataset, tmp_path / "arc")
    back = load_archive(tmp_path / "arc")
    assert np.array_equal(back.flow.values, dataset.flow.values)
    assert back.flow.timestamps == dataset.flow.timestamps
    assert back.flow.region_ids == dataset.flow.region_ids
    assert np.array_equal(back.temporal.rows, dataset.temporal.rows)
    assert back.temporal.schema == dataset.temporal.schema
    assert np.array_equal(back.spatial.rows, dataset.spatial.rows)
    assert back.graph.edges == dataset.graph.edges


def test_missing_manifest_rejected(tmp_path):
    with pytest.raises(ValueError, match="manifest"):
        load_archive(tmp_path)


def test_version_mismatch_rejected(tmp_path):
    dataset = make_dataset(n=3, length=24 * 3, seed=1)
    arc = save_archive(dataset, tmp_path / "arc")
    manifest = json.loads((arc / "manifest.json").read_text())
    manifest["format_version"] = 42
    (arc / "manifest.json").write_text(json.dumps(manifest))
    with pytest.raises(ValueError, match="version"):
        load_archive(arc)


def test_shape_mismatch_against_manifest_rejected(tmp_path):
    dataset = make_dataset(n=3, length=24 * 3, seed=2)
    arc = save_archive(dataset, tmp_path / "arc")
    np.save(arc / "spatial.npy", np.zeros((2, 2)))
    with pytest.raises(ValueError, match="spatial"):
        load_archive(arc)


def test_build_dataset_validates_alignment():
    data = generate_synthetic(3, 24 * 3, seed=5)
    with pytest.raises(ValueError, match="temporal records"):
        build_dataset(data.flow, data.temporal_records[:-1], data.spatial_records,
                      data.graph, ("clear", "cloudy", "rain", "snow", "fog"),
                      tuple(data.spatial_records[0].poi_counts))
    missing = [r for r in data.spatial_records if r.region_id != "Z001"]
    with pytest.raises(ValueError, match="Z001"):
        build_dataset(data.flow, data.temporal_records, missing, data.graph,
                      ("clear", "cloudy", "rain", "snow", "fog"),
                      tuple(data.spatial_records[0].poi_counts))


def test_build_dataset_reorders_spatial_records():
    data = generate_synthetic(3, 24 * 3, seed=6)
    vocab = tuple(data.spatial_records[0].poi_counts)
    shuffled = list(reversed(data.spatial_records))
    dataset = build_dataset(data.flow, data.temporal_records, shuffled, data.graph,
                            ("clear", "cloudy", "rain", "snow", "fog"), vocab)
    assert dataset.spatial.region_ids == data.flow.region_ids
