"""Tests for weights files, quantized-network files and datasets."""

import json
from pathlib import Path

import numpy as np
import pytest

from app.models.ann import AnnStructure
from app.models.fixed import FixedFormat
from app.services.model_io import (
    DatasetError,
    ModelFormatError,
    ShapeMismatchError,
    dataset_from_rows,
    input_codes,
    load_dataset,
    load_model,
    load_quantized,
    save_dataset,
    save_model,
    save_quantized,
    split_validation,
)


def _write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def _weights_doc(structure: list[tuple[int, str]], num_inputs: int) -> dict:
    weights, biases = [], []
    cols = num_inputs
    for neurons, _ in structure:
        weights.append([[0.25] * cols for _ in range(neurons)])
        biases.append([0.0] * neurons)
        cols = neurons
    return {
        "structure": {
            "num_inputs": num_inputs,
            "layers": [{"neurons": n, "activation": a} for n, a in structure],
        },
        "weights": weights,
        "biases": biases,
    }


# ---------------------------------------------------------------------------
# Weights files
# ---------------------------------------------------------------------------


def test_load_minimal_model(tmp_path: Path):
    path = _write_json(
        tmp_path / "net.json",
        {
            "structure": {"num_inputs": 1, "layers": [{"neurons": 1, "activation": "lin"}]},
            "weights": [[[0.5]]],
            "biases": [[0.0]],
        },
    )
    model = load_model(path)
    assert model.structure.num_layers == 1
    assert model.structure.neurons_of(0) == 1
    assert model.weights == (((0.5,),),)


def test_load_digit_structure(tmp_path: Path):
    path = _write_json(tmp_path / "net.json", _weights_doc([(10, "hsig")], 16))
    model = load_model(path)
    assert model.structure.inputs_of(0) == 16
    assert model.structure.neurons_of(0) == 10
    assert model.structure.label() == "16-10"


def test_wrong_column_count_in_second_layer_is_a_shape_mismatch(tmp_path: Path):
    doc = _weights_doc([(3, "htanh"), (2, "hsig")], 4)
    doc["weights"][1][0].append(0.1)
    path = _write_json(tmp_path / "net.json", doc)
    with pytest.raises(ShapeMismatchError, match="layer 2"):
        load_model(path)


def test_unknown_activation_is_rejected(tmp_path: Path):
    doc = _weights_doc([(2, "softmax")], 2)
    with pytest.raises(ModelFormatError):
        load_model(_write_json(tmp_path / "net.json", doc))


def test_structure_label_needs_one_activation_per_layer():
    assert AnnStructure.from_label("4-3-2", activations=["htanh", "hsig"]).num_layers == 2
    with pytest.raises(ValueError, match="2 layers but 1 activations"):
        AnnStructure.from_label("4-3-2", activations=["hsig"])


def test_missing_file_is_a_format_error(tmp_path: Path):
    with pytest.raises(ModelFormatError, match="not found"):
        load_model(tmp_path / "missing.json")


def test_model_save_load_round_trip(tmp_path: Path, small_model):
    path = save_model(small_model, tmp_path / "out" / "net.json")
    assert load_model(path) == small_model


def test_quantized_round_trip_keeps_provenance(tmp_path: Path, small_qa):
    qa = small_qa.with_values(*small_qa.mutable_values(), seed=7, ha_history=[0.5, 0.75])
    loaded = load_quantized(save_quantized(qa, tmp_path / "quantized.json"))
    assert loaded == qa
    assert loaded.format == FixedFormat(q=4)
    assert loaded.meta == {"ha_history": [0.5, 0.75], "seed": 7}


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


def test_dataset_csv_round_trip(tmp_path: Path, small_data):
    path = save_dataset(small_data, tmp_path / "data.csv")
    loaded = load_dataset(path, small_data.num_inputs, small_data.num_classes)
    assert np.array_equal(loaded.features, small_data.features)
    assert np.array_equal(loaded.labels, small_data.labels)


def test_dataset_feature_out_of_range_names_the_line(tmp_path: Path):
    path = tmp_path / "data.csv"
    path.write_text("0.1,0.2,0\n0.5,1.5,1\n", encoding="utf-8")
    with pytest.raises(DatasetError, match=":2:"):
        load_dataset(path, 2)


def test_dataset_bad_label_column(tmp_path: Path):
    path = tmp_path / "data.csv"
    path.write_text("0.1,0.2,x\n", encoding="utf-8")
    with pytest.raises(DatasetError):
        load_dataset(path, 2)


def test_dataset_num_classes_defaults_to_max_label_plus_one(tmp_path: Path):
    path = tmp_path / "data.csv"
    path.write_text("# header\n0.1,0.2,0\n0.3,0.4,3\n", encoding="utf-8")
    assert load_dataset(path, 2).num_classes == 4


def test_split_validation_cardinality_and_determinism():
    data = dataset_from_rows(np.linspace(0, 1, 10).reshape(10, 1), [0, 1] * 5)
    train, validation = split_validation(data, 0.3, seed=7)
    assert (len(train), len(validation)) == (7, 3)
    _, again = split_validation(data, 0.3, seed=7)
    assert np.array_equal(validation.features, again.features)
    assert sorted(train.features[:, 0].tolist() + validation.features[:, 0].tolist()) == sorted(
        data.features[:, 0].tolist()
    )


@pytest.mark.parametrize("draw", range(30))
def test_split_validation_partitions_every_sample(draw):
    rng = np.random.default_rng(draw)
    n = int(rng.integers(2, 500))
    fraction = float(rng.uniform(0.05, 0.95))
    seed = int(rng.integers(0, 2**31))
    # labels double as sample ids
    data = dataset_from_rows(rng.uniform(0, 1, (n, 3)), np.arange(n), num_classes=n)

    train, validation = split_validation(data, fraction, seed)
    train_ids, validation_ids = set(train.labels.tolist()), set(validation.labels.tolist())
    assert len(validation) == round(fraction * n)
    assert len(train) + len(validation) == n
    assert train_ids.isdisjoint(validation_ids)
    assert train_ids | validation_ids == set(range(n))

    train_again, validation_again = split_validation(data, fraction, seed)
    assert np.array_equal(validation.labels, validation_again.labels)
    assert np.array_equal(train.labels, train_again.labels)


def test_split_validation_size_on_digit_training_set():
    data = dataset_from_rows(np.zeros((7494, 1)), np.zeros(7494, dtype=int))
    _, validation = split_validation(data, 0.3, seed=0)
    assert len(validation) == 2248


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2])
def test_split_validation_rejects_bad_fraction(fraction):
    data = dataset_from_rows(np.zeros((4, 1)), [0, 1, 0, 1])
    with pytest.raises(DatasetError):
        split_validation(data, fraction, seed=0)


def test_input_codes_floor_and_saturate():
    data = dataset_from_rows([[0.0, 0.5, 0.999, 1.0]], [0])
    codes = input_codes(data, FixedFormat(q=3))
    assert codes.tolist() == [[0, 128, 255, 255]]
