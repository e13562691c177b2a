"""Tests for the demo model seeding script."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from app.services.inference import software_accuracy
from app.services.model_io import load_dataset, load_model
from scripts.seed_demo_model import SeedError, main, seed_demo_model


def test_seed_writes_a_self_consistent_pair(tmp_path: Path) -> None:
    """The dataset labels are the model's own real-valued predictions."""

    model_path, data_path = seed_demo_model("16-10", 200, 0, tmp_path)
    assert model_path.name == "demo_16-10.json"
    assert data_path.name == "demo_16-10.csv"
    model = load_model(model_path)
    data = load_dataset(data_path, 16, 10)
    assert len(data) == 200
    assert software_accuracy(model, data) == 1.0


def test_centered_biases_spread_the_classes(tmp_path: Path) -> None:
    _, data_path = seed_demo_model("16-10", 400, 1, tmp_path)
    labels = load_dataset(data_path, 16, 10).labels
    assert len(np.unique(labels)) >= 3


def test_same_seed_same_files(tmp_path: Path) -> None:
    first = seed_demo_model("8-4-3", 50, 7, tmp_path / "a")
    second = seed_demo_model("8-4-3", 50, 7, tmp_path / "b")
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize(
    ("structure", "samples"),
    [("16", 100), ("16-1", 100), ("16-x", 100), ("4-2", 1)],
)
def test_rejected_requests(tmp_path: Path, structure: str, samples: int) -> None:
    with pytest.raises(SeedError):
        seed_demo_model(structure, samples, 0, tmp_path)


def test_main_reports_errors(tmp_path: Path, capsys) -> None:
    assert main(["--structure", "16-1", "--out-dir", str(tmp_path)]) == 1
    assert capsys.readouterr().out.startswith("[error] ")
    assert main(["--structure", "4-3", "--samples", "20", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "demo_4-3.csv").is_file()
