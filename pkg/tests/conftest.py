"""Shared pytest fixtures for the annsynth test suite."""

from collections.abc import AsyncGenerator, Callable

import httpx
import numpy as np
import pytest

from app.models.ann import AnnModel, AnnStructure, Dataset
from app.models.fixed import QuantizedAnn
from app.services.fixedpoint import quantize_model
from app.services.inference import forward_float
from app.services.model_io import dataset_from_rows
from main import app

# Structures evaluated on the pen-digit problem (16 inputs, 10 classes).
DIGIT_STRUCTURES = ("16-10", "16-10-10", "16-16-10", "16-10-10-10", "16-16-10-10")


# ---------------------------------------------------------------------------
# HTTP client
# ---------------------------------------------------------------------------


@pytest.fixture()
async def client() -> AsyncGenerator[httpx.AsyncClient, None]:
    """HTTPX async client wired to the FastAPI app."""
    async with httpx.AsyncClient(
        transport=httpx.ASGITransport(app=app),
        base_url="http://testserver",
    ) as ac:
        yield ac


# ---------------------------------------------------------------------------
# Network / data factories
# ---------------------------------------------------------------------------


def random_model(structure: AnnStructure | str, seed: int = 0, scale: float = 1.0) -> AnnModel:
    """Uniform weights in [-scale, scale], biases in [-scale/2, scale/2]."""
    if isinstance(structure, str):
        structure = AnnStructure.from_label(structure)
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for k in range(structure.num_layers):
        rows, cols = structure.neurons_of(k), structure.inputs_of(k)
        weights.append(
            tuple(tuple(float(w) for w in row) for row in rng.uniform(-scale, scale, (rows, cols)))
        )
        biases.append(tuple(float(b) for b in rng.uniform(-scale / 2, scale / 2, rows)))
    return AnnModel(structure=structure, weights=tuple(weights), biases=tuple(biases))


def labeled_dataset(model: AnnModel, samples: int, seed: int = 0) -> Dataset:
    """Uniform samples labeled by the model's own real-valued inference."""
    rng = np.random.default_rng(seed + 1000)
    features = rng.uniform(0.0, 1.0, (samples, model.structure.num_inputs))
    labels = np.argmax(forward_float(model, features), axis=1)
    return dataset_from_rows(features, labels, model.structure.num_outputs)


@pytest.fixture()
def model_factory() -> Callable[..., AnnModel]:
    return random_model


@pytest.fixture()
def dataset_factory() -> Callable[..., Dataset]:
    return labeled_dataset


@pytest.fixture()
def small_model() -> AnnModel:
    """4-3-2 network: htanh hidden layer, hsig outputs."""
    return random_model("4-3-2", seed=3)


@pytest.fixture()
def small_data(small_model: AnnModel) -> Dataset:
    return labeled_dataset(small_model, 40, seed=3)


@pytest.fixture()
def small_qa(small_model: AnnModel) -> QuantizedAnn:
    return quantize_model(small_model, 4)


@pytest.fixture()
def matrix_2x2_qa() -> QuantizedAnn:
    """Single lin layer whose integer weight matrix is [[11, 3], [5, 13]] at q=4."""
    structure = AnnStructure.from_label("2-2", activations=["lin"])
    model = AnnModel(
        structure=structure,
        weights=(((11 / 16, 3 / 16), (5 / 16, 13 / 16)),),
        biases=((0.0, 0.0),),
    )
    qa = quantize_model(model, 4)
    assert qa.int_weights == (((11, 3), (5, 13)),)
    return qa
