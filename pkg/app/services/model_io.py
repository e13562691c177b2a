"""Model and dataset ingestion: weights files, CSV datasets, validation split."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from app.models.ann import AnnModel, AnnStructure, Dataset, LayerSpec
from app.models.fixed import FixedFormat, QuantizedAnn
from app.schemas.files import FormatEntry, LayerEntry, QuantizedFile, StructureEntry, WeightsFile

logger = logging.getLogger(__name__)


class ModelFormatError(ValueError):
    """Raised when a weights or quantized-network file cannot be parsed."""


class ShapeMismatchError(ModelFormatError):
    """Raised when a weight matrix or bias vector does not match the structure."""


class DatasetError(ValueError):
    """Raised when a dataset file or split request is invalid."""


# ---------------------------------------------------------------------------
# Weights files
# ---------------------------------------------------------------------------


def _structure_from_entry(entry: StructureEntry) -> AnnStructure:
    return AnnStructure(
        num_inputs=entry.num_inputs,
        layers=tuple(LayerSpec(layer.neurons, layer.activation) for layer in entry.layers),
    )


def _structure_entry(structure: AnnStructure) -> StructureEntry:
    return StructureEntry(
        num_inputs=structure.num_inputs,
        layers=[LayerEntry(neurons=l.num_neurons, activation=l.activation) for l in structure.layers],
    )


def _check_shapes(structure: AnnStructure, weights: list, biases: list) -> None:
    if len(weights) != structure.num_layers:
        raise ShapeMismatchError(
            f"expected {structure.num_layers} weight matrices, got {len(weights)}"
        )
    if len(biases) != structure.num_layers:
        raise ShapeMismatchError(
            f"expected {structure.num_layers} bias vectors, got {len(biases)}"
        )
    for k in range(structure.num_layers):
        rows, cols = structure.neurons_of(k), structure.inputs_of(k)
        matrix = weights[k]
        if len(matrix) != rows:
            raise ShapeMismatchError(
                f"layer {k + 1}: weight matrix has {len(matrix)} rows, expected {rows}"
            )
        for m, row in enumerate(matrix):
            if len(row) != cols:
                raise ShapeMismatchError(
                    f"layer {k + 1}: weight row {m} has {len(row)} columns, expected {cols}"
                )
        if len(biases[k]) != rows:
            raise ShapeMismatchError(
                f"layer {k + 1}: bias vector has {len(biases[k])} entries, expected {rows}"
            )


def model_from_payload(payload: dict) -> AnnModel:
    """Validate a decoded weights document and build the model."""
    try:
        doc = WeightsFile.model_validate(payload)
    except ValidationError as exc:
        raise ModelFormatError(f"invalid weights document: {exc.error_count()} error(s): {exc.errors()[0]['msg']}") from exc
    structure = _structure_from_entry(doc.structure)
    _check_shapes(structure, doc.weights, doc.biases)
    return AnnModel(
        structure=structure,
        weights=tuple(tuple(tuple(row) for row in layer) for layer in doc.weights),
        biases=tuple(tuple(layer) for layer in doc.biases),
    )


def load_model(path: str | Path) -> AnnModel:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ModelFormatError(f"weights file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    model = model_from_payload(payload)
    logger.info("Loaded model %s from %s", model.structure.label(), path)
    return model


def model_payload(model: AnnModel) -> dict:
    return WeightsFile(
        structure=_structure_entry(model.structure),
        weights=[[list(row) for row in layer] for layer in model.weights],
        biases=[list(layer) for layer in model.biases],
    ).model_dump()


def save_model(model: AnnModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_payload(model), indent=2) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Quantized-network files
# ---------------------------------------------------------------------------


def quantized_payload(qa: QuantizedAnn) -> dict:
    return QuantizedFile(
        structure=_structure_entry(qa.structure),
        format=FormatEntry(
            q=qa.format.q,
            input_bits=qa.format.input_bits,
            input_frac_bits=qa.format.input_frac_bits,
        ),
        weights=[[list(row) for row in layer] for layer in qa.int_weights],
        biases=[list(layer) for layer in qa.int_biases],
        provenance=dict(sorted(qa.meta.items())),
    ).model_dump()


def quantized_from_payload(payload: dict) -> QuantizedAnn:
    try:
        doc = QuantizedFile.model_validate(payload)
    except ValidationError as exc:
        raise ModelFormatError(f"invalid quantized-network document: {exc.errors()[0]['msg']}") from exc
    structure = _structure_from_entry(doc.structure)
    _check_shapes(structure, doc.weights, doc.biases)
    return QuantizedAnn(
        structure=structure,
        format=FixedFormat(
            q=doc.format.q,
            input_bits=doc.format.input_bits,
            input_frac_bits=doc.format.input_frac_bits,
        ),
        int_weights=tuple(tuple(tuple(row) for row in layer) for layer in doc.weights),
        int_biases=tuple(tuple(layer) for layer in doc.biases),
        meta=doc.provenance,
    )


def save_quantized(qa: QuantizedAnn, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(quantized_payload(qa), indent=2) + "\n", encoding="utf-8")
    return path


def load_quantized(path: str | Path) -> QuantizedAnn:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ModelFormatError(f"quantized-network file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    return quantized_from_payload(payload)


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


def dataset_from_rows(
    features: list[list[float]] | np.ndarray,
    labels: list[int] | np.ndarray,
    num_classes: int | None = None,
) -> Dataset:
    """Build a dataset from in-memory rows, applying the file-format checks."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise DatasetError("features must be an N x p matrix with N labels")
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise DatasetError("feature values must lie in [0, 1]")
    if y.size and y.min() < 0:
        raise DatasetError("labels must be non-negative class indices")
    inferred = int(y.max()) + 1 if y.size else 1
    classes = inferred if num_classes is None else num_classes
    if classes < inferred:
        raise DatasetError(f"label {inferred - 1} out of range for {classes} classes")
    return Dataset(features=x, labels=y, num_classes=classes)


def load_dataset(
    path: str | Path,
    num_inputs: int,
    num_classes: int | None = None,
) -> Dataset:
    """Parse ``num_inputs`` feature columns followed by one integer label column."""
    path = Path(path)
    features: list[list[float]] = []
    labels: list[int] = []
    try:
        handle = path.open(newline="", encoding="utf-8")
    except FileNotFoundError as exc:
        raise DatasetError(f"dataset file not found: {path}") from exc
    with handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or (row[0].lstrip().startswith("#")):
                continue
            if len(row) != num_inputs + 1:
                raise DatasetError(
                    f"{path}:{lineno}: expected {num_inputs + 1} columns, got {len(row)}"
                )
            try:
                values = [float(cell) for cell in row[:-1]]
                label = int(row[-1])
            except ValueError as exc:
                raise DatasetError(f"{path}:{lineno}: {exc}") from exc
            if any(v < 0.0 or v > 1.0 for v in values):
                raise DatasetError(f"{path}:{lineno}: feature outside [0, 1]")
            if label < 0 or (num_classes is not None and label >= num_classes):
                raise DatasetError(f"{path}:{lineno}: label {label} out of range")
            features.append(values)
            labels.append(label)
    if not labels:
        raise DatasetError(f"{path}: no samples")
    data = dataset_from_rows(
        np.asarray(features, dtype=np.float64).reshape(len(labels), num_inputs),
        labels,
        num_classes,
    )
    logger.info("Loaded %d samples (%d classes) from %s", len(data), data.num_classes, path)
    return data


def save_dataset(data: Dataset, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        handle.write(f"# {data.num_inputs} features, label\n")
        for x, y in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])
    return path


def split_validation(data: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Seeded split moving round(fraction * |data|) samples into validation."""
    if len(data) == 0:
        raise DatasetError("cannot split an empty dataset")
    if not 0.0 < fraction < 1.0:
        raise DatasetError(f"validation fraction must be in (0, 1), got {fraction}")
    count = int(round(fraction * len(data)))
    order = np.random.default_rng(seed).permutation(len(data))
    validation = np.sort(order[:count])
    train = np.sort(order[count:])
    logger.info(
        "Split %d samples into %d train / %d validation (seed=%d)",
        len(data), train.size, validation.size, seed,
    )
    return data.subset(train), data.subset(validation)


def input_codes(data: Dataset, fmt: FixedFormat) -> np.ndarray:
    """Unsigned input codes floor(x * 2^input_frac_bits), saturated to the input width."""
    scaled = np.floor(np.ldexp(data.features, fmt.input_frac_bits))
    top = (1 << fmt.input_bits) - 1
    return np.clip(scaled, 0, top).astype(np.int64)
