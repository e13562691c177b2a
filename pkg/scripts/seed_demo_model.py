#!/usr/bin/env python3
"""Write a random demo network and a dataset it classifies.

Usage:
    uv run python scripts/seed_demo_model.py --structure 16-10 --samples 600 --seed 0

It writes into --out-dir (default data/):
    - demo_<structure>.json   weights file
    - demo_<structure>.csv    samples labeled by the network's own real-valued inference
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from app.config import settings
from app.models.ann import AnnModel, AnnStructure
from app.services.inference import forward_float
from app.services.model_io import dataset_from_rows, save_dataset, save_model

HELP_TEXT = """\
Demo model seeding

Builds a feedforward network with uniform random weights in [-1, 1] (hidden
layers htanh, output layer hsig), draws uniform samples in [0, 1] and labels
each one with the argmax of the network output. Output biases are centered so
every class gets a share of the samples.

The files feed the pipeline directly:
  annsynth pipeline --model data/demo_16-10.json --data data/demo_16-10.csv
"""


class SeedError(RuntimeError):
    """Raised when the requested demo cannot be built."""


def random_model(structure: AnnStructure, rng: np.random.Generator) -> AnnModel:
    weights = []
    biases = []
    for k in range(structure.num_layers):
        rows, cols = structure.neurons_of(k), structure.inputs_of(k)
        weights.append(rng.uniform(-1.0, 1.0, size=(rows, cols)))
        biases.append(rng.uniform(-0.5, 0.5, size=rows))
    return _model(structure, weights, biases)


def _model(structure: AnnStructure, weights: list[np.ndarray], biases: list[np.ndarray]) -> AnnModel:
    return AnnModel(
        structure=structure,
        weights=tuple(tuple(tuple(float(w) for w in row) for row in layer) for layer in weights),
        biases=tuple(tuple(float(b) for b in layer) for layer in biases),
    )


def center_output_biases(model: AnnModel, features: np.ndarray) -> AnnModel:
    """Shift the output biases so each output pre-activation has zero mean over ``features``."""
    s = model.structure
    hidden = features
    if s.num_layers > 1:
        trunk = AnnModel(
            structure=AnnStructure(s.num_inputs, s.layers[:-1]),
            weights=model.weights[:-1],
            biases=model.biases[:-1],
        )
        hidden = forward_float(trunk, features)
    w = np.asarray(model.weights[-1])
    b = np.asarray(model.biases[-1])
    pre = hidden @ w.T + b
    weights = [np.asarray(layer) for layer in model.weights]
    biases = [np.asarray(layer) for layer in model.biases]
    biases[-1] = b - pre.mean(axis=0)
    return _model(s, weights, biases)


def seed_demo_model(
    structure: str,
    samples: int,
    seed: int,
    out_dir: Path,
) -> tuple[Path, Path]:
    try:
        ann = AnnStructure.from_label(structure)
    except ValueError as exc:
        raise SeedError(f"bad structure {structure!r}: {exc}") from exc
    if ann.num_outputs < 2:
        raise SeedError("the output layer needs at least two neurons to classify")
    if samples < 2:
        raise SeedError(f"need at least 2 samples, got {samples}")

    rng = np.random.default_rng(seed)
    features = rng.uniform(0.0, 1.0, size=(samples, ann.num_inputs))
    model = center_output_biases(random_model(ann, rng), features)
    labels = np.argmax(forward_float(model, features), axis=1)
    data = dataset_from_rows(features, labels, ann.num_outputs)

    label = ann.label()
    model_path = save_model(model, out_dir / f"demo_{label}.json")
    data_path = save_dataset(data, out_dir / f"demo_{label}.csv")
    counts = np.bincount(labels, minlength=ann.num_outputs)
    print(f"[ok] structure {label}, {samples} samples, seed {seed}")
    print(f"[ok] class counts: {' '.join(str(c) for c in counts)}")
    print(f"[ok] wrote {model_path}")
    print(f"[ok] wrote {data_path}")
    return model_path, data_path


def main(argv: list[str] | None = None) -> int:
    """CLI entrypoint."""

    parser = argparse.ArgumentParser(
        description=HELP_TEXT,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--structure", default="16-10")
    parser.add_argument("--samples", type=int, default=600)
    parser.add_argument("--seed", type=int, default=settings.SEED)
    parser.add_argument("--out-dir", type=Path, default=settings.DATA_DIR)
    args = parser.parse_args(sys.argv[1:] if argv is None else argv)

    try:
        seed_demo_model(args.structure, args.samples, args.seed, args.out_dir)
    except SeedError as exc:
        print(f"[error] {exc}")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
