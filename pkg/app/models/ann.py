"""Feedforward network domain types: structure, real-valued model, dataset."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Activations the generated hardware can realize.
ACTIVATIONS = ("hsig", "htanh", "lin", "relu", "satlin")


@dataclass(frozen=True)
class LayerSpec:
    num_neurons: int
    activation: str

    def __post_init__(self) -> None:
        if self.num_neurons < 1:
            raise ValueError(f"layer needs at least one neuron, got {self.num_neurons}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"unsupported activation {self.activation!r}; expected one of {ACTIVATIONS}"
            )


@dataclass(frozen=True)
class AnnStructure:
    """Layered feedforward topology.

    ``num_inputs`` is the number of primary inputs; layer ``k`` takes the outputs
    of layer ``k-1`` as its inputs.
    """

    num_inputs: int
    layers: tuple[LayerSpec, ...]

    def __post_init__(self) -> None:
        if self.num_inputs < 1:
            raise ValueError(f"num_inputs must be positive, got {self.num_inputs}")
        if not self.layers:
            raise ValueError("structure needs at least one layer")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def inputs_of(self, k: int) -> int:
        """Number of inputs feeding layer ``k`` (0-based)."""
        return self.num_inputs if k == 0 else self.layers[k - 1].num_neurons

    def neurons_of(self, k: int) -> int:
        return self.layers[k].num_neurons

    @property
    def num_outputs(self) -> int:
        return self.layers[-1].num_neurons

    def label(self) -> str:
        """Dash notation such as ``16-10-10``."""
        return "-".join(
            [str(self.num_inputs)] + [str(layer.num_neurons) for layer in self.layers]
        )

    @classmethod
    def from_label(cls, label: str, activations: list[str] | str = "htanh") -> AnnStructure:
        """Build a structure from dash notation; the last layer defaults to hsig."""
        counts = [int(part) for part in label.split("-")]
        if len(counts) < 2:
            raise ValueError(f"structure label needs inputs and one layer: {label!r}")
        hidden = len(counts) - 1
        if isinstance(activations, str):
            acts = [activations] * (hidden - 1) + ["hsig"]
        else:
            acts = list(activations)
            if len(acts) != hidden:
                raise ValueError(
                    f"structure {label!r} has {hidden} layers but {len(acts)} activations were given"
                )
        return cls(
            num_inputs=counts[0],
            layers=tuple(LayerSpec(n, a) for n, a in zip(counts[1:], acts)),
        )


@dataclass(frozen=True)
class AnnModel:
    """Network with real-valued weights ``weights[k][m][n]`` and biases ``biases[k][m]``."""

    structure: AnnStructure
    weights: tuple[tuple[tuple[float, ...], ...], ...]
    biases: tuple[tuple[float, ...], ...]


@dataclass(frozen=True, eq=False)
class Dataset:
    """Samples with features in [0, 1] and integer class labels."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def num_inputs(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: np.ndarray | list[int]) -> Dataset:
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            features=self.features[idx],
            labels=self.labels[idx],
            num_classes=self.num_classes,
        )
