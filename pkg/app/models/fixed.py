"""Fixed-point formats, signed-digit forms and the integer network."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

from app.models.ann import AnnStructure


@dataclass(frozen=True)
class FixedFormat:
    """Bit-level format shared by every layer.

    Inputs and layer outputs are ``input_bits`` wide with ``input_frac_bits``
    fractional bits; weights carry ``q`` fractional bits, so the accumulator of
    an inner product sits at ``input_frac_bits + q``.
    """

    q: int
    input_bits: int = 8
    input_frac_bits: int = 8

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ValueError(f"quantization value q must be >= 1, got {self.q}")
        if self.input_bits < 1:
            raise ValueError(f"input_bits must be >= 1, got {self.input_bits}")

    @property
    def acc_frac_bits(self) -> int:
        return self.input_frac_bits + self.q

    @property
    def one(self) -> int:
        """The value 1.0 at accumulator scale."""
        return 1 << self.acc_frac_bits

    def output_range(self, activation: str) -> tuple[int, int]:
        """Saturation bounds of a layer output code."""
        if activation == "htanh":
            half = 1 << (self.input_bits - 1)
            return -half, half - 1
        return 0, (1 << self.input_bits) - 1

    def input_magnitude(self, signed: bool) -> int:
        """Largest magnitude an input code can take."""
        if signed:
            return 1 << (self.input_bits - 1)
        return (1 << self.input_bits) - 1


@dataclass(frozen=True)
class CsdForm:
    """Canonical signed-digit form, least-significant digit first."""

    digits: tuple[int, ...]
    value: int

    @property
    def nonzero_count(self) -> int:
        return sum(1 for d in self.digits if d)

    def terms(self) -> list[tuple[int, int]]:
        """(position, sign) for every nonzero digit, low positions first."""
        return [(i, d) for i, d in enumerate(self.digits) if d]


@dataclass(frozen=True)
class QuantizedAnn:
    """Integer network: weights at scale 2^q, biases at accumulator scale."""

    structure: AnnStructure
    format: FixedFormat
    int_weights: tuple[tuple[tuple[int, ...], ...], ...]
    int_biases: tuple[tuple[int, ...], ...]
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        s = self.structure
        if len(self.int_weights) != s.num_layers or len(self.int_biases) != s.num_layers:
            raise ValueError("integer weights/biases do not match the layer count")
        for k in range(s.num_layers):
            rows = self.int_weights[k]
            if len(rows) != s.neurons_of(k) or any(len(r) != s.inputs_of(k) for r in rows):
                raise ValueError(f"integer weight matrix of layer {k + 1} has the wrong shape")
            if len(self.int_biases[k]) != s.neurons_of(k):
                raise ValueError(f"integer bias vector of layer {k + 1} has the wrong length")

    @cached_property
    def layer_weight_bits(self) -> tuple[int, ...]:
        """Largest weight magnitude width per layer."""
        return tuple(
            max((abs(w).bit_length() for row in layer for w in row), default=0)
            for layer in self.int_weights
        )

    def all_weights(self) -> list[int]:
        return [w for layer in self.int_weights for row in layer for w in row]

    def all_biases(self) -> list[int]:
        return [b for layer in self.int_biases for b in layer]

    def with_values(
        self,
        weights: list[list[list[int]]],
        biases: list[list[int]],
        **meta,
    ) -> QuantizedAnn:
        """Copy with new integer values (plain nested lists accepted)."""
        return replace(
            self,
            int_weights=tuple(tuple(tuple(int(w) for w in row) for row in layer) for layer in weights),
            int_biases=tuple(tuple(int(b) for b in layer) for layer in biases),
            meta={**self.meta, **meta},
        )

    def mutable_values(self) -> tuple[list[list[list[int]]], list[list[int]]]:
        return (
            [[list(row) for row in layer] for layer in self.int_weights],
            [list(layer) for layer in self.int_biases],
        )
