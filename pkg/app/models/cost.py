"""Design architectures and the structural cost report."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import StrEnum


class Architecture(StrEnum):
    PARALLEL = "parallel"
    SMAC_NEURON = "smac_neuron"
    SMAC_ANN = "smac_ann"


class MultStyle(StrEnum):
    BEHAVIORAL = "behavioral"
    CAVM = "cavm"
    CMVM = "cmvm"
    MCM = "mcm"


# Legal (architecture, multiplication style) pairs.
LEGAL_STYLES: dict[Architecture, tuple[MultStyle, ...]] = {
    Architecture.PARALLEL: (MultStyle.BEHAVIORAL, MultStyle.CAVM, MultStyle.CMVM),
    Architecture.SMAC_NEURON: (MultStyle.BEHAVIORAL, MultStyle.MCM),
    Architecture.SMAC_ANN: (MultStyle.BEHAVIORAL,),
}


@dataclass(frozen=True)
class MacSizes:
    """Datapath sizes of one block (a MAC for time-multiplexed designs,
    a layer inner product for the parallel design)."""

    block: str
    input_bits: int
    weight_bits: int
    adder_bits: int
    register_bits: int
    sls: int | None = None

    @property
    def multiplier_bits(self) -> tuple[int, int]:
        return self.input_bits, self.weight_bits


@dataclass(frozen=True)
class CostReport:
    design: str
    structure: str
    arch: str
    mult_style: str
    q: int
    seed: int
    tnzd: int
    cycles: int
    adders: int
    adder_depth: int
    hardware_accuracy: float
    blocks: list[MacSizes] = field(default_factory=list)
    mux_sizes: dict[str, int] = field(default_factory=dict)
    layer_weight_bits: list[int] = field(default_factory=list)
    tnzd_before_tuning: int | None = None
    test_hardware_accuracy: float | None = None
    software_accuracy: float | None = None
    block_ops: dict[str, int] = field(default_factory=dict)
    interpretations: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name in ("tnzd", "cycles", "adders", "adder_depth"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if not 0.0 <= self.hardware_accuracy <= 1.0:
            raise ValueError(f"hardware_accuracy out of [0, 1]: {self.hardware_accuracy}")

    @property
    def multiplier_bits(self) -> list[tuple[int, int]]:
        return [b.multiplier_bits for b in self.blocks]

    @property
    def adder_bits(self) -> list[int]:
        return [b.adder_bits for b in self.blocks]

    @property
    def register_bits(self) -> list[int]:
        return [b.register_bits for b in self.blocks]
