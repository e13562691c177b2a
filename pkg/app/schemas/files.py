"""Pydantic schemas for the on-disk weight, quantized-network and report files."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.ann import ACTIVATIONS


class LayerEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    neurons: int = Field(ge=1)
    activation: str

    @field_validator("activation")
    @classmethod
    def _known_activation(cls, value: str) -> str:
        if value not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {value!r}")
        return value


class StructureEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    num_inputs: int = Field(ge=1)
    layers: list[LayerEntry] = Field(min_length=1)


class WeightsFile(BaseModel):
    """Real-valued network: ``weights[k]`` is the row-major η_k x ι_k matrix."""

    model_config = ConfigDict(extra="forbid")

    structure: StructureEntry
    weights: list[list[list[float]]]
    biases: list[list[float]]


class FormatEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    q: int = Field(ge=1)
    input_bits: int = Field(default=8, ge=1)
    input_frac_bits: int = Field(default=8, ge=0)


class QuantizedFile(BaseModel):
    """Integer network plus provenance (seed, q-search trace, tuning)."""

    model_config = ConfigDict(extra="forbid")

    structure: StructureEntry
    format: FormatEntry
    weights: list[list[list[int]]]
    biases: list[list[int]]
    provenance: dict = Field(default_factory=dict)


class MacSizesEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    block: str
    input_bits: int = Field(ge=0)
    weight_bits: int = Field(ge=0)
    adder_bits: int = Field(ge=0)
    register_bits: int = Field(ge=0)
    sls: int | None = None


class ReportFile(BaseModel):
    """Structural cost report of one design (``report.json``)."""

    model_config = ConfigDict(extra="forbid")

    design: str
    structure: str
    arch: str
    mult_style: str
    q: int = Field(ge=1)
    seed: int
    tnzd: int = Field(ge=0)
    tnzd_before_tuning: int | None = None
    cycles: int = Field(ge=0)
    adders: int = Field(ge=0)
    adder_depth: int = Field(ge=0)
    block_ops: dict[str, int] = Field(default_factory=dict)
    hardware_accuracy: float = Field(ge=0.0, le=1.0)
    test_hardware_accuracy: float | None = None
    software_accuracy: float | None = None
    layer_weight_bits: list[int] = Field(default_factory=list)
    blocks: list[MacSizesEntry] = Field(default_factory=list)
    mux_sizes: dict[str, int] = Field(default_factory=dict)
    interpretations: list[str] = Field(default_factory=list)
