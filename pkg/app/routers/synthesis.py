"""Synthesis API routes.

POST /api/shiftadds/synth - shift-add DAG of one constant-multiplication block
POST /api/models/simulate - bit-exact hardware accuracy of a model at a given q
POST /api/models/report   - structural cost report of one design
"""

import logging

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, ConfigDict, Field

from app.config import settings
from app.models.ann import Dataset
from app.models.dag import BLOCK_KINDS, CmBlockSpec
from app.models.fixed import QuantizedAnn
from app.schemas.files import WeightsFile
from app.services.fixedpoint import model_tnzd, quantize_model
from app.services.inference import hardware_accuracy
from app.services.model_io import dataset_from_rows, model_from_payload
from app.services.reporting import build_report, report_payload
from app.services.shiftadds import EFFORTS, dag_listing, synthesize_block, synthesize_layers

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api", tags=["synthesis"])


class SynthRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str = Field(description=f"one of {', '.join(BLOCK_KINDS)}")
    coefficients: list[list[int]] = Field(min_length=1)
    effort: str = "greedy"
    trials: int = Field(default=100, ge=1, le=100_000)


class SynthResponse(BaseModel):
    kind: str
    dbr_ops: int
    ops: int
    depth: int
    verified: bool
    listing: str


class Sample(BaseModel):
    features: list[float]
    label: int = Field(ge=0)


class SimulateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    model: WeightsFile
    q: int = Field(ge=1, le=32)
    samples: list[Sample] = Field(min_length=1)


class SimulateResponse(BaseModel):
    accuracy: float
    q: int
    tnzd: int


class ReportRequest(SimulateRequest):
    arch: str = "parallel"
    mult_style: str = "behavioral"


def _quantized(body: SimulateRequest) -> tuple[QuantizedAnn, Dataset]:
    model = model_from_payload(body.model.model_dump())
    qa = quantize_model(model, body.q, input_bits=settings.INPUT_BITS)
    data = dataset_from_rows(
        [s.features for s in body.samples],
        [s.label for s in body.samples],
        model.structure.num_outputs,
    )
    if data.num_inputs != model.structure.num_inputs:
        raise ValueError(
            f"samples have {data.num_inputs} features, model expects {model.structure.num_inputs}"
        )
    return qa, data


@router.post("/shiftadds/synth", response_model=SynthResponse)
def synth_block(body: SynthRequest):
    """Optimize one block and return its DAG listing."""
    if body.effort not in EFFORTS:
        raise HTTPException(status_code=422, detail=f"effort must be one of {', '.join(EFFORTS)}")
    try:
        spec = CmBlockSpec.from_rows(body.coefficients, kind=body.kind)
        result = synthesize_block(spec, body.effort, trials=body.trials, seed=settings.SEED)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return SynthResponse(
        kind=spec.kind,
        dbr_ops=result.dbr_ops,
        ops=result.ops,
        depth=result.depth,
        verified=result.verified,
        listing=dag_listing(result.dag),
    )


@router.post("/models/simulate", response_model=SimulateResponse)
def simulate_model(body: SimulateRequest):
    """Quantize at ``q`` and run the integer network over the samples."""
    try:
        qa, data = _quantized(body)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return SimulateResponse(accuracy=hardware_accuracy(qa, data), q=qa.format.q, tnzd=model_tnzd(qa))


@router.post("/models/report")
def report_model(body: ReportRequest):
    """Cost report of the untuned network at ``q``; samples act as the validation set."""
    try:
        qa, data = _quantized(body)
        blocks = synthesize_layers(body.arch, body.mult_style, qa, seed=settings.SEED)
        report = build_report(qa, body.arch, body.mult_style, blocks, data, seed=settings.SEED)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    logger.info("Report served for %s", report.design)
    return report_payload(report)
