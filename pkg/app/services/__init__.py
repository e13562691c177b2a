"""Service layer - one module per pipeline stage."""

from app.services.hdlgen import HdlGenError, emit_design, emit_synth_script, emit_testbench
from app.services.model_io import DatasetError, ModelFormatError, ShapeMismatchError
from app.services.pipeline import PipelineConfig, PipelineError, run_pipeline
from app.services.shiftadds import SearchEffortExceeded, ShiftAddError

__all__ = [
    "DatasetError",
    "HdlGenError",
    "ModelFormatError",
    "PipelineConfig",
    "PipelineError",
    "SearchEffortExceeded",
    "ShapeMismatchError",
    "ShiftAddError",
    "emit_design",
    "emit_synth_script",
    "emit_testbench",
    "run_pipeline",
]
