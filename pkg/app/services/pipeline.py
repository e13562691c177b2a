"""Stage functions chained by the ``pipeline`` command.

Each stage reads and writes plain files under ``<out_dir>/<design>/`` so a
stage can also be run on its own. Failures surface as ``PipelineError``
carrying the stage name and the original exception.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from app.config import settings
from app.models.ann import AnnModel, Dataset
from app.models.cost import CostReport
from app.models.fixed import QuantizedAnn
from app.services.fixedpoint import model_tnzd
from app.services.hdlgen import (
    FileSet,
    emit_design,
    emit_synth_script,
    emit_testbench,
    write_file_set,
)
from app.services.model_io import load_dataset, load_model, save_quantized, split_validation
from app.services.quantsearch import QSearchResult, find_min_q
from app.services.reporting import build_report, design_name, save_report
from app.services.shiftadds import BlockResult, dag_listing, synthesize_layers
from app.services.tuner import TuneResult, tune

logger = logging.getLogger(__name__)

STAGES = ("quantize", "tune", "synth", "emit", "simulate", "report")

# Exceptions a stage may raise on bad input; anything else is a bug.
STAGE_ERRORS = (ValueError, RuntimeError, OSError)


class PipelineError(RuntimeError):
    """A stage failed."""

    def __init__(self, stage: str, detail: str | BaseException) -> None:
        self.stage = stage
        self.cause = detail if isinstance(detail, BaseException) else None
        super().__init__(str(detail))

    @property
    def kind(self) -> str:
        return type(self.cause).__name__ if self.cause is not None else type(self).__name__

    def one_line(self) -> str:
        detail = " ".join(str(self).split())
        return f"[error] stage={self.stage} kind={self.kind} detail={detail}"


@contextmanager
def stage(name: str) -> Iterator[None]:
    try:
        yield
    except PipelineError:
        raise
    except STAGE_ERRORS as exc:
        raise PipelineError(name, exc) from exc


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def load_inputs(model_path: Path | str, data_path: Path | str) -> tuple[AnnModel, Dataset]:
    model = load_model(model_path)
    data = load_dataset(data_path, model.structure.num_inputs, model.structure.num_outputs)
    return model, data


def quantize(
    model: AnnModel,
    data: Dataset,
    seed: int = settings.SEED,
    max_q: int = settings.MAX_Q,
    validation_fraction: float = settings.VALIDATION_FRACTION,
    input_bits: int = settings.INPUT_BITS,
) -> tuple[QuantizedAnn, QSearchResult, Dataset]:
    """Minimum-q network and the validation split it was chosen on."""
    _, validation = split_validation(data, validation_fraction, seed)
    if len(set(validation.labels.tolist())) < 2:
        logger.warning("Validation set holds a single class; accuracy is not informative")
    qa, result = find_min_q(model, validation, max_q=max_q, input_bits=input_bits)
    qa = qa.with_values(
        *qa.mutable_values(),
        seed=seed,
        validation_fraction=validation_fraction,
        ha_history=result.ha_history,
        q_search_exhausted=result.exhausted,
    )
    return qa, result, validation


def tune_network(qa: QuantizedAnn, validation: Dataset, arch: str) -> TuneResult:
    result = tune(qa, validation, arch)
    qa = result.qa.with_values(
        *result.qa.mutable_values(),
        bha=result.bha,
        tnzd_before_tuning=model_tnzd(qa),
    )
    return TuneResult(
        qa=qa,
        bha=result.bha,
        initial_ha=result.initial_ha,
        commits=result.commits,
        sweeps=result.sweeps,
    )


def synth(
    qa: QuantizedAnn,
    arch: str,
    mult_style: str,
    effort: str = "greedy",
    trials: int = settings.TRIALS,
    seed: int = settings.SEED,
) -> list[list[BlockResult]]:
    return synthesize_layers(arch, mult_style, qa, effort=effort, trials=trials, seed=seed)


def dag_files(blocks: Sequence[Sequence[BlockResult]]) -> FileSet:
    return {
        f"dags/{r.spec.name}.txt": dag_listing(r.dag)
        for layer in blocks
        for r in layer
    }


def testbench_vectors(data: Dataset, count: int) -> Dataset:
    """The first ``count`` samples, in file order."""
    if count < 1:
        raise ValueError(f"testbench vector count must be >= 1, got {count}")
    return data.subset(list(range(min(count, len(data)))))


def emit(
    qa: QuantizedAnn,
    arch: str,
    mult_style: str,
    blocks: Sequence[Sequence[BlockResult]],
    vectors: Dataset,
    clock_period: float = settings.CLOCK_PERIOD,
) -> FileSet:
    """RTL, testbench and synthesis script of one design."""
    design = emit_design(qa, arch, mult_style, blocks=blocks)
    files: FileSet = dict(design)
    files.update(emit_testbench(qa, arch, vectors))
    files.update(emit_synth_script(clock_period=clock_period, design=design))
    return dict(sorted(files.items()))


# ---------------------------------------------------------------------------
# Whole flow
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    model_path: Path
    data_path: Path
    arch: str = "parallel"
    mult_style: str = "behavioral"
    out_dir: Path = settings.OUT_DIR
    seed: int = settings.SEED
    max_q: int = settings.MAX_Q
    validation_fraction: float = settings.VALIDATION_FRACTION
    input_bits: int = settings.INPUT_BITS
    trials: int = settings.TRIALS
    effort: str = "greedy"
    vectors: int = settings.TB_VECTORS
    clock_period: float = settings.CLOCK_PERIOD
    test_data_path: Path | None = None


@dataclass
class PipelineOutcome:
    design_dir: Path
    report: CostReport
    written: list[Path] = field(default_factory=list)


def run_pipeline(config: PipelineConfig) -> PipelineOutcome:
    """quantize -> tune -> synth -> emit -> report, writing one design directory."""
    logger.info("Pipeline seed=%d arch=%s mult_style=%s", config.seed, config.arch, config.mult_style)
    with stage("quantize"):
        model, data = load_inputs(config.model_path, config.data_path)
        design = design_name(model.structure, config.arch, config.mult_style)
        design_dir = Path(config.out_dir) / design
        qa, _, validation = quantize(
            model,
            data,
            seed=config.seed,
            max_q=config.max_q,
            validation_fraction=config.validation_fraction,
            input_bits=config.input_bits,
        )
        written = [save_quantized(qa, design_dir / "quantized.json")]
    with stage("tune"):
        tuned = tune_network(qa, validation, config.arch)
        written.append(save_quantized(tuned.qa, design_dir / "tuned.json"))
    with stage("synth"):
        blocks = synth(
            tuned.qa, config.arch, config.mult_style,
            effort=config.effort, trials=config.trials, seed=config.seed,
        )
        written += write_file_set(dag_files(blocks), design_dir)
    with stage("emit"):
        files = emit(
            tuned.qa, config.arch, config.mult_style, blocks,
            testbench_vectors(validation, config.vectors),
            clock_period=config.clock_period,
        )
        written += write_file_set(files, design_dir)
    with stage("report"):
        test = None
        if config.test_data_path is not None:
            test = load_dataset(
                config.test_data_path, model.structure.num_inputs, model.structure.num_outputs
            )
        report = build_report(
            tuned.qa, config.arch, config.mult_style, blocks, validation,
            seed=config.seed, test=test, model=model, tnzd_before=model_tnzd(qa),
        )
        written.append(save_report(report, design_dir / "report.json"))
    logger.info("Pipeline wrote %d files under %s", len(written), design_dir)
    return PipelineOutcome(design_dir=design_dir, report=report, written=written)
