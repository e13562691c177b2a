"""Command line for the ANN-to-hardware flow.

Usage:
    annsynth pipeline --model net.json --data train.csv --arch smac_neuron --mult-style mcm
    annsynth quantize --model net.json --data train.csv --seed 0
    annsynth report --quantized out/16-10/quantized.json --arch parallel --mult-style cmvm

Every subcommand prints ``[ok] ...`` lines on success. On failure it prints a
single ``[error] stage=<stage> kind=<exception> detail=<message>`` line and
exits with status 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import NoReturn

import numpy as np

from app.config import settings
from app.models.ann import Dataset
from app.models.cost import Architecture, MultStyle
from app.models.fixed import QuantizedAnn
from app.services.fixedpoint import model_tnzd, quantize_model
from app.services.hdlgen import write_file_set
from app.services.inference import hardware_accuracy
from app.services.model_io import (
    dataset_from_rows,
    load_dataset,
    load_model,
    load_quantized,
    save_quantized,
    split_validation,
)
from app.services.pipeline import (
    PipelineConfig,
    PipelineError,
    dag_files,
    emit,
    load_inputs,
    quantize,
    run_pipeline,
    stage,
    synth,
    testbench_vectors,
    tune_network,
)
from app.services.reporting import build_report, design_name, format_report, report_payload, save_report
from app.services.shiftadds import EFFORTS, summarize_results

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _validation(args: argparse.Namespace, qa: QuantizedAnn) -> Dataset:
    """Seeded validation split of ``--data``; an empty set when no data is given."""
    s = qa.structure
    if args.data is None:
        return dataset_from_rows(np.zeros((0, s.num_inputs)), [], s.num_outputs)
    data = load_dataset(args.data, s.num_inputs, s.num_outputs)
    _, validation = split_validation(data, args.validation_fraction, args.seed)
    return validation


def _design_dir(args: argparse.Namespace, qa: QuantizedAnn) -> Path:
    return Path(args.out_dir) / design_name(qa.structure, args.arch, args.mult_style)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_quantize(args: argparse.Namespace) -> int:
    with stage("quantize"):
        model, data = load_inputs(args.model, args.data)
        qa, result, _ = quantize(
            model,
            data,
            seed=args.seed,
            max_q=args.max_q,
            validation_fraction=args.validation_fraction,
            input_bits=args.input_bits,
        )
        path = save_quantized(qa, Path(args.out_dir) / model.structure.label() / "quantized.json")
    suffix = " (max q reached)" if result.exhausted else ""
    print(f"[ok] q={result.q} ha={result.hardware_accuracy:.4f}{suffix}")
    print(f"[ok] wrote {path}")
    return 0


def cmd_tune(args: argparse.Namespace) -> int:
    with stage("tune"):
        qa = load_quantized(args.quantized)
        validation = _validation(args, qa)
        result = tune_network(qa, validation, args.arch)
        path = save_quantized(
            result.qa, Path(args.out_dir) / qa.structure.label() / f"tuned_{args.arch}.json"
        )
    print(f"[ok] {args.arch}: bha={result.bha:.4f} (initial {result.initial_ha:.4f}), {result.commits} commits")
    print(f"[ok] tnzd {model_tnzd(qa)} -> {model_tnzd(result.qa)}")
    print(f"[ok] wrote {path}")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    with stage("synth"):
        qa = load_quantized(args.quantized)
        blocks = synth(qa, args.arch, args.mult_style, args.effort, args.trials, args.seed)
        written = write_file_set(dag_files(blocks), _design_dir(args, qa))
    for row in summarize_results([r for layer in blocks for r in layer]):
        print(f"[ok] {row['block']}: {row['kind']} ops={row['ops']} dbr={row['dbr_ops']} depth={row['depth']}")
    print(f"[ok] wrote {len(written)} DAG listings")
    return 0


def cmd_emit(args: argparse.Namespace) -> int:
    with stage("emit"):
        qa = load_quantized(args.quantized)
        validation = _validation(args, qa)
        if len(validation) == 0:
            raise PipelineError("emit", "--data is required for testbench vectors")
        blocks = synth(qa, args.arch, args.mult_style, args.effort, args.trials, args.seed)
        files = emit(
            qa, args.arch, args.mult_style, blocks,
            testbench_vectors(validation, args.vectors),
            clock_period=args.clock_period,
        )
        written = write_file_set(files, _design_dir(args, qa))
    print(f"[ok] wrote {len(written)} files under {_design_dir(args, qa)}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    with stage("simulate"):
        if args.quantized is not None:
            qa = load_quantized(args.quantized)
        elif args.model is not None and args.q is not None:
            qa = quantize_model(load_model(args.model), args.q, input_bits=args.input_bits)
        else:
            raise PipelineError("simulate", "give --quantized, or --model together with --q")
        data = load_dataset(args.data, qa.structure.num_inputs, qa.structure.num_outputs)
        accuracy = hardware_accuracy(qa, data)
    print(f"[ok] hardware_accuracy={accuracy:.4f} samples={len(data)} q={qa.format.q}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    with stage("report"):
        qa = load_quantized(args.quantized)
        validation = _validation(args, qa)
        test = None
        if args.test_data is not None:
            test = load_dataset(args.test_data, qa.structure.num_inputs, qa.structure.num_outputs)
        model = load_model(args.model) if args.model is not None else None
        blocks = synth(qa, args.arch, args.mult_style, args.effort, args.trials, args.seed)
        tnzd_before = qa.meta.get("tnzd_before_tuning")
        report = build_report(
            qa, args.arch, args.mult_style, blocks, validation,
            seed=args.seed, test=test, model=model, tnzd_before=tnzd_before,
        )
        path = save_report(report, _design_dir(args, qa) / "report.json")
    print(json.dumps(report_payload(report), indent=2))
    print(format_report(report), end="")
    print(f"[ok] adders={report.adders} cycles={report.cycles} tnzd={report.tnzd}")
    print(f"[ok] wrote {path}")
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    config = PipelineConfig(
        model_path=Path(args.model),
        data_path=Path(args.data),
        arch=args.arch,
        mult_style=args.mult_style,
        out_dir=Path(args.out_dir),
        seed=args.seed,
        max_q=args.max_q,
        validation_fraction=args.validation_fraction,
        input_bits=args.input_bits,
        trials=args.trials,
        effort=args.effort,
        vectors=args.vectors,
        clock_period=args.clock_period,
        test_data_path=None if args.test_data is None else Path(args.test_data),
    )
    outcome = run_pipeline(config)
    report = outcome.report
    print(format_report(report), end="")
    print(f"[ok] q={report.q} tnzd={report.tnzd} adders={report.adders} cycles={report.cycles}")
    print(f"[ok] wrote {len(outcome.written)} files under {outcome.design_dir}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class UsageError(ValueError):
    """Bad command-line arguments."""


class CliParser(argparse.ArgumentParser):
    """Reports usage errors as a single ``[error]`` line instead of exiting."""

    def error(self, message: str) -> NoReturn:
        command = self.prog.removeprefix("annsynth").strip() or "args"
        raise PipelineError(command, UsageError(message))


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=settings.SEED, help="validation split seed")
    parser.add_argument("--out-dir", default=str(settings.OUT_DIR), help="output root directory")


def _split(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--validation-fraction",
        type=float,
        default=settings.VALIDATION_FRACTION,
        help="share of --data held out for validation",
    )


def _design(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--arch", choices=[a.value for a in Architecture], default="parallel")
    parser.add_argument("--mult-style", choices=[m.value for m in MultStyle], default="behavioral")
    parser.add_argument("--effort", choices=EFFORTS, default="greedy")
    parser.add_argument(
        "--trials", type=int, default=settings.TRIALS, help="random equivalence checks per DAG"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog="annsynth",
        description="Post-training quantization and HDL generation for feedforward ANNs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantize", help="find the minimum quantization value")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--max-q", type=int, default=settings.MAX_Q)
    p.add_argument("--input-bits", type=int, default=settings.INPUT_BITS)
    _common(p)
    _split(p)
    p.set_defaults(handler=cmd_quantize)

    p = sub.add_parser("tune", help="hardware-aware tuning of a quantized network")
    p.add_argument("--quantized", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--arch", choices=[a.value for a in Architecture], default="parallel")
    _common(p)
    _split(p)
    p.set_defaults(handler=cmd_tune)

    p = sub.add_parser("synth", help="shift-add DAGs of the constant multiplications")
    p.add_argument("--quantized", required=True)
    _design(p)
    _common(p)
    p.set_defaults(handler=cmd_synth)

    p = sub.add_parser("emit", help="RTL, testbench and synthesis script")
    p.add_argument("--quantized", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--vectors", type=int, default=settings.TB_VECTORS)
    p.add_argument("--clock-period", type=float, default=settings.CLOCK_PERIOD)
    _design(p)
    _common(p)
    _split(p)
    p.set_defaults(handler=cmd_emit)

    p = sub.add_parser("simulate", help="bit-exact hardware accuracy on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--quantized")
    p.add_argument("--model")
    p.add_argument("--q", type=int)
    p.add_argument("--input-bits", type=int, default=settings.INPUT_BITS)
    _common(p)
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("report", help="structural cost report")
    p.add_argument("--quantized", required=True)
    p.add_argument("--data")
    p.add_argument("--test-data")
    p.add_argument("--model", help="floating-point model for the software accuracy")
    _design(p)
    _common(p)
    _split(p)
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("pipeline", help="quantize, tune, synth, emit and report")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--test-data")
    p.add_argument("--max-q", type=int, default=settings.MAX_Q)
    p.add_argument("--input-bits", type=int, default=settings.INPUT_BITS)
    p.add_argument("--vectors", type=int, default=settings.TB_VECTORS)
    p.add_argument("--clock-period", type=float, default=settings.CLOCK_PERIOD)
    _design(p)
    _common(p)
    _split(p)
    p.set_defaults(handler=cmd_pipeline)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """CLI entrypoint."""
    try:
        args = build_parser().parse_args(argv)
    except PipelineError as exc:
        print(exc.one_line())
        return 1
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL, logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    logger.info("%s: seed=%d", args.command, args.seed)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except PipelineError as exc:
        print(exc.one_line())
        return 1


if __name__ == "__main__":
    raise SystemExit(main(sys.argv[1:]))
