"""Structural cost report of a design: tnzd, adders, cycles, widths, accuracy."""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import asdict
from pathlib import Path

from app.models.ann import AnnModel, AnnStructure, Dataset
from app.models.cost import Architecture, CostReport, MacSizes, MultStyle
from app.models.fixed import QuantizedAnn
from app.schemas.files import ReportFile
from app.services.fixedpoint import model_tnzd
from app.services.inference import cycle_count, hardware_accuracy, mac_sizes, software_accuracy
from app.services.shiftadds import BlockResult, check_style

logger = logging.getLogger(__name__)

INTERPRETATIONS = (
    "weights and biases are rounded with the ceiling, negative values included",
    "biases are quantized at the accumulator scale (input_frac_bits + q)",
    "hard activation breakpoints sit at -1.0, 0 and +1.0; hsig is (y + 1) / 2 clamped to [0, 1]",
    "htanh layer outputs are signed codes saturating at the input code range",
    "requantization is an arithmetic right shift by q bits",
    "parallel latency counts the input register (layers + 1 cycles)",
)


def design_name(structure: AnnStructure, arch: Architecture | str, mult_style: MultStyle | str) -> str:
    return f"{structure.label()}_{Architecture(arch).value}_{MultStyle(mult_style).value}"


def accumulation_adders(arch: Architecture | str, qa: QuantizedAnn) -> int:
    """Adders of the behavioral datapath (one per product in a parallel inner product)."""
    arch = Architecture(arch)
    if arch is Architecture.PARALLEL:
        return sum(1 for w in qa.all_weights() if w)
    if arch is Architecture.SMAC_NEURON:
        return sum(qa.structure.neurons_of(k) for k in range(qa.structure.num_layers))
    return 1


def build_report(
    qa: QuantizedAnn,
    arch: Architecture | str,
    mult_style: MultStyle | str,
    blocks: Sequence[Sequence[BlockResult]],
    validation: Dataset,
    *,
    seed: int = 0,
    test: Dataset | None = None,
    model: AnnModel | None = None,
    tnzd_before: int | None = None,
) -> CostReport:
    arch, mult_style = check_style(arch, mult_style)
    results = [r for layer in blocks for r in layer]
    sizes, mux = mac_sizes(arch, qa)
    if mult_style is MultStyle.BEHAVIORAL:
        adders = accumulation_adders(arch, qa)
    else:
        adders = sum(r.ops for r in results)
    report = CostReport(
        design=design_name(qa.structure, arch, mult_style),
        structure=qa.structure.label(),
        arch=arch.value,
        mult_style=mult_style.value,
        q=qa.format.q,
        seed=seed,
        tnzd=model_tnzd(qa),
        cycles=cycle_count(arch, qa.structure),
        adders=adders,
        adder_depth=max((r.depth for r in results), default=0),
        hardware_accuracy=hardware_accuracy(qa, validation),
        blocks=sizes,
        mux_sizes=mux,
        layer_weight_bits=list(qa.layer_weight_bits),
        tnzd_before_tuning=tnzd_before,
        test_hardware_accuracy=None if test is None else hardware_accuracy(qa, test),
        software_accuracy=None if model is None else software_accuracy(model, validation),
        block_ops={r.spec.name: r.ops for r in results},
        interpretations=list(INTERPRETATIONS),
    )
    logger.info(
        "Report %s: tnzd=%d adders=%d cycles=%d ha=%.4f",
        report.design, report.tnzd, report.adders, report.cycles, report.hardware_accuracy,
    )
    return report


def report_payload(report: CostReport) -> dict:
    return ReportFile.model_validate(asdict(report)).model_dump()


def report_from_payload(payload: dict) -> CostReport:
    doc = ReportFile.model_validate(payload)
    data = doc.model_dump()
    data["blocks"] = [MacSizes(**b) for b in data["blocks"]]
    return CostReport(**data)


def save_report(report: CostReport, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report_payload(report), indent=2) + "\n", encoding="utf-8")
    return path


def format_report(report: CostReport) -> str:
    """Human-readable table printed next to the JSON report."""
    rows = [
        ("design", report.design),
        ("q", report.q),
        ("tnzd", report.tnzd if report.tnzd_before_tuning is None
         else f"{report.tnzd} (before tuning {report.tnzd_before_tuning})"),
        ("adders", report.adders),
        ("adder depth", report.adder_depth),
        ("cycles", report.cycles),
        ("hardware accuracy", f"{report.hardware_accuracy:.4f}"),
    ]
    if report.test_hardware_accuracy is not None:
        rows.append(("test hardware accuracy", f"{report.test_hardware_accuracy:.4f}"))
    if report.software_accuracy is not None:
        rows.append(("software accuracy", f"{report.software_accuracy:.4f}"))
    rows.append(("layer weight bits", " ".join(str(b) for b in report.layer_weight_bits)))
    width = max(len(name) for name, _ in rows)
    lines = [f"{name.ljust(width)}  {value}" for name, value in rows]
    lines.append("")
    lines.append(f"{'block'.ljust(12)} {'mult':>9} {'adder':>6} {'reg':>5} {'sls':>4}")
    for b in report.blocks:
        mult = f"{b.input_bits}x{b.weight_bits}"
        sls = "-" if b.sls is None else str(b.sls)
        lines.append(f"{b.block.ljust(12)} {mult:>9} {b.adder_bits:>6} {b.register_bits:>5} {sls:>4}")
    return "\n".join(lines) + "\n"
