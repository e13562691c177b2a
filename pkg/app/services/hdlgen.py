"""Verilog generation for the parallel and time-multiplexed datapaths.

A file set maps paths relative to a design directory (``rtl/``, ``tb/``,
``scripts/``) to file contents. Every emitted set passes the structural
re-parse in ``verilog_check`` before it is returned, and testbench
expectations come from ``forward_hw``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from app.config import settings
from app.models.ann import AnnStructure, Dataset
from app.models.cost import Architecture, MultStyle
from app.models.dag import ShiftAddDag, Term
from app.models.fixed import QuantizedAnn
from app.services.adder_graph import ShiftAddError, node_vectors
from app.services.fixedpoint import SLS_UNBOUNDED, smallest_left_shift
from app.services.inference import (
    accumulator_bound,
    cycle_count,
    forward_batch,
    forward_hw,
    input_magnitude,
)
from app.services.model_io import input_codes
from app.services.shiftadds import BlockResult, check_style, layer_blocks, synthesize_layers
from app.services.verilog_check import check_verilog
from app.templating import clog2, sized, templates

logger = logging.getLogger(__name__)

TOP = "ann_top"

FileSet = dict[str, str]


class HdlGenError(RuntimeError):
    """Raised when a design cannot be emitted as well-formed Verilog."""


def _render(template: str, **context) -> str:
    return templates.get_template(template).render(**context)


def top_ports(structure: AnnStructure) -> list[str]:
    return (
        ["clk", "rst", "start"]
        + [f"x{i}" for i in range(structure.num_inputs)]
        + [f"z{i}" for i in range(structure.num_outputs)]
        + ["done"]
    )


def _instance(module: str, name: str, connections: Sequence[tuple[str, str]]) -> str:
    ports = ", ".join(f".{port}({signal})" for port, signal in connections)
    return f"{module} {name} ({ports});"


# ---------------------------------------------------------------------------
# Widths and literals
# ---------------------------------------------------------------------------


def _signed_input(qa: QuantizedAnn, k: int) -> bool:
    return k > 0 and qa.structure.layers[k - 1].activation == "htanh"


def layer_width(qa: QuantizedAnn, k: int, blocks: Sequence[BlockResult] = ()) -> int:
    """Signed working width of layer ``k``: accumulators, shift-add nodes, activation."""
    s = qa.structure
    bits = [accumulator_bound(qa, k, m).bit_length() + 1 for m in range(s.neurons_of(k))]
    x_max = input_magnitude(qa, k)
    for result in blocks:
        for vector in node_vectors(result.dag).values():
            bits.append((sum(abs(c) for c in vector) * x_max).bit_length() + 1)
    # the extra bit keeps a + ONE of the hard sigmoid in range
    return max(max(bits), qa.format.acc_frac_bits + 2) + 1


def _literal(value: int, width: int, what: str) -> int:
    if abs(value) >= 1 << (width - 1):
        raise HdlGenError(f"{what} {value} exceeds the declared {width}-bit signed width")
    return value


def _extend(port: str, signed: bool, ib: int) -> str:
    """Sign- or zero-extend an input code by one bit."""
    if signed:
        return f"{{{port}[{ib - 1}], {port}}}"
    return f"{{1'b0, {port}}}"


def _inputs(qa: QuantizedAnn, k: int) -> list[dict]:
    signed = _signed_input(qa, k)
    ib = qa.format.input_bits
    return [
        {"port": f"x{n}", "ext": _extend(f"x{n}", signed, ib)}
        for n in range(qa.structure.inputs_of(k))
    ]


# ---------------------------------------------------------------------------
# Shift-add DAGs as wires
# ---------------------------------------------------------------------------


def _term_expr(term: Term, names: dict[str, str]) -> str:
    text = names[term.ref]
    if term.shift:
        text = f"({text} <<< {term.shift})"
    return f"-{text}" if term.negate else text


def _dag_wires(dag: ShiftAddDag, prefix: str, inputs: dict[str, str]) -> tuple[list[dict], dict[str, str]]:
    """One ``sa_<prefix>_t<i>`` wire per add/sub node."""
    names = dict(inputs)
    for node in dag.nodes:
        names[node.name] = f"sa_{prefix}_{node.name}"
    wires = []
    for node in dag.nodes:
        op = "+" if node.op == "add" else "-"
        expr = f"{_term_expr(node.left, names)} {op} {_term_expr(node.right, names)}"
        if node.rshift:
            expr = f"({expr}) >>> {node.rshift}"
        wires.append({"name": names[node.name], "expr": expr})
    return wires, names


def _check_blocks(
    arch: Architecture,
    mult_style: MultStyle,
    qa: QuantizedAnn,
    k: int,
    blocks: Sequence[BlockResult],
) -> None:
    expected = layer_blocks(arch, mult_style, qa, k)
    if [r.spec for r in blocks] != expected:
        raise HdlGenError(f"layer {k + 1}: shift-add blocks do not match the network weights")


def _activation_module(qa: QuantizedAnn, k: int, width: int) -> str:
    activation = qa.structure.layers[k].activation
    lo, hi = qa.format.output_range(activation)
    return _render(
        "verilog/act.v.j2",
        name=f"layer{k + 1}_act",
        activation=activation,
        width=width,
        out_bits=qa.format.input_bits,
        one=qa.format.one,
        lo=lo,
        hi=hi,
        q=qa.format.q,
    )


# ---------------------------------------------------------------------------
# Parallel
# ---------------------------------------------------------------------------


def _parallel_layer(
    qa: QuantizedAnn,
    k: int,
    mult_style: MultStyle,
    blocks: Sequence[BlockResult],
    width: int,
) -> str:
    s = qa.structure
    sums: list[str | None] = [None] * s.neurons_of(k)
    wires: list[dict] = []
    if mult_style is MultStyle.BEHAVIORAL:
        for m, row in enumerate(qa.int_weights[k]):
            terms = [
                f"xs{n} * {sized(_literal(w, width, 'weight'), width)}"
                for n, w in enumerate(row)
                if w
            ]
            sums[m] = " + ".join(terms) or None
    else:
        names = {f"x{n + 1}": f"xs{n}" for n in range(s.inputs_of(k))}
        for index, result in enumerate(blocks):
            block_wires, refs = _dag_wires(result.dag, result.spec.name, names)
            wires.extend(block_wires)
            for out, (_, term) in enumerate(result.dag.outputs):
                m = index if mult_style is MultStyle.CAVM else out
                sums[m] = None if term is None else _term_expr(term, refs)
    neurons = []
    for m, b in enumerate(qa.int_biases[k]):
        bias = sized(_literal(b, width, "bias"), width)
        neurons.append({"index": m, "acc": bias if sums[m] is None else f"{sums[m]} + {bias}"})
    return _render(
        "verilog/parallel_layer.v.j2",
        k=k + 1,
        activation=s.layers[k].activation,
        mult_style=mult_style.value,
        ib=qa.format.input_bits,
        width=width,
        inputs=_inputs(qa, k),
        wires=wires,
        neurons=neurons,
        act=_activation_module(qa, k, width),
    )


def _parallel_top(qa: QuantizedAnn) -> str:
    s = qa.structure
    stages = [{"index": 0, "size": s.num_inputs}] + [
        {"index": k + 1, "size": s.neurons_of(k)} for k in range(s.num_layers)
    ]
    instances = [
        _instance(
            f"layer{k + 1}",
            f"u_layer{k + 1}",
            [(f"x{n}", f"r{k}_{n}") for n in range(s.inputs_of(k))]
            + [(f"z{m}", f"c{k + 1}_{m}") for m in range(s.neurons_of(k))],
        )
        for k in range(s.num_layers)
    ]
    return _render(
        "verilog/parallel_top.v.j2",
        top=TOP,
        ib=qa.format.input_bits,
        num_inputs=s.num_inputs,
        num_outputs=s.num_outputs,
        layers=s.num_layers,
        stages=stages,
        instances=instances,
    )


# ---------------------------------------------------------------------------
# One MAC per neuron
# ---------------------------------------------------------------------------


def _narrowed(w: int, sls: int) -> int:
    return (abs(w) >> sls) * (-1 if w < 0 else 1)


def _group_sls(weights: Sequence[int]) -> int:
    sls = smallest_left_shift(weights)
    return 0 if sls == SLS_UNBOUNDED else int(sls)


def _smac_neuron_layer(
    qa: QuantizedAnn,
    k: int,
    mult_style: MultStyle,
    blocks: Sequence[BlockResult],
    width: int,
) -> str:
    neurons: list[dict] = []
    wires: list[dict] = []
    mcm_outputs: list[dict] = []
    mcm = mult_style is MultStyle.MCM
    if mcm:
        products: dict[int, list[tuple[int, str]]] = {m: [] for m in range(qa.structure.neurons_of(k))}
        for result in blocks:
            wires, refs = _dag_wires(result.dag, result.spec.name, {"x1": "xsel"})
            outputs = {}
            for name, term in result.dag.outputs:
                outputs[name] = f"mcm_{name}"
                mcm_outputs.append(
                    {
                        "name": f"mcm_{name}",
                        "expr": sized(0, width) if term is None else _term_expr(term, refs),
                    }
                )
            for tap in result.spec.taps:
                y = f"y{tap.const_index + 1}"
                expr = _term_expr(Term(y, tap.shift, tap.negative), outputs)
                products[tap.neuron].append((tap.input + 1, expr))
        for m, b in enumerate(qa.int_biases[k]):
            neurons.append(
                {"index": m, "bias": _literal(b, width, "bias"), "products": products[m]}
            )
    else:
        for m, (row, b) in enumerate(zip(qa.int_weights[k], qa.int_biases[k])):
            sls = _group_sls(row)
            weights = [
                (n + 1, _literal(_narrowed(w, sls), width, "weight"))
                for n, w in enumerate(row)
                if w
            ]
            neurons.append(
                {"index": m, "bias": _literal(b, width, "bias"), "weights": weights, "sls": sls}
            )
    return _render(
        "verilog/smac_neuron_layer.v.j2",
        k=k + 1,
        mult_style=mult_style.value,
        mcm=mcm,
        ib=qa.format.input_bits,
        width=width,
        inputs=_inputs(qa, k),
        wires=wires,
        mcm_outputs=mcm_outputs,
        neurons=neurons,
        act=_activation_module(qa, k, width),
    )


def _smac_neuron_top(qa: QuantizedAnn) -> str:
    s = qa.structure
    stages = [{"index": k + 1, "size": s.neurons_of(k)} for k in range(s.num_layers)]
    instances = []
    for k in range(s.num_layers):
        enable = "start" if k == 0 else f"done{k}"
        sources = [f"x{n}" if k == 0 else f"h{k}_{n}" for n in range(s.inputs_of(k))]
        instances.append(
            _instance(
                f"layer{k + 1}",
                f"u_layer{k + 1}",
                [("clk", "clk"), ("rst", "rst"), ("en", enable)]
                + [(f"x{n}", src) for n, src in enumerate(sources)]
                + [(f"z{m}", f"h{k + 1}_{m}") for m in range(s.neurons_of(k))]
                + [("done", f"done{k + 1}")],
            )
        )
    return _render(
        "verilog/smac_neuron_top.v.j2",
        top=TOP,
        ib=qa.format.input_bits,
        num_inputs=s.num_inputs,
        num_outputs=s.num_outputs,
        layers=s.num_layers,
        stages=stages,
        instances=instances,
    )


# ---------------------------------------------------------------------------
# One MAC for the whole network
# ---------------------------------------------------------------------------


def _smac_ann_top(qa: QuantizedAnn, width: int) -> str:
    s = qa.structure
    ks = range(s.num_layers)
    weights = qa.all_weights()
    biases = qa.all_biases()
    sls = _group_sls(weights)
    max_inputs = max(s.inputs_of(k) for k in ks)
    max_neurons = max(s.neurons_of(k) for k in ks)
    mask = "".join("1" if _signed_input(qa, k) else "0" for k in reversed(ks))
    return _render(
        "verilog/smac_ann_top.v.j2",
        top=TOP,
        ib=qa.format.input_bits,
        width=width,
        num_inputs=s.num_inputs,
        num_outputs=s.num_outputs,
        layers=[
            {"k": k + 1, "ic_last": s.inputs_of(k) + 1, "nc_last": s.neurons_of(k) - 1}
            for k in ks
        ],
        signed_mask=f"{s.num_layers}'b{mask}",
        sls=sls,
        weights=[_literal(_narrowed(w, sls), width, "weight") for w in weights],
        biases=[_literal(b, width, "bias") for b in biases],
        hin=max_inputs,
        hout=max_neurons,
        copy=min(max_inputs, max_neurons),
        lc_bits=clog2(s.num_layers),
        nc_bits=clog2(max_neurons),
        ic_bits=clog2(max_inputs + 2),
        wa_bits=clog2(len(weights) + 1),
        ba_bits=clog2(len(biases) + 1),
        acts=[_activation_module(qa, k, width) for k in ks],
    )


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def _checked(files: FileSet, externals: dict[str, list[str]] | None = None) -> FileSet:
    problems = check_verilog(files, externals=externals)
    if problems:
        shown = "; ".join(problems[:5])
        raise HdlGenError(f"emitted Verilog failed the structural check ({len(problems)}): {shown}")
    return dict(sorted(files.items()))


def emit_design(
    qa: QuantizedAnn,
    arch: Architecture | str,
    mult_style: MultStyle | str = MultStyle.BEHAVIORAL,
    blocks: Sequence[Sequence[BlockResult]] | None = None,
    effort: str = "greedy",
) -> FileSet:
    """RTL of the top module and every layer module.

    ``blocks`` are the shift-add results per layer from ``synthesize_layers``;
    they are synthesized here when omitted.
    """
    try:
        arch, mult_style = check_style(arch, mult_style)
    except ValueError as exc:
        raise HdlGenError(str(exc)) from exc
    s = qa.structure
    if blocks is None:
        try:
            blocks = synthesize_layers(arch, mult_style, qa, effort=effort)
        except ShiftAddError as exc:
            raise HdlGenError(str(exc)) from exc
    if len(blocks) != s.num_layers:
        raise HdlGenError(f"expected shift-add blocks for {s.num_layers} layers, got {len(blocks)}")
    for k in range(s.num_layers):
        _check_blocks(arch, mult_style, qa, k, blocks[k])
    widths = [layer_width(qa, k, blocks[k]) for k in range(s.num_layers)]

    files: FileSet = {}
    if arch is Architecture.PARALLEL:
        for k in range(s.num_layers):
            files[f"rtl/layer{k + 1}.v"] = _parallel_layer(qa, k, mult_style, blocks[k], widths[k])
        files[f"rtl/{TOP}.v"] = _parallel_top(qa)
    elif arch is Architecture.SMAC_NEURON:
        for k in range(s.num_layers):
            files[f"rtl/layer{k + 1}.v"] = _smac_neuron_layer(qa, k, mult_style, blocks[k], widths[k])
        files[f"rtl/{TOP}.v"] = _smac_neuron_top(qa)
    else:
        files[f"rtl/{TOP}.v"] = _smac_ann_top(qa, max(widths))
    files = _checked(files)
    logger.info(
        "Emitted %s/%s RTL for %s: %d files, widths %s",
        arch.value, mult_style.value, s.label(), len(files), widths,
    )
    return files


def emit_testbench(
    qa: QuantizedAnn,
    arch: Architecture | str,
    vectors: Dataset | np.ndarray | Sequence[Sequence[int]],
) -> FileSet:
    """Self-checking testbench with golden outputs from ``forward_hw``.

    A ``Dataset`` is converted to input codes; arrays are taken as codes.
    """
    try:
        arch = Architecture(arch)
    except ValueError as exc:
        raise HdlGenError(str(exc)) from exc
    s = qa.structure
    if isinstance(vectors, Dataset):
        codes = input_codes(vectors, qa.format)
    else:
        codes = np.asarray(vectors, dtype=np.int64)
    if codes.size == 0:
        raise HdlGenError("testbench needs at least one input vector")
    if codes.ndim != 2 or codes.shape[1] != s.num_inputs:
        raise HdlGenError(f"test vectors must have {s.num_inputs} input codes each")

    batch = forward_batch(qa, codes)
    entries = []
    for i, row in enumerate(codes):
        x = [int(v) for v in row]
        predicted, outputs = forward_hw(qa, x)
        golden = outputs[-1]
        if golden != [int(v) for v in batch[i]]:
            raise HdlGenError(f"vector {i}: scalar and batch inference disagree")
        entries.append({"index": i, "label": predicted, "inputs": x, "outputs": golden})

    ports = top_ports(s)
    text = _render(
        "verilog/testbench.v.j2",
        top=TOP,
        arch=arch.value,
        ib=qa.format.input_bits,
        cycles=cycle_count(arch, s),
        num_inputs=s.num_inputs,
        num_outputs=s.num_outputs,
        vectors=entries,
        dut=_instance(TOP, "dut", [(p, p) for p in ports]),
    )
    return _checked({f"tb/{TOP}_tb.v": text}, externals={TOP: ports})


def emit_synth_script(
    top: str = TOP,
    clock_period: float | None = None,
    design: FileSet | None = None,
) -> FileSet:
    """Tool-agnostic synthesis script reading the design's RTL files."""
    period = settings.CLOCK_PERIOD if clock_period is None else float(clock_period)
    if period <= 0:
        raise HdlGenError(f"clock period must be positive, got {period}")
    sources = sorted(Path(p).name for p in (design or {}) if p.startswith("rtl/"))
    text = _render(
        "scripts/synth.tcl.j2",
        top=top,
        clock_period=period,
        sources=sources,
    )
    return {"scripts/synth.tcl": text}


def write_file_set(files: FileSet, root: Path | str) -> list[Path]:
    root = Path(root)
    written = []
    for relative, text in sorted(files.items()):
        path = root / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        written.append(path)
    logger.debug("Wrote %d files under %s", len(written), root)
    return written
