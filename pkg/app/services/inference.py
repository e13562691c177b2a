"""Bit-exact integer inference and the per-architecture cost model.

``forward_hw`` is the hardware-accuracy oracle: every tuner decision and every
testbench expectation is computed with it.
"""

from __future__ import annotations

import logging

import numpy as np

from app.models.ann import AnnModel, AnnStructure, Dataset
from app.models.cost import Architecture, MacSizes
from app.models.fixed import FixedFormat, QuantizedAnn
from app.services.fixedpoint import SLS_UNBOUNDED, magnitude_bits, smallest_left_shift
from app.services.model_io import input_codes

logger = logging.getLogger(__name__)

# int64 accumulation is exact while every accumulator bound stays below 2^62.
_INT64_SAFE_BITS = 62


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


def activation_value(name: str, y: int, fmt: FixedFormat) -> int:
    """Hard activation at accumulator scale (before requantization)."""
    one = fmt.one
    if name == "relu":
        return max(0, y)
    if name == "lin":
        return y
    if name == "satlin":
        return min(max(y, 0), one)
    if name == "htanh":
        return min(max(y, -one), one)
    if name == "hsig":
        return min(max((y + one) >> 1, 0), one)
    raise ValueError(f"unknown activation {name!r}")


def activate(name: str, y: int, fmt: FixedFormat) -> int:
    """Activation followed by requantization to the layer output code."""
    lo, hi = fmt.output_range(name)
    return min(max(activation_value(name, y, fmt) >> fmt.q, lo), hi)


def _clamp(a: np.ndarray, lo: int, hi: int) -> np.ndarray:
    # ufunc pair works for int64 and object (big-int) arrays alike
    return np.minimum(np.maximum(a, lo), hi)


def _activate_array(name: str, y: np.ndarray, fmt: FixedFormat) -> np.ndarray:
    one = fmt.one
    if name == "relu":
        a = np.maximum(y, 0)
    elif name == "lin":
        a = y
    elif name == "satlin":
        a = _clamp(y, 0, one)
    elif name == "htanh":
        a = _clamp(y, -one, one)
    elif name == "hsig":
        a = _clamp((y + one) >> 1, 0, one)
    else:
        raise ValueError(f"unknown activation {name!r}")
    lo, hi = fmt.output_range(name)
    return _clamp(a >> fmt.q, lo, hi).astype(np.int64)


def input_magnitude(qa: QuantizedAnn, k: int) -> int:
    """Largest |code| feeding layer ``k``."""
    signed = k > 0 and qa.structure.layers[k - 1].activation == "htanh"
    return qa.format.input_magnitude(signed)


def accumulator_bound(qa: QuantizedAnn, k: int, m: int) -> int:
    """Largest |y + b| neuron ``m`` of layer ``k`` can produce."""
    x_max = input_magnitude(qa, k)
    return sum(abs(w) for w in qa.int_weights[k][m]) * x_max + abs(qa.int_biases[k][m])


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def forward_hw(qa: QuantizedAnn, x: list[int]) -> tuple[int, list[list[int]]]:
    """Integer forward pass of one input code vector.

    Returns the predicted class (argmax, lowest index on ties) and the output
    codes of every layer.
    """
    if len(x) != qa.structure.num_inputs:
        raise ValueError(f"expected {qa.structure.num_inputs} inputs, got {len(x)}")
    values = [int(v) for v in x]
    outputs: list[list[int]] = []
    for k, layer in enumerate(qa.structure.layers):
        values = [
            activate(layer.activation, sum(w * v for w, v in zip(row, values)) + b, qa.format)
            for row, b in zip(qa.int_weights[k], qa.int_biases[k])
        ]
        outputs.append(values)
    final = outputs[-1]
    return final.index(max(final)), outputs


def forward_layer(
    fmt: FixedFormat,
    activation: str,
    values: np.ndarray,
    weights: list[list[int]] | tuple,
    biases: list[int] | tuple,
    x_max: int,
) -> np.ndarray:
    """One layer over a batch: integer inner products, activation, requantization."""
    bound = max(
        (sum(abs(w) for w in row) * x_max + abs(b) for row, b in zip(weights, biases)),
        default=0,
    )
    dtype = object if bound.bit_length() >= _INT64_SAFE_BITS else np.int64
    w = np.array(weights, dtype=dtype)
    b = np.array(biases, dtype=dtype)
    acc = values.astype(dtype) @ w.T + b
    return _activate_array(activation, acc, fmt)


def forward_batch(qa: QuantizedAnn, codes: np.ndarray) -> np.ndarray:
    """Final-layer output codes for an N x p matrix of input codes."""
    values = np.asarray(codes, dtype=np.int64)
    for k, layer in enumerate(qa.structure.layers):
        values = forward_layer(
            qa.format,
            layer.activation,
            values,
            qa.int_weights[k],
            qa.int_biases[k],
            input_magnitude(qa, k),
        )
    return values


def predict_batch(qa: QuantizedAnn, codes: np.ndarray) -> np.ndarray:
    outputs = forward_batch(qa, codes)
    if outputs.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.argmax(outputs, axis=1)


def hardware_accuracy(qa: QuantizedAnn, data: Dataset) -> float:
    """Fraction of samples whose integer-inference class matches the label."""
    if len(data) == 0:
        logger.warning("Hardware accuracy requested on an empty dataset")
        return 0.0
    predictions = predict_batch(qa, input_codes(data, qa.format))
    return float(np.mean(predictions == data.labels))


def _float_activation(name: str, y: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(y, 0.0)
    if name == "lin":
        return y
    if name == "satlin":
        return np.clip(y, 0.0, 1.0)
    if name == "htanh":
        return np.clip(y, -1.0, 1.0)
    if name == "hsig":
        return np.clip((y + 1.0) / 2.0, 0.0, 1.0)
    raise ValueError(f"unknown activation {name!r}")


def forward_float(model: AnnModel, x: np.ndarray) -> np.ndarray:
    """Real-valued reference inference with the hard activations.

    ``x`` may be a single vector or an N x p matrix; the output has the same rank.
    """
    values = np.asarray(x, dtype=np.float64)
    for k, layer in enumerate(model.structure.layers):
        w = np.asarray(model.weights[k], dtype=np.float64)
        b = np.asarray(model.biases[k], dtype=np.float64)
        values = _float_activation(layer.activation, values @ w.T + b)
    return values


def software_accuracy(model: AnnModel, data: Dataset) -> float:
    if len(data) == 0:
        return 0.0
    predictions = np.argmax(forward_float(model, data.features), axis=1)
    return float(np.mean(predictions == data.labels))


# ---------------------------------------------------------------------------
# Cost model
# ---------------------------------------------------------------------------


def cycle_count(arch: Architecture | str, structure: AnnStructure) -> int:
    """Clock cycles from start to a valid output for one input vector."""
    arch = Architecture(arch)
    ks = range(structure.num_layers)
    if arch is Architecture.PARALLEL:
        return structure.num_layers + 1
    if arch is Architecture.SMAC_NEURON:
        return sum(structure.inputs_of(k) + 1 for k in ks)
    return sum((structure.inputs_of(k) + 2) * structure.neurons_of(k) for k in ks)


def _block_sizes(
    qa: QuantizedAnn,
    name: str,
    cells: list[tuple[int, int]],
    narrow: bool,
) -> MacSizes:
    """Sizes of a block covering the (layer, neuron) ``cells``."""
    weights = [w for k, m in cells for w in qa.int_weights[k][m]]
    sls = smallest_left_shift(weights) if narrow else None
    if sls == SLS_UNBOUNDED:
        weight_bits = 0
        sls = None
    elif sls:
        weight_bits = max(magnitude_bits(abs(w) >> sls) for w in weights)
    else:
        weight_bits = max((magnitude_bits(w) for w in weights), default=0)
    register_bits = max(accumulator_bound(qa, k, m).bit_length() for k, m in cells) + 1
    return MacSizes(
        block=name,
        input_bits=qa.format.input_bits,
        weight_bits=weight_bits,
        adder_bits=register_bits,
        register_bits=register_bits,
        sls=sls,
    )


def mac_sizes(
    arch: Architecture | str,
    qa: QuantizedAnn,
) -> tuple[list[MacSizes], dict[str, int]]:
    """Datapath sizes per block and multiplexer input counts.

    Parallel and smac_neuron designs have one block per neuron; smac_ann has a
    single global MAC. Time-multiplexed blocks multiply by ``|w| >> sls`` and
    shift the product back, so their weight operand is narrowed by the sls.
    """
    arch = Architecture(arch)
    s = qa.structure
    blocks: list[MacSizes] = []
    mux: dict[str, int] = {}
    if arch is Architecture.SMAC_ANN:
        cells = [(k, m) for k in range(s.num_layers) for m in range(s.neurons_of(k))]
        blocks.append(_block_sizes(qa, "mac", cells, narrow=True))
        mux["input"] = max(s.inputs_of(k) for k in range(s.num_layers))
        mux["weight"] = sum(s.inputs_of(k) * s.neurons_of(k) for k in range(s.num_layers))
        mux["bias"] = sum(s.neurons_of(k) for k in range(s.num_layers))
        return blocks, mux
    narrow = arch is Architecture.SMAC_NEURON
    for k in range(s.num_layers):
        for m in range(s.neurons_of(k)):
            blocks.append(_block_sizes(qa, f"l{k + 1}_n{m}", [(k, m)], narrow=narrow))
        if narrow:
            mux[f"l{k + 1}_input"] = s.inputs_of(k)
            mux[f"l{k + 1}_weight"] = s.inputs_of(k)
    return blocks, mux
