"""Tests for integer inference and the cycle/size cost model."""

import numpy as np
import pytest

from app.models.ann import AnnModel, AnnStructure
from app.models.cost import Architecture
from app.models.fixed import FixedFormat, QuantizedAnn
from app.services.fixedpoint import quantize_model
from app.services.inference import (
    activate,
    cycle_count,
    forward_batch,
    forward_float,
    forward_hw,
    hardware_accuracy,
    mac_sizes,
    predict_batch,
    software_accuracy,
)
from app.services.model_io import dataset_from_rows, input_codes
from tests.conftest import DIGIT_STRUCTURES, random_model


def _layer(weights: list[list[int]], biases: list[int], q: int = 4, activation: str = "lin") -> QuantizedAnn:
    structure = AnnStructure.from_label(f"{len(weights[0])}-{len(weights)}", activations=[activation])
    return QuantizedAnn(
        structure=structure,
        format=FixedFormat(q=q),
        int_weights=(tuple(tuple(row) for row in weights),),
        int_biases=(tuple(biases),),
    )


# ---------------------------------------------------------------------------
# Activations
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    ("name", "y", "expected"),
    [
        ("hsig", 0, 128),
        ("hsig", 1 << 12, 255),
        ("hsig", -(1 << 13), 0),
        ("htanh", 1 << 12, 127),
        ("htanh", -10_000, -128),
        ("htanh", -160, -10),
        ("relu", -5, 0),
        ("relu", 160, 10),
        ("satlin", 5000, 255),
        ("lin", 224, 14),
        ("lin", -32, 0),
    ],
)
def test_activate_at_q4(name, y, expected):
    assert activate(name, y, FixedFormat(q=4)) == expected


@pytest.mark.parametrize("name", ["hsig", "htanh", "lin", "relu", "satlin"])
@pytest.mark.parametrize("q", [1, 4, 8])
def test_activation_is_monotone_and_saturates(name, q):
    fmt = FixedFormat(q=q)
    span = 4 * fmt.one
    ys = [*range(-span, span, max(1, span // 2000)), span]
    codes = [activate(name, y, fmt) for y in ys]
    assert all(a <= b for a, b in zip(codes, codes[1:]))
    assert (codes[0], codes[-1]) == fmt.output_range(name)


def test_activate_rejects_unknown_name():
    with pytest.raises(ValueError):
        activate("softmax", 0, FixedFormat(q=4))


# ---------------------------------------------------------------------------
# Forward passes
# ---------------------------------------------------------------------------


def test_forward_hw_single_neuron():
    qa = _layer([[11, 3]], [0])
    predicted, outputs = forward_hw(qa, [16, 16])
    assert outputs == [[14]]
    assert predicted == 0


def test_forward_hw_ties_pick_the_lowest_index():
    qa = _layer([[1, 0], [0, 1]], [0, 0])
    predicted, outputs = forward_hw(qa, [32, 32])
    assert outputs == [[2, 2]]
    assert predicted == 0


def test_forward_hw_rejects_wrong_input_width(small_qa):
    with pytest.raises(ValueError):
        forward_hw(small_qa, [0, 0])


def test_forward_batch_matches_forward_hw(small_qa, small_data):
    codes = input_codes(small_data, small_qa.format)
    batch = forward_batch(small_qa, codes)
    for row, out in zip(codes, batch):
        _, layers = forward_hw(small_qa, row.tolist())
        assert layers[-1] == out.tolist()


def test_forward_batch_stays_exact_beyond_int64():
    qa = _layer([[1 << 60, -(1 << 60)], [1 << 60, 1]], [0, 0], q=1)
    codes = np.array([[255, 254], [3, 0]])
    batch = forward_batch(qa, codes)
    for row, out in zip(codes, batch):
        assert forward_hw(qa, row.tolist())[1][-1] == out.tolist()


def test_hardware_accuracy_is_one_on_self_labeled_data(small_qa, small_data):
    labels = predict_batch(small_qa, input_codes(small_data, small_qa.format))
    relabeled = dataset_from_rows(small_data.features, labels, small_data.num_classes)
    assert hardware_accuracy(small_qa, relabeled) == 1.0


def test_hardware_accuracy_on_empty_dataset_is_zero(small_qa):
    empty = dataset_from_rows(np.zeros((0, 4)), np.zeros(0, dtype=int), 2)
    assert hardware_accuracy(small_qa, empty) == 0.0


def test_forward_float_hard_activations():
    structure = AnnStructure.from_label("1-1", activations=["hsig"])
    model = AnnModel(structure=structure, weights=(((2.0,),),), biases=((0.0,),))
    out = forward_float(model, np.array([[0.0], [0.25], [1.0]]))
    assert out[:, 0].tolist() == [0.5, 0.75, 1.0]


def test_software_accuracy_on_self_labeled_data(small_model, small_data):
    assert software_accuracy(small_model, small_data) == 1.0


# ---------------------------------------------------------------------------
# Cost model
# ---------------------------------------------------------------------------


CYCLES = {
    "16-10": (2, 17, 180),
    "16-10-10": (3, 28, 300),
    "16-16-10": (3, 34, 468),
    "16-10-10-10": (4, 39, 420),
    "16-16-10-10": (4, 45, 588),
}


@pytest.mark.parametrize("label", DIGIT_STRUCTURES)
def test_cycle_count_for_digit_structures(label):
    structure = AnnStructure.from_label(label)
    expected = CYCLES[label]
    got = tuple(cycle_count(arch, structure) for arch in Architecture)
    assert got == expected


def test_cycle_count_accepts_architecture_names():
    assert cycle_count("smac_ann", AnnStructure.from_label("16-10")) == 180


@pytest.mark.parametrize(("weights", "register_bits"), [([1], 9), ([20, 24, 26], 16)])
def test_mac_sizes_register_width(weights, register_bits):
    qa = _layer([weights], [0])
    blocks, mux = mac_sizes(Architecture.PARALLEL, qa)
    assert [b.register_bits for b in blocks] == [register_bits]
    assert mux == {}


def test_mac_sizes_smac_neuron_narrows_by_the_sls():
    qa = _layer([[20, 24, 26]], [0])
    blocks, mux = mac_sizes(Architecture.SMAC_NEURON, qa)
    assert blocks[0].sls == 1
    assert blocks[0].weight_bits == 4
    assert mux == {"l1_input": 3, "l1_weight": 3}


def test_mac_sizes_smac_ann_has_one_global_mac(small_qa):
    blocks, mux = mac_sizes(Architecture.SMAC_ANN, small_qa)
    assert len(blocks) == 1
    assert blocks[0].block == "mac"
    assert mux == {"input": 4, "weight": 4 * 3 + 3 * 2, "bias": 5}


# ---------------------------------------------------------------------------
# Bit-exactness
# ---------------------------------------------------------------------------


def _big_int_forward(qa: QuantizedAnn, x: list[int]) -> tuple[list[list[int]], list[int]]:
    """Accumulators of every layer and the final output codes, in Python ints."""
    values = [int(v) for v in x]
    accumulators = []
    for k, layer in enumerate(qa.structure.layers):
        acc = [
            sum(int(w) * v for w, v in zip(row, values)) + int(b)
            for row, b in zip(qa.int_weights[k], qa.int_biases[k])
        ]
        accumulators.append(acc)
        values = [activate(layer.activation, a, qa.format) for a in acc]
    return accumulators, values


@pytest.mark.parametrize(("label", "q", "seed"), [("6-5-3", 4, 1), ("6-5-3", 9, 2), ("8-8-4", 6, 3), ("5-4-4-2", 12, 4)])
def test_accumulators_fit_their_registers(label, q, seed):
    qa = quantize_model(random_model(label, seed=seed, scale=3.0), q)
    blocks, _ = mac_sizes(Architecture.PARALLEL, qa)
    registers = iter(b.register_bits for b in blocks)
    widths = [[next(registers) for _ in range(qa.structure.neurons_of(k))] for k in range(qa.structure.num_layers)]

    rng = np.random.default_rng(seed)
    top = (1 << qa.format.input_bits) - 1
    vectors = rng.integers(0, top + 1, (250, qa.structure.num_inputs)).tolist()
    vectors[:2] = [[0] * qa.structure.num_inputs, [top] * qa.structure.num_inputs]
    for x in vectors:
        accumulators, final = _big_int_forward(qa, x)
        for k, layer_acc in enumerate(accumulators):
            for m, acc in enumerate(layer_acc):
                half = 1 << (widths[k][m] - 1)
                assert -half <= acc < half
        assert forward_hw(qa, x)[1][-1] == final


@pytest.mark.parametrize("q", [1, 5, 12])
def test_q_scaled_identity_reproduces_input_codes(q):
    identity = tuple(tuple((1 << q) if i == j else 0 for j in range(4)) for i in range(4))
    qa = QuantizedAnn(
        structure=AnnStructure.from_label("4-4-4", activations=["lin", "lin"]),
        format=FixedFormat(q=q),
        int_weights=(identity, identity),
        int_biases=((0,) * 4, (0,) * 4),
    )
    codes = np.random.default_rng(q).integers(0, 256, (50, 4))
    codes[0] = [0, 1, 254, 255]
    assert forward_batch(qa, codes).tolist() == codes.tolist()
    for row in codes[:5].tolist():
        assert forward_hw(qa, row)[1] == [row, row]
