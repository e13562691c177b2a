"""Tests for the minimum quantization value search."""

import numpy as np
import pytest

from app.models.ann import AnnModel, AnnStructure
from app.services.fixedpoint import quantize_model
from app.services.inference import predict_batch
from app.services.model_io import dataset_from_rows, input_codes
from app.services.quantsearch import find_min_q, search_min_q


def _scripted(values: dict[int, float]):
    calls: list[int] = []

    def evaluate(q: int) -> float:
        calls.append(q)
        return values[q]

    return evaluate, calls


def test_stops_at_the_first_q_without_improvement():
    evaluate, calls = _scripted({1: 0.8, 2: 0.8, 3: 0.9})
    result = search_min_q(evaluate, max_q=16)
    assert result.q == 2
    assert calls == [1, 2]
    assert not result.exhausted


def test_gain_of_one_tenth_percent_counts_as_no_improvement():
    evaluate, _ = _scripted({1: 0.5, 2: 0.7, 3: 0.701, 4: 0.9})
    result = search_min_q(evaluate, max_q=16)
    assert result.q == 3
    assert result.ha_history == [0.5, 0.7, 0.701]
    assert result.hardware_accuracy == 0.701


def test_zero_accuracy_never_terminates_the_search():
    evaluate, calls = _scripted({1: 0.0, 2: 0.0, 3: 0.6, 4: 0.6})
    result = search_min_q(evaluate, max_q=16)
    assert result.q == 4
    assert calls == [1, 2, 3, 4]


def test_exhausted_search_returns_the_best_q_lowest_on_ties():
    evaluate, _ = _scripted({1: 0.2, 2: 0.5, 3: 0.9, 4: 0.95})
    result = search_min_q(evaluate, max_q=4)
    assert result.exhausted
    assert result.q == 4

    evaluate, _ = _scripted({1: 0.0, 2: 0.0, 3: 0.0})
    result = search_min_q(evaluate, max_q=3)
    assert result.exhausted
    assert result.q == 1


def test_rejects_non_positive_max_q():
    with pytest.raises(ValueError):
        search_min_q(lambda q: 1.0, max_q=0)


def test_find_min_q_quantizes_at_the_selected_q(small_model, small_data):
    qa, result = find_min_q(small_model, small_data, max_q=12)
    assert qa.format.q == result.q
    assert 1 <= result.q <= 12
    assert len(result.ha_history) >= result.q
    assert 0.0 <= result.hardware_accuracy <= 1.0


def test_history_covers_every_evaluated_q():
    evaluate, _ = _scripted({1: 0.4, 2: 0.6, 3: 0.6})
    settled = search_min_q(evaluate, max_q=16)
    assert len(settled.ha_history) == settled.q == 3

    evaluate, _ = _scripted({1: 0.0, 2: 0.0, 3: 0.0})
    exhausted = search_min_q(evaluate, max_q=3)
    assert exhausted.exhausted
    assert exhausted.q == 1
    assert exhausted.ha_history == [0.0, 0.0, 0.0]
    assert exhausted.hardware_accuracy == 0.0


def _exact_model(label: str, k: int, seed: int) -> AnnModel:
    """Weights and biases that are integer multiples of 2^-k."""
    structure = AnnStructure.from_label(label)
    rng = np.random.default_rng(seed)
    scale = 1 << k
    weights, biases = [], []
    for i in range(structure.num_layers):
        rows, cols = structure.neurons_of(i), structure.inputs_of(i)
        ints = rng.integers(-scale, scale + 1, (rows, cols))
        weights.append(tuple(tuple(float(w) / scale for w in row) for row in ints))
        biases.append(tuple(float(b) / scale for b in rng.integers(-scale // 2, scale // 2 + 1, rows)))
    return AnnModel(structure=structure, weights=tuple(weights), biases=tuple(biases))


@pytest.mark.parametrize(("label", "k", "seed"), [("4-3", 2, 0), ("5-4-3", 3, 1), ("6-4-3", 5, 2), ("8-5-4", 7, 3)])
def test_model_exact_at_k_settles_by_k_plus_one(label, k, seed):
    model = _exact_model(label, k, seed)
    exact = quantize_model(model, k)
    assert quantize_model(model, k + 1).int_weights == tuple(
        tuple(tuple(2 * w for w in row) for row in layer) for layer in exact.int_weights
    )
    features = np.random.default_rng(seed + 50).uniform(0, 1, (80, model.structure.num_inputs))
    unlabeled = dataset_from_rows(features, np.zeros(80, dtype=int), model.structure.num_outputs)
    labels = predict_batch(exact, input_codes(unlabeled, exact.format))
    validation = dataset_from_rows(features, labels, model.structure.num_outputs)

    _, result = find_min_q(model, validation, max_q=16)
    assert not result.exhausted
    assert result.q <= k + 1
