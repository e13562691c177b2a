"""Hardware-aware post-training of integer weights.

Two accuracy-preserving searches:

* ``tune_parallel`` removes the least significant CSD digit of weights while
  the hardware accuracy holds (fewer adders in a parallel design).
* ``tune_smac`` raises the smallest left shift of each MAC weight group so the
  multiplier can be narrowed (time-multiplexed designs).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np

from app.models.ann import Dataset
from app.models.fixed import QuantizedAnn
from app.services.fixedpoint import (
    SLS_UNBOUNDED,
    drop_lowest_digit,
    largest_left_shift,
    magnitude_bits,
    smallest_left_shift,
)
from app.services.inference import forward_layer, input_magnitude
from app.services.model_io import input_codes

logger = logging.getLogger(__name__)

SCOPES = ("per_neuron", "global")
BIAS_OFFSETS = tuple(range(-4, 5))


@dataclass(frozen=True)
class TuneResult:
    qa: QuantizedAnn
    bha: float
    initial_ha: float
    commits: int
    sweeps: int


class _AccuracyOracle:
    """Hardware accuracy of single-layer edits to a committed network.

    Input codes of every layer are cached for the committed state, so a
    candidate in layer ``k`` only re-runs layers ``k`` onwards.
    """

    def __init__(self, qa: QuantizedAnn, data: Dataset) -> None:
        self.qa = qa
        self.labels = data.labels
        self.weights, self.biases = qa.mutable_values()
        self._inputs: list[np.ndarray] = [input_codes(data, qa.format)]
        self._refresh(0)

    def _run(self, k: int, values: np.ndarray) -> np.ndarray:
        layer = self.qa.structure.layers[k]
        return forward_layer(
            self.qa.format,
            layer.activation,
            values,
            self.weights[k],
            self.biases[k],
            input_magnitude(self.qa, k),
        )

    def _refresh(self, start: int) -> None:
        del self._inputs[start + 1:]
        values = self._inputs[start]
        for k in range(start, self.qa.structure.num_layers):
            values = self._run(k, values)
            self._inputs.append(values)

    def current(self) -> float:
        return self._score(self._inputs[-1])

    def _score(self, outputs: np.ndarray) -> float:
        if outputs.shape[0] == 0:
            return 0.0
        return float(np.mean(np.argmax(outputs, axis=1) == self.labels))

    def trial(self, k: int, m: int, n: int | None, value: int) -> float:
        """Accuracy with weight (k, m, n), or bias (k, m) when ``n`` is None, set to ``value``."""
        target = self.biases[k] if n is None else self.weights[k][m]
        index = m if n is None else n
        saved = target[index]
        target[index] = value
        try:
            values = self._inputs[k]
            for j in range(k, self.qa.structure.num_layers):
                values = self._run(j, values)
            return self._score(values)
        finally:
            target[index] = saved

    def trial_pair(self, k: int, m: int, n: int, weight: int, bias: int) -> float:
        saved = self.biases[k][m]
        self.biases[k][m] = bias
        try:
            return self.trial(k, m, n, weight)
        finally:
            self.biases[k][m] = saved

    def commit(self, k: int, m: int, n: int | None, value: int) -> None:
        if n is None:
            self.biases[k][m] = value
        else:
            self.weights[k][m][n] = value
        self._refresh(k)

    def result(self, **meta) -> QuantizedAnn:
        return self.qa.with_values(self.weights, self.biases, **meta)


# ---------------------------------------------------------------------------
# Parallel architecture: CSD digit removal
# ---------------------------------------------------------------------------


def tune_parallel(qa: QuantizedAnn, validation: Dataset) -> TuneResult:
    """Drop least-significant CSD digits while accuracy stays >= the best so far."""
    started = time.perf_counter()
    oracle = _AccuracyOracle(qa, validation)
    initial = oracle.current()
    bha = initial
    commits = 0
    sweeps = 0
    s = qa.structure
    while True:
        sweeps += 1
        changed = False
        for k in range(s.num_layers):
            for m in range(s.neurons_of(k)):
                for n in range(s.inputs_of(k)):
                    w = oracle.weights[k][m][n]
                    if w == 0:
                        continue
                    candidate = drop_lowest_digit(w)
                    ha = oracle.trial(k, m, n, candidate)
                    if ha >= bha:
                        logger.debug("w[%d][%d][%d]: %d -> %d (ha=%.4f)", k, m, n, w, candidate, ha)
                        oracle.commit(k, m, n, candidate)
                        bha = ha
                        commits += 1
                        changed = True
        if not changed:
            break
    logger.info(
        "Parallel tuning: %d commits in %d sweeps, ha %.4f -> %.4f (%.2fs)",
        commits, sweeps, initial, bha, time.perf_counter() - started,
    )
    return TuneResult(
        qa=oracle.result(tuned_for="parallel"),
        bha=bha,
        initial_ha=initial,
        commits=commits,
        sweeps=sweeps,
    )


# ---------------------------------------------------------------------------
# Time-multiplexed architectures: smallest-left-shift maximization
# ---------------------------------------------------------------------------


def shift_candidates(w: int, max_bits: int) -> list[int]:
    """Neighbours of ``w`` that are multiples of 2^(lls(w)+1), within ``max_bits``.

    Candidates keep the sign of ``w``; zero is never a candidate.
    """
    magnitude = abs(w)
    step = 1 << (largest_left_shift(w) + 1)
    low = magnitude - magnitude % step
    sign = -1 if w < 0 else 1
    return [sign * c for c in (low, low + step) if c and magnitude_bits(c) <= max_bits]


def weight_groups(qa: QuantizedAnn, scope: str) -> list[list[tuple[int, int, int]]]:
    """Weight coordinates of each MAC group, in (layer, neuron, input) order."""
    if scope not in SCOPES:
        raise ValueError(f"unknown tuning scope {scope!r}; expected one of {SCOPES}")
    s = qa.structure
    groups = [
        [(k, m, n) for n in range(s.inputs_of(k))]
        for k in range(s.num_layers)
        for m in range(s.neurons_of(k))
    ]
    if scope == "global":
        return [[cell for group in groups for cell in group]]
    return groups


def group_sls(weights: list, group: list[tuple[int, int, int]]) -> int | float:
    return smallest_left_shift(weights[k][m][n] for k, m, n in group)


def _best_bias(oracle: _AccuracyOracle, k: int, m: int, n: int, weight: int) -> tuple[int, float]:
    """Best bias offset around the committed bias with ``weight`` in place."""
    base = oracle.biases[k][m]
    scored = [
        (oracle.trial_pair(k, m, n, weight, base + delta), delta)
        for delta in BIAS_OFFSETS
    ]
    ha, delta = max(scored, key=lambda item: (item[0], -abs(item[1]), -item[1]))
    return base + delta, ha


def tune_smac(qa: QuantizedAnn, validation: Dataset, scope: str = "per_neuron") -> TuneResult:
    """Raise each group's smallest left shift while accuracy stays >= the best so far.

    ``per_neuron`` groups match the one-MAC-per-neuron design; ``global`` puts
    every weight of the network in a single group (one shared MAC).
    """
    started = time.perf_counter()
    groups = weight_groups(qa, scope)
    oracle = _AccuracyOracle(qa, validation)
    initial = oracle.current()
    bha = initial
    commits = 0
    sweeps = 0
    while True:
        sweeps += 1
        improved = False
        for group in groups:
            before = group_sls(oracle.weights, group)
            if before == SLS_UNBOUNDED:
                continue
            max_bits = max(magnitude_bits(oracle.weights[k][m][n]) for k, m, n in group)
            for k, m, n in group:
                w = oracle.weights[k][m][n]
                if w == 0 or largest_left_shift(w) != before:
                    continue
                candidates = shift_candidates(w, max_bits)
                if not candidates:
                    continue
                scored = [(oracle.trial(k, m, n, c), c) for c in candidates]
                # max() keeps the first of equal scores, so the lower candidate wins ties
                ha, best = max(scored, key=lambda item: item[0])
                if ha >= bha:
                    oracle.commit(k, m, n, best)
                    bha = ha
                    commits += 1
                    logger.debug("w[%d][%d][%d]: %d -> %d (ha=%.4f)", k, m, n, w, best, ha)
                    continue
                bias, ha = _best_bias(oracle, k, m, n, best)
                if ha >= bha:
                    oracle.commit(k, m, None, bias)
                    oracle.commit(k, m, n, best)
                    bha = ha
                    commits += 1
                    logger.debug(
                        "w[%d][%d][%d]: %d -> %d with bias %d (ha=%.4f)", k, m, n, w, best, bias, ha
                    )
            if group_sls(oracle.weights, group) > before:
                improved = True
        if not improved:
            break
    logger.info(
        "SMAC tuning (%s): %d commits in %d sweeps, ha %.4f -> %.4f (%.2fs)",
        scope, commits, sweeps, initial, bha, time.perf_counter() - started,
    )
    arch = "smac_neuron" if scope == "per_neuron" else "smac_ann"
    return TuneResult(
        qa=oracle.result(tuned_for=arch),
        bha=bha,
        initial_ha=initial,
        commits=commits,
        sweeps=sweeps,
    )


def tune(qa: QuantizedAnn, validation: Dataset, arch: str) -> TuneResult:
    """Dispatch to the tuner matching a design architecture."""
    if arch == "parallel":
        return tune_parallel(qa, validation)
    if arch == "smac_neuron":
        return tune_smac(qa, validation, "per_neuron")
    if arch == "smac_ann":
        return tune_smac(qa, validation, "global")
    raise ValueError(f"unknown architecture {arch!r}")

