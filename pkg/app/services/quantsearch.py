"""Minimum quantization value search."""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

from app.models.ann import AnnModel, Dataset
from app.models.fixed import QuantizedAnn
from app.services.fixedpoint import quantize_model
from app.services.inference import hardware_accuracy

logger = logging.getLogger(__name__)

# Largest accuracy gain still counted as "no improvement" (0.1%).
IMPROVEMENT_EPSILON = 0.001


@dataclass(frozen=True)
class QSearchResult:
    """Outcome of a q search.

    ``ha_history[i]`` is the accuracy at q = i + 1. It holds every evaluated q,
    so its length equals ``q`` unless the search is ``exhausted``; then it has
    ``max_q`` entries and ``q`` points at the best of them.
    """

    q: int
    ha_history: list[float] = field(default_factory=list)
    exhausted: bool = False

    @property
    def hardware_accuracy(self) -> float:
        return self.ha_history[self.q - 1]


def search_min_q(evaluate: Callable[[int], float], max_q: int) -> QSearchResult:
    """Increase q from 1 until the accuracy gain drops to 0.1% or less.

    A q whose accuracy is 0 never terminates the loop. When ``max_q`` is reached
    first, the q with the best accuracy (lowest on ties) is returned and the
    result is flagged ``exhausted``.
    """
    if max_q < 1:
        raise ValueError(f"max_q must be >= 1, got {max_q}")
    history: list[float] = []
    previous = 0.0
    for q in range(1, max_q + 1):
        ha = float(evaluate(q))
        history.append(ha)
        logger.debug("q=%d ha=%.4f", q, ha)
        # a gain of exactly 0.1% stops the search
        if ha > 0 and round(ha - previous, 9) <= IMPROVEMENT_EPSILON:
            return QSearchResult(q=q, ha_history=history)
        previous = ha
    best = max(range(len(history)), key=lambda i: (history[i], -i))
    logger.warning(
        "q search reached max_q=%d without settling; using q=%d (ha=%.4f)",
        max_q, best + 1, history[best],
    )
    return QSearchResult(q=best + 1, ha_history=history, exhausted=True)


def find_min_q(
    model: AnnModel,
    validation: Dataset,
    max_q: int = 16,
    input_bits: int = 8,
    input_frac_bits: int = 8,
) -> tuple[QuantizedAnn, QSearchResult]:
    """Minimum q for ``model`` on ``validation``, with the network quantized at it."""

    def evaluate(q: int) -> float:
        qa = quantize_model(model, q, input_bits=input_bits, input_frac_bits=input_frac_bits)
        return hardware_accuracy(qa, validation)

    result = search_min_q(evaluate, max_q)
    qa = quantize_model(model, result.q, input_bits=input_bits, input_frac_bits=input_frac_bits)
    logger.info(
        "Minimum quantization value q=%d (ha=%.4f, %d evaluations)",
        result.q, result.hardware_accuracy, len(result.ha_history),
    )
    return qa, result
