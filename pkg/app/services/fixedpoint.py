"""Fixed-point quantization, CSD codec and shift utilities.

All helpers are pure functions over Python integers so bit widths never
overflow; the inference engine relies on that for its exactness checks.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable

from app.models.ann import AnnModel
from app.models.fixed import CsdForm, FixedFormat, QuantizedAnn

logger = logging.getLogger(__name__)

# smallest_left_shift of an all-zero group: any shift is admissible.
SLS_UNBOUNDED = math.inf


# ---------------------------------------------------------------------------
# Quantization
# ---------------------------------------------------------------------------


def quantize_value(w: float, frac_bits: int) -> int:
    """Least integer >= w * 2^frac_bits (mathematical ceiling, negatives included)."""
    if frac_bits < 0:
        raise ValueError(f"frac_bits must be >= 0, got {frac_bits}")
    return math.ceil(math.ldexp(w, frac_bits))


def quantize_model(
    model: AnnModel,
    q: int,
    input_bits: int = 8,
    input_frac_bits: int = 8,
) -> QuantizedAnn:
    """Quantize weights at 2^q and biases directly at accumulator scale."""
    fmt = FixedFormat(q=q, input_bits=input_bits, input_frac_bits=input_frac_bits)
    weights = tuple(
        tuple(tuple(quantize_value(w, q) for w in row) for row in layer)
        for layer in model.weights
    )
    biases = tuple(
        tuple(quantize_value(b, fmt.acc_frac_bits) for b in layer)
        for layer in model.biases
    )
    return QuantizedAnn(
        structure=model.structure,
        format=fmt,
        int_weights=weights,
        int_biases=biases,
    )


# ---------------------------------------------------------------------------
# Canonical signed digits
# ---------------------------------------------------------------------------


def to_csd(v: int) -> CsdForm:
    """CSD digits of ``v``, least significant first; negatives mirror |v|."""
    n = abs(v)
    digits: list[int] = []
    while n:
        if n & 1:
            d = 2 - (n & 3)
            n -= d
        else:
            d = 0
        digits.append(d)
        n >>= 1
    if v < 0:
        digits = [-d for d in digits]
    return CsdForm(digits=tuple(digits), value=v)


def from_csd(c: CsdForm) -> int:
    return sum(d * (1 << i) for i, d in enumerate(c.digits))


def nonzero_digits(v: int) -> int:
    return to_csd(v).nonzero_count


def drop_lowest_digit(v: int) -> int:
    """``v`` without its least-significant nonzero CSD digit (0 stays 0)."""
    if v == 0:
        return 0
    position, sign = to_csd(v).terms()[0]
    return v - sign * (1 << position)


def model_tnzd(qa: QuantizedAnn) -> int:
    """Total nonzero CSD digits over every integer weight and bias."""
    return sum(nonzero_digits(v) for v in qa.all_weights()) + sum(
        nonzero_digits(v) for v in qa.all_biases()
    )


# ---------------------------------------------------------------------------
# Shifts and widths
# ---------------------------------------------------------------------------


def largest_left_shift(v: int) -> int:
    """Two-adic valuation of |v|."""
    if v == 0:
        raise ValueError("largest left shift is undefined for 0")
    m = abs(v)
    return (m & -m).bit_length() - 1


def smallest_left_shift(vs: Iterable[int]) -> int | float:
    """Minimum lls over the nonzero entries; SLS_UNBOUNDED when all are zero."""
    values = list(vs)
    if not values:
        raise ValueError("smallest left shift needs at least one value")
    shifts = [largest_left_shift(v) for v in values if v != 0]
    return min(shifts) if shifts else SLS_UNBOUNDED


def magnitude_bits(v: int) -> int:
    """Operand width of a constant multiplier, sign handled separately."""
    return abs(v).bit_length()


def signed_bits(v: int) -> int:
    """Two's-complement width of ``v``."""
    if v >= 0:
        return v.bit_length() + 1
    return (~v).bit_length() + 1
