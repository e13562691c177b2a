"""Common-subexpression optimization of constant-multiplication blocks.

Greedy mode extracts two-term subexpressions ``a +/- (b << d)`` picked from
CSD digit-pair frequencies, scoring each candidate by re-decomposing every
output over the available signals (inputs, extracted subexpressions and the
outputs built before it). Exhaustive mode is an iterative-deepening
branch-and-bound over adder-graph fundamentals, seeded with the greedy result
as its upper bound.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterator
from dataclasses import dataclass

from app.models.dag import CmBlockSpec, ShiftAddDag, Term
from app.services.adder_graph import (
    DagBuilder,
    SearchEffortExceeded,
    Vector,
    csd_terms,
)

logger = logging.getLogger(__name__)

TOP_K = 8
LOOKAHEAD_TIES = 8


def csd_weight(v: int) -> int:
    """Nonzero CSD digits of ``v``: bits set in (3|v| xor |v|) >> 1."""
    m = abs(v)
    return ((3 * m ^ m) >> 1).bit_count()


def vector_weight(vec: Vector) -> int:
    return sum(csd_weight(c) for c in vec)


def normalize(vec: Vector) -> tuple[Vector, int, bool]:
    """Odd representative of ``vec`` up to shift and sign.

    Returns (odd vector with positive leading entry, shift, negated).
    """
    nonzero = [c for c in vec if c]
    if not nonzero:
        return vec, 0, False
    shift = min((abs(c) & -abs(c)).bit_length() - 1 for c in nonzero)
    negate = nonzero[0] < 0
    sign = -1 if negate else 1
    return tuple(sign * (c >> shift) for c in vec), shift, negate


# ---------------------------------------------------------------------------
# Greedy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Extraction:
    """New signal ``signal[a] + sign * (signal[b] << shift)``."""

    a: int
    b: int
    shift: int
    negative: bool


@dataclass
class _Decomposition:
    """``target = sum(coef * signal) + residual`` with residual over the inputs."""

    moves: list[tuple[str, int, int]]
    residual: Vector

    @property
    def terms(self) -> int:
        return sum(csd_weight(c) for _, _, c in self.moves) + vector_weight(self.residual)

    @property
    def ops(self) -> int:
        return max(self.terms - 1, 0)


def _coefficients(residual: Vector, vec: Vector) -> list[int]:
    """Multipliers of ``vec`` worth trying against ``residual``."""
    found: set[int] = set()
    for r, v in zip(residual, vec):
        if not r or not v:
            continue
        if r % v == 0:
            found.add(r // v)
        k = max(abs(r) // abs(v), 1).bit_length() - 1
        for power in (1 << k, 1 << (k + 1)):
            found.update((power, -power))
    found.discard(0)
    return sorted(found, key=lambda c: (abs(c), c))


def _moves(residual: Vector, signals: list[tuple[str, int, Vector]]):
    for kind, index, vec in signals:
        for c in _coefficients(residual, vec):
            after = tuple(r - c * v for r, v in zip(residual, vec))
            yield csd_weight(c) + vector_weight(after), kind, index, c, after


def _decompose(
    target: Vector,
    signals: list[tuple[str, int, Vector]],
    lookahead: bool = True,
) -> _Decomposition:
    moves: list[tuple[str, int, int]] = []
    residual = target
    while True:
        current = vector_weight(residual)
        options = list(_moves(residual, signals))
        if not options:
            break
        best = min(cost for cost, *_ in options)
        if best >= current:
            break
        tied = [o for o in options if o[0] == best]
        choice = tied[0]
        if lookahead and len(tied) > 1:
            choice = min(
                tied[:LOOKAHEAD_TIES],
                key=lambda o: csd_weight(o[3]) + _decompose(o[4], signals, lookahead=False).terms,
            )
        _, kind, index, c, residual = choice
        moves.append((kind, index, c))
    return _Decomposition(moves=moves, residual=residual)


def _signal_vectors(width: int, extractions: list[_Extraction]) -> list[Vector]:
    vectors = [tuple(1 if j == i else 0 for j in range(width)) for i in range(width)]
    for e in extractions:
        a, b = vectors[e.a], vectors[e.b]
        sign = -1 if e.negative else 1
        vectors.append(tuple(x + sign * (y << e.shift) for x, y in zip(a, b)))
    return vectors


def _plan(rows: list[Vector], vectors: list[Vector], width: int) -> tuple[list[_Decomposition], int]:
    """Decompose every row; returns decompositions and total op count."""
    extracted = [("s", i, v) for i, v in enumerate(vectors) if i >= width]
    decompositions: list[_Decomposition] = []
    for row in rows:
        earlier = [("y", j, rows[j]) for j in range(len(decompositions)) if any(rows[j])]
        decompositions.append(_decompose(row, extracted + earlier))
    ops = len(vectors) - width + sum(d.ops for d in decompositions)
    return decompositions, ops


def _digit_terms(decomposition: _Decomposition) -> list[tuple[int, int, int]]:
    """(signal index, position, sign) per digit, output references excluded."""
    digits: list[tuple[int, int, int]] = []
    for kind, index, c in decomposition.moves:
        if kind != "s":
            continue
        digits.extend((index, pos, sign) for pos, sign in _digits(c))
    for j, r in enumerate(decomposition.residual):
        digits.extend((j, pos, sign) for pos, sign in _digits(r))
    return digits


def _digits(v: int) -> list[tuple[int, int]]:
    return [(t.shift, -1 if t.negate else 1) for t in csd_terms("_", v)]


def _patterns(decompositions: list[_Decomposition]) -> list[_Extraction]:
    """Most frequent digit pairs across all outputs."""
    counts: Counter[_Extraction] = Counter()
    for decomposition in decompositions:
        digits = _digit_terms(decomposition)
        for i in range(len(digits)):
            for j in range(i + 1, len(digits)):
                (sa, pa, ga), (sb, pb, gb) = digits[i], digits[j]
                if (pa, sa) > (pb, sb):
                    (sa, pa, ga), (sb, pb, gb) = (sb, pb, gb), (sa, pa, ga)
                if sa == sb and pa == pb:
                    continue
                counts[_Extraction(sa, sb, pb - pa, ga != gb)] += 1
    ranked = sorted(
        counts.items(),
        key=lambda item: (-item[1], item[0].shift, item[0].a, item[0].b, item[0].negative),
    )
    return [pattern for pattern, _ in ranked[:TOP_K]]


def _realize(
    spec: CmBlockSpec,
    extractions: list[_Extraction],
    decompositions: list[_Decomposition],
) -> ShiftAddDag:
    builder = DagBuilder(spec.input_names, hashing=True)
    signals: list[Term] = [Term(name) for name in spec.input_names]
    for e in extractions:
        b = signals[e.b].shifted(e.shift)
        signals.append(builder.pair(signals[e.a], b.negated() if e.negative else b))
    outputs: list[tuple[str, Term | None]] = []
    realized: list[Term | None] = []
    for name, decomposition in zip(spec.output_names, decompositions):
        terms: list[Term] = []
        for kind, index, c in decomposition.moves:
            base = signals[index] if kind == "s" else realized[index]
            for pos, sign in _digits(c):
                t = base.shifted(pos)
                terms.append(t.negated() if sign < 0 else t)
        for ref, r in zip(spec.input_names, decomposition.residual):
            terms.extend(csd_terms(ref, r))
        term = builder.combine(terms)
        realized.append(term)
        outputs.append((name, term))
    return builder.build(outputs)


def greedy_cse(spec: CmBlockSpec) -> ShiftAddDag:
    """Iterative extraction of the subexpression that saves the most operations."""
    width = spec.shape[1]
    rows = [tuple(row) for row in spec.coefficients]
    extractions: list[_Extraction] = []
    vectors = _signal_vectors(width, extractions)
    decompositions, cost = _plan(rows, vectors, width)
    known = {normalize(v)[0] for v in vectors}
    while True:
        best: tuple[int, _Extraction, list[_Decomposition]] | None = None
        for pattern in _patterns(decompositions):
            trial = extractions + [pattern]
            trial_vectors = _signal_vectors(width, trial)
            candidate = trial_vectors[-1]
            if not any(candidate) or normalize(candidate)[0] in known:
                continue
            trial_decompositions, trial_cost = _plan(rows, trial_vectors, width)
            if trial_cost < cost and (best is None or trial_cost < best[0]):
                best = (trial_cost, pattern, trial_decompositions)
        if best is None:
            break
        cost, pattern, decompositions = best
        extractions.append(pattern)
        vectors = _signal_vectors(width, extractions)
        known.add(normalize(vectors[-1])[0])
        logger.debug("CSE %s: extracted %s, cost now %d", spec.name, pattern, cost)
    return _realize(spec, extractions, decompositions)


# ---------------------------------------------------------------------------
# Exhaustive
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Fundamental:
    """``vector = ((a << sa) + sign * (b << sb)) >> rshift`` over fundamentals a, b."""

    vector: Vector
    a: int
    b: int
    sa: int
    sb: int
    negative: bool
    rshift: int


class _Search:
    def __init__(self, max_bits: int, budget: int) -> None:
        self.max_shift = max_bits + 1
        self.limit = 1 << (max_bits + 1)
        self.budget = budget
        self.expansions = 0
        # fundamental set -> largest op allowance already proven insufficient
        self.failed: dict[frozenset[Vector], int] = {}

    def _combine(self, realized: list[_Fundamental], i: int, j: int) -> Iterator[_Fundamental]:
        """Fundamentals ``(a << sa) +/- (b << sb)`` over ``realized[i]`` and ``realized[j]``."""
        fa, fb = realized[i].vector, realized[j].vector
        for k in range(self.max_shift + 1):
            for sa, sb in ((0, k), (k, 0)) if k else ((0, 0),):
                for negative in (False, True):
                    sign = -1 if negative else 1
                    raw = tuple((x << sa) + sign * (y << sb) for x, y in zip(fa, fb))
                    vec, rshift, _ = normalize(raw)
                    if any(vec) and all(abs(c) < self.limit for c in vec):
                        yield _Fundamental(vec, i, j, sa, sb, negative, rshift)

    def extend(self, near: dict[Vector, _Fundamental], realized: list[_Fundamental]) -> dict[Vector, _Fundamental]:
        """``near`` updated for the last fundamental appended to ``realized``."""
        near = dict(near)
        last = len(realized) - 1
        near.pop(realized[last].vector, None)
        seen = {f.vector for f in realized}
        for j in range(last + 1):
            pairs = ((last, j),) if j == last else ((last, j), (j, last))
            for a, b in pairs:
                for f in self._combine(realized, a, b):
                    if f.vector not in seen and f.vector not in near:
                        near[f.vector] = f
        return near

    def successors(self, realized: list[_Fundamental]) -> dict[Vector, _Fundamental]:
        """Every fundamental one operation away, keyed by odd vector."""
        near: dict[Vector, _Fundamental] = {}
        for n in range(1, len(realized) + 1):
            near = self.extend(near, realized[:n])
        return near

    def _close(
        self,
        realized: list[_Fundamental],
        near: dict[Vector, _Fundamental],
        remaining: frozenset[Vector],
    ) -> tuple[list[_Fundamental], dict[Vector, _Fundamental], frozenset[Vector]]:
        """Add remaining targets one operation away until none is left that close."""
        while True:
            hits = sorted(t for t in remaining if t in near)
            if not hits:
                return realized, near, remaining
            realized = realized + [near[hits[0]]]
            remaining = remaining - {hits[0]}
            near = self.extend(near, realized)

    def run(
        self,
        realized: list[_Fundamental],
        near: dict[Vector, _Fundamental],
        remaining: frozenset[Vector],
        ops_left: int,
    ) -> list[_Fundamental] | None:
        self.expansions += 1
        if self.expansions > self.budget:
            raise SearchEffortExceeded(
                f"exhaustive search exceeded {self.budget} expansions; use greedy effort"
            )
        key = frozenset(f.vector for f in realized)
        if self.failed.get(key, -1) >= ops_left:
            return None
        base = len(realized)
        realized, near, remaining = self._close(realized, near, remaining)
        left = ops_left - (len(realized) - base)
        if not remaining:
            return realized if left >= 0 else None
        found = None
        # one non-target fundamental, then at least one op per remaining target
        if left >= len(remaining) + 1:
            # an operation at most doubles the CSD weight
            strongest = max(vector_weight(f.vector) for f in realized)
            if strongest << left >= max(vector_weight(t) for t in remaining):
                for vec in sorted(near):
                    child = realized + [near[vec]]
                    found = self.run(child, self.extend(near, child), remaining, left - 1)
                    if found is not None:
                        break
        if found is None:
            self.failed[key] = ops_left
        return found


def _lower_bound(targets: list[Vector]) -> int:
    if not targets:
        return 0
    return max(len(targets), max((vector_weight(t) - 1).bit_length() for t in targets))


def exhaustive_cse(spec: CmBlockSpec, budget: int, upper: ShiftAddDag | None = None) -> ShiftAddDag:
    """Minimum-op adder graph; returns ``upper`` when nothing smaller exists.

    Raises SearchEffortExceeded after ``budget`` node expansions.
    """
    width = spec.shape[1]
    if upper is None:
        upper = greedy_cse(spec)
    units = {tuple(1 if j == i else 0 for j in range(width)) for i in range(width)}
    targets = sorted({normalize(tuple(row))[0] for row in spec.coefficients if any(row)} - units)
    lower = _lower_bound(targets)
    if lower >= upper.op_count:
        return upper
    max_bits = max(abs(c).bit_length() for row in spec.coefficients for c in row)
    search = _Search(max_bits, budget)
    start = [_Fundamental(u, -1, -1, 0, 0, False, 0) for u in sorted(units, reverse=True)]
    near = search.successors(start)
    for depth in range(lower, upper.op_count):
        found = search.run(start, near, frozenset(targets), depth)
        if found is not None:
            logger.debug(
                "Exhaustive %s: %d ops (greedy %d, %d expansions)",
                spec.name, len(found) - width, upper.op_count, search.expansions,
            )
            return _realize_fundamentals(spec, found)
    return upper


def _realize_fundamentals(spec: CmBlockSpec, fundamentals: list[_Fundamental]) -> ShiftAddDag:
    builder = DagBuilder(spec.input_names)
    width = spec.shape[1]
    terms: list[Term] = []
    index: dict[Vector, int] = {}
    for i, f in enumerate(fundamentals):
        if i < width:
            position = f.vector.index(1)
            terms.append(Term(spec.input_names[position]))
        else:
            a = terms[f.a].shifted(f.sa)
            b = terms[f.b].shifted(f.sb)
            term = builder.pair(a, b.negated() if f.negative else b, rshift=f.rshift)
            # pair() may hand back a negated term; fold it so signals equal their vector
            if builder.vector(term) != f.vector:
                term = term.negated()
            terms.append(term)
        index[f.vector] = i
    outputs: list[tuple[str, Term | None]] = []
    for name, row in zip(spec.output_names, spec.coefficients):
        if not any(row):
            outputs.append((name, None))
            continue
        vec, shift, negate = normalize(tuple(row))
        term = terms[index[vec]].shifted(shift)
        outputs.append((name, term.negated() if negate else term))
    return builder.build(outputs)
