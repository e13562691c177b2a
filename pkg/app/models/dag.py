"""Shift-add intermediate representation and constant-multiplication blocks."""

from __future__ import annotations

from dataclasses import dataclass, field

BLOCK_KINDS = ("scm", "mcm", "cavm", "cmvm")


@dataclass(frozen=True, slots=True)
class Term:
    """Reference to an input or node, left-shifted and optionally negated."""

    ref: str
    shift: int = 0
    negate: bool = False

    def __post_init__(self) -> None:
        if self.shift < 0:
            raise ValueError(f"term shift must be non-negative, got {self.shift}")

    def negated(self) -> Term:
        return Term(self.ref, self.shift, not self.negate)

    def shifted(self, amount: int) -> Term:
        return Term(self.ref, self.shift + amount, self.negate)


@dataclass(frozen=True, slots=True)
class AddNode:
    """``name = (left op right) >> rshift``; the right shift is always exact."""

    name: str
    op: str
    left: Term
    right: Term
    rshift: int = 0

    def __post_init__(self) -> None:
        if self.op not in ("add", "sub"):
            raise ValueError(f"node op must be 'add' or 'sub', got {self.op!r}")


@dataclass(frozen=True)
class ShiftAddDag:
    """Ordered adder graph; every node only references inputs or earlier nodes.

    ``outputs`` keeps the output order; a ``None`` term is a constant-zero output.
    """

    inputs: tuple[str, ...]
    nodes: tuple[AddNode, ...]
    outputs: tuple[tuple[str, Term | None], ...]

    @property
    def op_count(self) -> int:
        return len(self.nodes)

    def output_map(self) -> dict[str, Term | None]:
        return dict(self.outputs)

    def node_names(self) -> list[str]:
        return [node.name for node in self.nodes]


@dataclass(frozen=True, slots=True)
class McmTap:
    """Where the product ``w[neuron][input] * x`` is taken from an MCM block.

    ``const_index`` selects the odd constant, which is shifted left by ``shift``
    and negated when ``negative``. Zero weights have no tap.
    """

    neuron: int
    input: int
    const_index: int
    shift: int
    negative: bool


@dataclass(frozen=True)
class CmBlockSpec:
    """Constant-multiplication block ``y = C x`` with ``C`` of shape m x n.

    scm is 1x1, mcm is m x 1 (many constants, one variable), cavm is 1 x n
    (one inner product) and cmvm is the general matrix.
    """

    kind: str
    coefficients: tuple[tuple[int, ...], ...]
    name: str = "blk"
    taps: tuple[McmTap, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.kind not in BLOCK_KINDS:
            raise ValueError(f"unknown block kind {self.kind!r}; expected one of {BLOCK_KINDS}")
        if not self.coefficients or not self.coefficients[0]:
            raise ValueError("coefficient matrix must be non-empty")
        width = len(self.coefficients[0])
        if any(len(row) != width for row in self.coefficients):
            raise ValueError("coefficient matrix rows differ in length")
        m, n = self.shape
        if self.kind == "scm" and (m, n) != (1, 1):
            raise ValueError(f"scm block must be 1x1, got {m}x{n}")
        if self.kind == "mcm" and n != 1:
            raise ValueError(f"mcm block must have a single input column, got {m}x{n}")
        if self.kind == "cavm" and m != 1:
            raise ValueError(f"cavm block must have a single row, got {m}x{n}")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.coefficients), len(self.coefficients[0])

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(f"x{i + 1}" for i in range(self.shape[1]))

    @property
    def output_names(self) -> tuple[str, ...]:
        return tuple(f"y{i + 1}" for i in range(self.shape[0]))

    @classmethod
    def from_rows(cls, rows: list[list[int]], kind: str | None = None, name: str = "blk") -> CmBlockSpec:
        """Build a spec, inferring the kind from the shape when not given."""
        coefficients = tuple(tuple(int(c) for c in row) for row in rows)
        if kind is None:
            m, n = len(coefficients), len(coefficients[0]) if coefficients else 0
            if m == 1 and n == 1:
                kind = "scm"
            elif n == 1:
                kind = "mcm"
            elif m == 1:
                kind = "cavm"
            else:
                kind = "cmvm"
        return cls(kind=kind, coefficients=coefficients, name=name)
