"""Shift-add DAG construction, digit-based recoding and DAG analysis."""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence

import networkx as nx
import numpy as np

from app.models.dag import AddNode, CmBlockSpec, ShiftAddDag, Term
from app.services.fixedpoint import to_csd

logger = logging.getLogger(__name__)

Vector = tuple[int, ...]


class ShiftAddError(ValueError):
    """Raised when a constant-multiplication block cannot be synthesized."""


class SearchEffortExceeded(ShiftAddError):
    """Raised when exhaustive search runs past its expansion budget."""


# ---------------------------------------------------------------------------
# Builder
# ---------------------------------------------------------------------------


class DagBuilder:
    """Incremental adder-graph construction with coefficient tracking.

    Every signal carries its integer coefficient vector over the inputs, so the
    realized linear form of any term is known while building.
    """

    def __init__(self, inputs: Sequence[str], hashing: bool = False) -> None:
        self.inputs = tuple(inputs)
        self.hashing = hashing
        self._nodes: list[AddNode] = []
        self._vectors: dict[str, Vector] = {}
        self._cache: dict[tuple, str] = {}
        width = len(self.inputs)
        for i, name in enumerate(self.inputs):
            self._vectors[name] = tuple(1 if j == i else 0 for j in range(width))

    @property
    def op_count(self) -> int:
        return len(self._nodes)

    def vector(self, term: Term | None) -> Vector:
        if term is None:
            return tuple(0 for _ in self.inputs)
        base = self._vectors[term.ref]
        sign = -1 if term.negate else 1
        return tuple(sign * (c << term.shift) for c in base)

    def pair(self, a: Term, b: Term, rshift: int = 0) -> Term:
        """Term for ``(a + b) >> rshift`` using one add/sub node.

        Common left shifts are factored out of the node and negations are
        folded into the op, so node operands are never negated.
        """
        common = min(a.shift, b.shift)
        a0 = Term(a.ref, a.shift - common, a.negate)
        b0 = Term(b.ref, b.shift - common, b.negate)
        taken = min(common, rshift)
        out_shift, node_rshift = common - taken, rshift - taken
        negate = False
        if a0.negate and b0.negate:
            op, left, right, negate = "add", a0.negated(), b0.negated(), True
        elif a0.negate:
            op, left, right = "sub", b0, a0.negated()
        elif b0.negate:
            op, left, right = "sub", a0, b0.negated()
        else:
            op, left, right = "add", a0, b0
        if op == "add" and (right.ref, right.shift) < (left.ref, left.shift):
            left, right = right, left
        name = self._node(op, left, right, node_rshift)
        return Term(name, out_shift, negate)

    def _node(self, op: str, left: Term, right: Term, rshift: int) -> str:
        key = (op, left, right, rshift)
        if self.hashing and key in self._cache:
            return self._cache[key]
        name = f"n{len(self._nodes)}"
        lv, rv = self.vector(left), self.vector(right)
        raw = [l + r if op == "add" else l - r for l, r in zip(lv, rv)]
        if any(c % (1 << rshift) for c in raw):
            raise ShiftAddError(f"node {name}: right shift by {rshift} is not exact")
        self._nodes.append(AddNode(name, op, left, right, rshift))
        self._vectors[name] = tuple(c >> rshift for c in raw)
        self._cache[key] = name
        return name

    def combine(self, terms: Sequence[Term]) -> Term | None:
        """Sum of ``terms`` as a balanced tree of pairwise nodes (len - 1 ops)."""
        level = list(terms)
        if not level:
            return None
        while len(level) > 1:
            merged = [self.pair(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
            if len(level) % 2:
                merged.append(level[-1])
            level = merged
        return level[0]

    def build(self, outputs: Sequence[tuple[str, Term | None]]) -> ShiftAddDag:
        """Drop nodes no output depends on and rename the rest t1..tN."""
        by_name = {node.name: node for node in self._nodes}
        live: set[str] = set()
        stack = [term.ref for _, term in outputs if term is not None]
        while stack:
            ref = stack.pop()
            if ref in live or ref not in by_name:
                continue
            live.add(ref)
            node = by_name[ref]
            stack.extend((node.left.ref, node.right.ref))
        renamed: dict[str, str] = {}
        nodes: list[AddNode] = []
        for node in self._nodes:
            if node.name not in live:
                continue
            renamed[node.name] = f"t{len(nodes) + 1}"
            nodes.append(
                AddNode(
                    renamed[node.name],
                    node.op,
                    _rename(node.left, renamed),
                    _rename(node.right, renamed),
                    node.rshift,
                )
            )
        return ShiftAddDag(
            inputs=self.inputs,
            nodes=tuple(nodes),
            outputs=tuple(
                (name, None if term is None else _rename(term, renamed))
                for name, term in outputs
            ),
        )


def _rename(term: Term, renamed: Mapping[str, str]) -> Term:
    return Term(renamed.get(term.ref, term.ref), term.shift, term.negate)


def csd_terms(ref: str, value: int) -> list[Term]:
    """One shifted (possibly negated) term of ``ref`` per nonzero CSD digit."""
    return [Term(ref, pos, sign < 0) for pos, sign in to_csd(value).terms()]


# ---------------------------------------------------------------------------
# Digit-based recoding
# ---------------------------------------------------------------------------


def synth_dbr(spec: CmBlockSpec) -> ShiftAddDag:
    """Direct shift-add realization from the CSD digits, no sharing.

    Each row with T nonzero digits costs exactly max(T - 1, 0) operations.
    """
    builder = DagBuilder(spec.input_names)
    outputs: list[tuple[str, Term | None]] = []
    for out_name, row in zip(spec.output_names, spec.coefficients):
        terms = [t for ref, c in zip(spec.input_names, row) for t in csd_terms(ref, c)]
        flip = bool(terms) and terms[0].negate
        if flip:
            terms = [t.negated() for t in terms]
        term = builder.combine(terms)
        outputs.append((out_name, term.negated() if flip and term is not None else term))
    dag = builder.build(outputs)
    logger.debug("DBR %s: %d ops", spec.name, dag.op_count)
    return dag


# ---------------------------------------------------------------------------
# Analysis
# ---------------------------------------------------------------------------


def dag_graph(dag: ShiftAddDag) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(dag.inputs)
    for node in dag.nodes:
        graph.add_node(node.name)
        graph.add_edge(node.left.ref, node.name)
        graph.add_edge(node.right.ref, node.name)
    return graph


def adder_depth(dag: ShiftAddDag) -> int:
    """Add/sub-to-add/sub dependencies on the longest chain of operations.

    Edges from inputs are not counted, so an empty DAG and a lone adder both
    have depth 0 and the chain s -> t -> y1 -> y2 has depth 3.
    """
    if not dag.nodes:
        return 0
    graph = dag_graph(dag)
    if not nx.is_directed_acyclic_graph(graph):
        raise ShiftAddError("shift-add graph contains a cycle")
    adders = graph.subgraph(node.name for node in dag.nodes)
    return int(nx.dag_longest_path_length(adders))


def _term_vector(vectors: Mapping[str, Vector], term: Term) -> Vector:
    if term.ref not in vectors:
        raise ShiftAddError(f"reference to undefined signal {term.ref!r}")
    sign = -1 if term.negate else 1
    return tuple(sign * (c << term.shift) for c in vectors[term.ref])


def node_vectors(dag: ShiftAddDag) -> dict[str, Vector]:
    """Coefficient vector of every input and node signal."""
    width = len(dag.inputs)
    vectors: dict[str, Vector] = {
        name: tuple(1 if j == i else 0 for j in range(width)) for i, name in enumerate(dag.inputs)
    }
    for node in dag.nodes:
        lv, rv = _term_vector(vectors, node.left), _term_vector(vectors, node.right)
        raw = [l + r if node.op == "add" else l - r for l, r in zip(lv, rv)]
        if any(c % (1 << node.rshift) for c in raw):
            raise ShiftAddError(f"node {node.name}: inexact right shift")
        vectors[node.name] = tuple(c >> node.rshift for c in raw)
    return vectors


def dag_coefficients(dag: ShiftAddDag) -> dict[str, Vector]:
    """Integer coefficient vector of every output, by symbolic propagation."""
    width = len(dag.inputs)
    vectors = node_vectors(dag)
    return {
        name: tuple(0 for _ in range(width)) if term is None else _term_vector(vectors, term)
        for name, term in dag.outputs
    }


def evaluate_dag(dag: ShiftAddDag, inputs: Mapping[str, int] | Sequence[int]) -> dict[str, int]:
    """Integer value of every output for concrete input values."""
    if not isinstance(inputs, Mapping):
        inputs = dict(zip(dag.inputs, inputs))
    values: dict[str, int] = {name: int(inputs[name]) for name in dag.inputs}

    def term_value(term: Term) -> int:
        v = values[term.ref] << term.shift
        return -v if term.negate else v

    for node in dag.nodes:
        left, right = term_value(node.left), term_value(node.right)
        raw = left + right if node.op == "add" else left - right
        values[node.name] = raw >> node.rshift
    return {name: 0 if term is None else term_value(term) for name, term in dag.outputs}


def verify_dag(dag: ShiftAddDag, spec: CmBlockSpec, trials: int = 1000, seed: int = 0) -> bool:
    """Symbolic equivalence plus ``trials`` random integer evaluations."""
    if tuple(dag.inputs) != spec.input_names:
        return False
    if [name for name, _ in dag.outputs] != list(spec.output_names):
        return False
    try:
        realized = dag_coefficients(dag)
    except ShiftAddError:
        return False
    for name, row in zip(spec.output_names, spec.coefficients):
        if realized[name] != tuple(row):
            return False
    if trials <= 0:
        return True
    rng = np.random.default_rng(seed)
    samples = rng.integers(-(1 << 15), 1 << 15, size=(trials, len(dag.inputs)))
    for sample in samples:
        x = [int(v) for v in sample]
        got = evaluate_dag(dag, x)
        for name, row in zip(spec.output_names, spec.coefficients):
            if got[name] != sum(c * v for c, v in zip(row, x)):
                return False
    return True


def format_term(term: Term) -> str:
    text = term.ref if term.shift == 0 else f"({term.ref} << {term.shift})"
    return f"-{text}" if term.negate else text


def dag_listing(dag: ShiftAddDag) -> str:
    """Plain-text export, one node per line, then the output bindings."""
    lines = [f"# inputs: {' '.join(dag.inputs)}", f"# ops: {dag.op_count}"]
    for node in dag.nodes:
        sign = "+" if node.op == "add" else "-"
        expr = f"{format_term(node.left)} {sign} {format_term(node.right)}"
        if node.rshift:
            expr = f"({expr}) >> {node.rshift}"
        lines.append(f"{node.name} = {expr}")
    for name, term in dag.outputs:
        lines.append(f"{name} = {'0' if term is None else format_term(term)}")
    return "\n".join(lines) + "\n"
