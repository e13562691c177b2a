"""Multiplierless synthesis of the constant multiplications in a network layer."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from app.config import settings
from app.models.cost import LEGAL_STYLES, Architecture, MultStyle
from app.models.dag import CmBlockSpec, McmTap, ShiftAddDag
from app.models.fixed import QuantizedAnn
from app.services.adder_graph import (
    SearchEffortExceeded,
    ShiftAddError,
    adder_depth,
    dag_coefficients,
    dag_listing,
    evaluate_dag,
    synth_dbr,
    verify_dag,
)
from app.services.cse import exhaustive_cse, greedy_cse, normalize
from app.services.fixedpoint import largest_left_shift

logger = logging.getLogger(__name__)

EFFORTS = ("greedy", "exhaustive")

# Exhaustive search limits
EXHAUSTIVE_MAX_CONSTANTS = 4
EXHAUSTIVE_MAX_BITS = 8
EXHAUSTIVE_MAX_DIM = 2


def exhaustive_admissible(spec: CmBlockSpec) -> bool:
    """Small enough for exhaustive search.

    scm/mcm: at most 4 distinct odd constants of at most 8 bits; cavm/cmvm: at
    most 2 x 2.
    """
    m, n = spec.shape
    if spec.kind in ("scm", "mcm"):
        odd = {normalize((row[0],))[0][0] for row in spec.coefficients if row[0]}
        return len(odd) <= EXHAUSTIVE_MAX_CONSTANTS and all(
            c.bit_length() <= EXHAUSTIVE_MAX_BITS for c in odd
        )
    return m <= EXHAUSTIVE_MAX_DIM and n <= EXHAUSTIVE_MAX_DIM


def optimize_cse(
    spec: CmBlockSpec,
    effort: str = "greedy",
    budget: int | None = None,
) -> ShiftAddDag:
    """Shared-subexpression DAG never worse than digit-based recoding.

    Exhaustive effort is minimal when the search finishes within ``budget``
    expansions; otherwise the greedy DAG is kept and a warning logged.
    """
    if effort not in EFFORTS:
        raise ShiftAddError(f"unknown effort {effort!r}; expected one of {EFFORTS}")
    dbr = synth_dbr(spec)
    dag = greedy_cse(spec)
    if dbr.op_count < dag.op_count:
        dag = dbr
    if effort == "exhaustive":
        if not exhaustive_admissible(spec):
            m, n = spec.shape
            raise ShiftAddError(
                f"block {spec.name} ({spec.kind} {m}x{n}) is too large for exhaustive search; "
                "use greedy effort"
            )
        try:
            dag = exhaustive_cse(spec, budget or settings.SEARCH_BUDGET, upper=dag)
        except SearchEffortExceeded as exc:
            logger.warning("Block %s: %s; keeping the %d-op greedy DAG", spec.name, exc, dag.op_count)
    logger.debug("CSE %s (%s): %d ops, DBR %d", spec.name, effort, dag.op_count, dbr.op_count)
    return dag


# ---------------------------------------------------------------------------
# Layer blocks
# ---------------------------------------------------------------------------


def check_style(arch: Architecture | str, mult_style: MultStyle | str) -> tuple[Architecture, MultStyle]:
    arch, mult_style = Architecture(arch), MultStyle(mult_style)
    if arch is Architecture.SMAC_ANN and mult_style is not MultStyle.BEHAVIORAL:
        raise ShiftAddError(
            "multiplierless smac_ann is not supported; use the behavioral multiplier"
        )
    if mult_style not in LEGAL_STYLES[arch]:
        legal = ", ".join(s.value for s in LEGAL_STYLES[arch])
        raise ShiftAddError(f"{arch.value} supports mult styles {legal}, not {mult_style.value}")
    return arch, mult_style


def mcm_block(weights: list[list[int]] | tuple, name: str) -> CmBlockSpec | None:
    """MCM over the distinct odd magnitudes of a weight matrix.

    Constants are listed in first-appearance order (neuron-major); every
    nonzero weight becomes a tap with its shift and sign.
    """
    constants: list[int] = []
    taps: list[McmTap] = []
    for m, row in enumerate(weights):
        for n, w in enumerate(row):
            if w == 0:
                continue
            shift = largest_left_shift(w)
            odd = abs(w) >> shift
            if odd not in constants:
                constants.append(odd)
            taps.append(McmTap(m, n, constants.index(odd), shift, w < 0))
    if not constants:
        return None
    return CmBlockSpec(
        kind="mcm",
        coefficients=tuple((c,) for c in constants),
        name=name,
        taps=tuple(taps),
    )


def layer_blocks(
    arch: Architecture | str,
    mult_style: MultStyle | str,
    qa: QuantizedAnn,
    layer: int,
) -> list[CmBlockSpec]:
    """Constant-multiplication blocks realizing layer ``layer`` (0-based)."""
    arch, mult_style = check_style(arch, mult_style)
    if not 0 <= layer < qa.structure.num_layers:
        raise ShiftAddError(f"layer index {layer} out of range")
    matrix = qa.int_weights[layer]
    prefix = f"l{layer + 1}"
    if mult_style is MultStyle.CAVM:
        return [
            CmBlockSpec(kind="cavm", coefficients=(tuple(row),), name=f"{prefix}_n{m}")
            for m, row in enumerate(matrix)
        ]
    if mult_style is MultStyle.CMVM:
        return [CmBlockSpec(kind="cmvm", coefficients=tuple(tuple(r) for r in matrix), name=prefix)]
    if mult_style is MultStyle.MCM:
        block = mcm_block(matrix, f"{prefix}_mcm")
        return [] if block is None else [block]
    return []


# ---------------------------------------------------------------------------
# Block synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BlockResult:
    spec: CmBlockSpec
    dag: ShiftAddDag
    dbr_ops: int
    verified: bool

    @property
    def ops(self) -> int:
        return self.dag.op_count

    @property
    def depth(self) -> int:
        return adder_depth(self.dag)


def synthesize_block(
    spec: CmBlockSpec,
    effort: str = "greedy",
    trials: int = 100,
    seed: int = 0,
    budget: int | None = None,
) -> BlockResult:
    """Optimize a block and check the DAG against its coefficients."""
    dag = optimize_cse(spec, effort, budget=budget)
    verified = verify_dag(dag, spec, trials=trials, seed=seed)
    if not verified:
        raise ShiftAddError(f"block {spec.name}: synthesized DAG failed equivalence check")
    return BlockResult(spec=spec, dag=dag, dbr_ops=synth_dbr(spec).op_count, verified=verified)


def synthesize_layers(
    arch: Architecture | str,
    mult_style: MultStyle | str,
    qa: QuantizedAnn,
    effort: str = "greedy",
    trials: int = 100,
    seed: int = 0,
) -> list[list[BlockResult]]:
    """Block results per layer; empty lists for behavioral multipliers."""
    results = [
        [
            synthesize_block(spec, effort, trials=trials, seed=seed)
            for spec in layer_blocks(arch, mult_style, qa, k)
        ]
        for k in range(qa.structure.num_layers)
    ]
    total = sum(r.ops for layer in results for r in layer)
    logger.info("Shift-add synthesis (%s/%s, %s): %d ops", arch, mult_style, effort, total)
    return results


def summarize_results(results: list[BlockResult]) -> list[dict]:
    return [
        {
            "block": r.spec.name,
            "kind": r.spec.kind,
            "shape": list(r.spec.shape),
            "dbr_ops": r.dbr_ops,
            "ops": r.ops,
            "depth": r.depth,
        }
        for r in results
    ]


def block_summary(specs: list[CmBlockSpec], effort: str = "greedy", trials: int = 100) -> list[dict]:
    """Op counts and adder depths per block."""
    return summarize_results([synthesize_block(spec, effort, trials=trials) for spec in specs])


__all__ = [
    "EFFORTS",
    "BlockResult",
    "SearchEffortExceeded",
    "ShiftAddError",
    "adder_depth",
    "block_summary",
    "check_style",
    "dag_coefficients",
    "dag_listing",
    "evaluate_dag",
    "exhaustive_admissible",
    "layer_blocks",
    "mcm_block",
    "summarize_results",
    "optimize_cse",
    "synth_dbr",
    "synthesize_block",
    "synthesize_layers",
    "verify_dag",
]
