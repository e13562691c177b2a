"""Domain models package - exports the immutable synthesis types."""

from app.models.ann import ACTIVATIONS, AnnModel, AnnStructure, Dataset, LayerSpec
from app.models.cost import LEGAL_STYLES, Architecture, CostReport, MacSizes, MultStyle
from app.models.dag import AddNode, CmBlockSpec, McmTap, ShiftAddDag, Term
from app.models.fixed import CsdForm, FixedFormat, QuantizedAnn

__all__ = [
    "ACTIVATIONS",
    "AnnModel",
    "AnnStructure",
    "Dataset",
    "LayerSpec",
    "LEGAL_STYLES",
    "Architecture",
    "CostReport",
    "MacSizes",
    "MultStyle",
    "AddNode",
    "CmBlockSpec",
    "McmTap",
    "ShiftAddDag",
    "Term",
    "CsdForm",
    "FixedFormat",
    "QuantizedAnn",
]
