"""Numerical calculus for weight sequences, weight functions and their Koethe sequence spaces."""

__version__ = "0.1.0"

from .numerics import DEFAULT_GRID, ExtendedReal, LogGrid, make_log_grid  # noqa: E402
from .verdict import ConditionVerdict, Status  # noqa: E402
from .sequences import WeightSequence, associated_function, gevrey_sequence  # noqa: E402
from .weights import WeightFunction, evaluate  # noqa: E402
from .conjugation import ConjugateTable, biconjugate_check, young_conjugate  # noqa: E402
from .bridge import sequence_from_weight, sequence_from_weight_product_form  # noqa: E402
from .koethe import KoetheMatrix, NuclearityStatus, build_matrix, gp_nuclearity, gp_series_test  # noqa: E402

__all__ = [
    "__version__", "DEFAULT_GRID", "ExtendedReal", "LogGrid", "make_log_grid", "ConditionVerdict", "Status",
    "WeightSequence", "associated_function", "gevrey_sequence", "WeightFunction", "evaluate",
    "ConjugateTable", "biconjugate_check", "young_conjugate", "sequence_from_weight",
    "sequence_from_weight_product_form", "KoetheMatrix", "NuclearityStatus", "build_matrix", "gp_nuclearity",
    "gp_series_test",
]
