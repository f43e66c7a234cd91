"""Exact two-dimensional Schur numbers S(r, k) with certificates."""

from .core import (
    INTEGERS,
    AmbientGroup,
    Coloring,
    Enumeration,
    Prefix,
    ResourceLimitError,
    SchurConfiguration,
    SchurWitness,
    StructuralError,
    add,
    enumerate_configurations,
    find_witness,
    is_valid_coloring,
    oracle_count_valid,
    verify_witness,
)
from .solver import (
    Budget,
    BudgetExceeded,
    SchurNumberResult,
    SolverStats,
    compute_schur_number,
    count_valid_colorings,
    parallel_compute,
    search_valid_coloring,
)

__version__ = "0.1.0"
