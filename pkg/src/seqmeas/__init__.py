"""Exact statistics of consecutive quantum measurements on finite systems.

The package computes outcome-sequence probabilities from interfering path
amplitudes, cross-validates them against explicit unitary simulation of
system+probe composites (discrete gate registers and von Neumann
pointers), and provides the joint- and weak-measurement analyses built on
top: backward/forward conjugated observables whose insertion leaves all
statistics unchanged, overlapping measurements of non-commuting qubit
operators, and weakly coupled probes whose mean readings are amplitude
ratios.
"""

from . import generators, hilbert, joint, paths, probes, reality, weak
from .errors import (
    BadInterval,
    DimensionOverflow,
    NotHermitian,
    ParseError,
    PostSelectionImpossible,
    QuadratureNotConverged,
    SeqMeasError,
    ValidationError,
    ZeroDenominator,
)
from .hilbert import (
    DEFAULT_DEGENERACY_TOL,
    Evolution,
    Observable,
    evolve,
    expi_hermitian,
    spectral_decompose,
    tensor,
    tensor_vec,
)
from .paths import (
    PATH_ENUMERATION_CAP,
    ProbabilityTable,
    Schedule,
    elementary_amplitude,
    insert_observable,
    probability_table,
    sample_outcomes,
    virtual_amplitude,
)

__all__ = [
    "BadInterval",
    "DimensionOverflow",
    "NotHermitian",
    "ParseError",
    "PostSelectionImpossible",
    "QuadratureNotConverged",
    "SeqMeasError",
    "ValidationError",
    "ZeroDenominator",
    "DEFAULT_DEGENERACY_TOL",
    "Evolution",
    "Observable",
    "evolve",
    "expi_hermitian",
    "spectral_decompose",
    "tensor",
    "tensor_vec",
    "PATH_ENUMERATION_CAP",
    "ProbabilityTable",
    "Schedule",
    "elementary_amplitude",
    "insert_observable",
    "probability_table",
    "sample_outcomes",
    "virtual_amplitude",
]

__version__ = "0.1.0"
