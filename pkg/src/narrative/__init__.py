"""Invariant means of mean-type mappings on directed networks.

The root of the incidence graph decides everything: when it is ergodic the
iterates converge to a common value that depends on root coordinates only;
otherwise a witness of non-uniqueness can be built.
"""

from .errors import (BudgetError, DomainError, GraphError, NarrativeError, NumericError, ParseError,
                     RefusalError, ValidationError)
from .graph import DiGraph, root, strongly_connected_components
from .kernel import BACKEND
from .mapping import AveragingSystem, Interval, apply, incidence_graph, restrict_to_root
from .means import BumpedArithmetic, PowerMean, Projection, WeightedArithmetic, build_bumped_mean
from .dynamics import estimate_invariant_mean, iterate, nonuniqueness_witness
from .stochastic import limit_matrix, to_matrix

__all__ = [
    "AveragingSystem", "BACKEND", "BudgetError", "BumpedArithmetic", "DiGraph", "DomainError", "GraphError",
    "Interval", "NarrativeError", "NumericError", "ParseError", "PowerMean", "Projection", "RefusalError",
    "ValidationError", "WeightedArithmetic", "apply", "build_bumped_mean", "estimate_invariant_mean",
    "incidence_graph", "iterate", "limit_matrix", "nonuniqueness_witness", "restrict_to_root", "root",
    "strongly_connected_components", "to_matrix",
]

__version__ = "0.1.0"
