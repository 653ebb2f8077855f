"""Pairwise global network alignment with Lagrangian upper and lower bounds."""

from .evaluate import EvalReport, coherence, edge_correctness, evaluate_alignment, generate_benchmark
from .exact_oracle import OracleBudgetError, solve_exact
from .graph_io import GraphFormatError, Network, SimilarityTable, parse_gml, parse_graphml, read_network
from .instance import (
    Alignment,
    AlignmentInstance,
    InvalidAlignmentError,
    build_instance,
    complete_instance,
    conserved_edges,
    score_alignment,
)
from .lagrange import MultiplierStore, SolverInvariantError, evaluate_ld
from .matching import BipartiteProblem, MatchingResult, solve_mwm, verify_certificate
from .solver import SolveReport, SolverParams, dual_descent, natalie, subgradient_opt

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "AlignmentInstance",
    "BipartiteProblem",
    "EvalReport",
    "GraphFormatError",
    "InvalidAlignmentError",
    "MatchingResult",
    "MultiplierStore",
    "Network",
    "OracleBudgetError",
    "SimilarityTable",
    "SolveReport",
    "SolverInvariantError",
    "SolverParams",
    "build_instance",
    "coherence",
    "complete_instance",
    "conserved_edges",
    "dual_descent",
    "edge_correctness",
    "evaluate_alignment",
    "evaluate_ld",
    "generate_benchmark",
    "natalie",
    "parse_gml",
    "parse_graphml",
    "read_network",
    "score_alignment",
    "solve_exact",
    "solve_mwm",
    "subgradient_opt",
    "verify_certificate",
]
