"""Truncation formulas for measures of weak non-compactness.

Operator and nuclear norms of finite matrices between ``l^p`` spaces (exact in
the Hilbert case, certified brackets otherwise), compressions and block
structure, min-max evaluators for the truncation formulas in ``l^1``, ``c_0``,
spaces of nuclear operators and preduals of atomic von Neumann algebras.
"""
__version__ = "0.1.0"

from ._search import EnumerationLimitError
from .measures import (Interval, MeasureResult, OperatorFamily, ResidualCurve, c0_measure,
                       chi_sandwich, excess_to_truncation_space, family_from_dense,
                       l1_measure, nuclear_measure, residual_curve)
from .norms import (FiniteOperator, NormBracket, Reflexivity, op_norm_bracket,
                    op_norm_cert_upper, op_norm_exact_hilbert, reflexivity_class)
from .nuclear import (BlockSum, BlockSystem, NormConfig, RankOneRepresentation,
                      block_diagonal_part, block_nuclear_sum, block_system, compress,
                      nuclear_interval, nuclear_norm_bracket, nuclear_norm_exact_hilbert,
                      trace_pairing)
from .spaces import (Ambient, Exponent, FiniteVector, TruncationPair, VectorFamily, excess,
                     lp_norm, project, vector_norm)
from .vonneumann import (AtomSystem, CentralPartition, central_partition,
                         from_atom_coordinates, to_atom_coordinates, vn_block_compress,
                         vn_measure)

__all__ = [
    "Ambient", "AtomSystem", "BlockSum", "BlockSystem", "CentralPartition",
    "EnumerationLimitError", "Exponent", "FiniteOperator", "FiniteVector", "Interval",
    "MeasureResult", "NormBracket", "NormConfig", "OperatorFamily", "RankOneRepresentation",
    "Reflexivity", "ResidualCurve", "TruncationPair", "VectorFamily", "block_diagonal_part",
    "block_nuclear_sum", "block_system", "c0_measure", "central_partition", "chi_sandwich",
    "compress", "excess", "excess_to_truncation_space", "family_from_dense",
    "from_atom_coordinates", "l1_measure", "lp_norm", "nuclear_interval", "nuclear_measure",
    "nuclear_norm_bracket", "nuclear_norm_exact_hilbert", "op_norm_bracket",
    "op_norm_cert_upper", "op_norm_exact_hilbert", "project", "reflexivity_class",
    "residual_curve", "to_atom_coordinates", "trace_pairing", "vector_norm",
    "vn_block_compress", "vn_measure",
]
