"""Complex Schur decomposition by a shifted QR iteration with guaranteed convergence.

The iteration works on upper Hessenberg matrices.  Each step picks a shift
from the Ritz values of the trailing corner (or, when that stalls, from a
finite net of exceptional shifts) so that the geometric mean of the last
``k`` subdiagonal entries shrinks by a fixed factor.
"""
from .driver import (
    DecouplingTimeout,
    IterationTrace,
    JsonlSink,
    ListSink,
    SchurResult,
    SolveReport,
    deflate,
    perturb,
    schur,
    solve_block,
)
from .hessenberg import (
    HessenbergMatrix,
    NonFiniteError,
    ShiftPolynomial,
    StrategyConfig,
    corner,
    decoupling_check,
    hessenberg_reduce,
    last_row_poly_apply,
    potential,
)
from .io import MatrixFormatError, read_matrix, write_matrix
from .iqr import FlopCounter, QrStepResult, inverse_row_norm, iqr_step, single_shift_step, tau
from .ritz import RitzCertificationError, RitzSet, opt_ritz, small_eig
from .strategy import (
    ExceptionalNet,
    NoCandidateSucceeded,
    ShiftDecision,
    ShiftKind,
    exceptional_net,
    find_promising,
    sh_step,
)

__version__ = "0.1.0"

__all__ = [
    "DecouplingTimeout",
    "ExceptionalNet",
    "FlopCounter",
    "HessenbergMatrix",
    "IterationTrace",
    "JsonlSink",
    "ListSink",
    "MatrixFormatError",
    "NoCandidateSucceeded",
    "NonFiniteError",
    "QrStepResult",
    "RitzCertificationError",
    "RitzSet",
    "SchurResult",
    "ShiftDecision",
    "ShiftKind",
    "ShiftPolynomial",
    "SolveReport",
    "StrategyConfig",
    "corner",
    "decoupling_check",
    "deflate",
    "exceptional_net",
    "find_promising",
    "hessenberg_reduce",
    "inverse_row_norm",
    "iqr_step",
    "last_row_poly_apply",
    "opt_ritz",
    "perturb",
    "potential",
    "read_matrix",
    "schur",
    "sh_step",
    "single_shift_step",
    "small_eig",
    "solve_block",
    "tau",
    "write_matrix",
]
