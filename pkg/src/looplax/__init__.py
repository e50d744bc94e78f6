"""looplax: truncated matrix loop-series algebra, dressing hierarchies, and
a Birkhoff-factorization solver for the combined hierarchy and its plain and
strict sub-hierarchies."""

from . import errors
from .scalars import (
    DerivationSymbol,
    DiffPoly,
    GaussianRational,
    I,
    Indeterminate,
)
from .loops import (
    LoopSeries,
    Region,
    Window,
    conjugate,
    exp_neg,
    log_unip,
)
from .hierarchy import (
    AknsReport,
    CommutativeFrame,
    Deformation,
    HierarchyKind,
    akns_frame,
    akns_reduce,
    corollary_lax_derivative,
    corollary_part,
    corollary_residual,
    cutoff,
    cutoff_lax_derivative,
    deform,
    frame_conjugate,
    lax_residual,
    lax_rhs,
    make_frame,
    zc_residual,
    zero_time_normalize,
)
from .linearize import (
    ExponentVector,
    FlowRecord,
    OscillatingMatrix,
    Side,
    extract_connection,
)
from .solver import (
    AnnulusLoop,
    HierarchySolution,
    SolverParams,
    VerifyReport,
    WaveMatrixPair,
    birkhoff_factorize,
    build_wave_pair,
    delta_twist,
    extract_solution,
    fd_verify,
    gamma_eval,
    random_loop,
    reduce_subhierarchy,
)

__version__ = "0.1.0"

__all__ = [
    "errors",
    "GaussianRational",
    "I",
    "DerivationSymbol",
    "Indeterminate",
    "DiffPoly",
    "Window",
    "Region",
    "LoopSeries",
    "exp_neg",
    "log_unip",
    "conjugate",
    "HierarchyKind",
    "CommutativeFrame",
    "make_frame",
    "akns_frame",
    "Deformation",
    "deform",
    "cutoff",
    "corollary_part",
    "lax_rhs",
    "cutoff_lax_derivative",
    "corollary_lax_derivative",
    "lax_residual",
    "zc_residual",
    "corollary_residual",
    "AknsReport",
    "akns_reduce",
    "frame_conjugate",
    "zero_time_normalize",
    "Side",
    "FlowRecord",
    "ExponentVector",
    "OscillatingMatrix",
    "extract_connection",
    "SolverParams",
    "AnnulusLoop",
    "WaveMatrixPair",
    "HierarchySolution",
    "VerifyReport",
    "random_loop",
    "gamma_eval",
    "delta_twist",
    "birkhoff_factorize",
    "build_wave_pair",
    "extract_solution",
    "fd_verify",
    "reduce_subhierarchy",
]
