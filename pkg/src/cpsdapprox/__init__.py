"""Low-cpsd-rank approximation of completely positive semidefinite matrices."""
from .caratheodory import CarathResult, carath_bound, low_rank_psd_approx
from .exceptions import (
    BoundViolationError,
    CompressionError,
    ConvergenceError,
    CpsdError,
    EpsilonRangeError,
    NotPsdError,
    RetryExhaustedError,
)
from .generators import (
    cp_geometric_instance,
    identity_instance,
    projection_instance,
    random_diagonal_instance,
    random_psd_instance,
)
from .jl import JlResult, PointSet, jl_dimension, jl_project, verify_jl
from .linalg import (
    EigenDecomp,
    block_diag_sum,
    frobenius,
    hermitian_embed,
    is_psd,
    numerical_rank,
    sym_eig,
    trace_inner,
)
from .pipeline import (
    ApproxParams,
    ApproxReport,
    approximate,
    approximate_cp,
    crossover_n,
    epsilon1,
    epsilon2,
    rank_bounds,
    sqrt_ineq_check,
    stage1,
    stage2,
)
from .rep import (
    CpsdInstance,
    GramRep,
    compress_rep,
    gram,
    gram_rank_of_rep,
    instance_add,
    instance_scale,
    rep_side,
)

__version__ = "0.1.0"
