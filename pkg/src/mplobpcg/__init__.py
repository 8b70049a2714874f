"""Mixed-precision PINVIT and LOBPCG eigensolvers.

The smallest eigenpairs of a Hermitian positive definite matrix are
computed in binary64 while the Cholesky preconditioner, the first LOBPCG
stage and the first QR stage run in binary32.
"""
from ._backend import COMPILED, NAME as BACKEND
from .analysis import (
    BoundReport,
    accuracy_floor,
    beta,
    bound_report,
    epsilon_A,
    epsilon_r,
    epsilon_T,
    epsilon_T_bound,
    gamma_n,
    gamma_total,
    measure_gamma_precond,
    rate_bound,
)
from .dense import (
    EigDecomposition,
    TriMode,
    block_rayleigh,
    dense_cholesky,
    herm_product,
    rayleigh_quotient,
    rayleigh_ritz,
    small_herm_eig,
    spectral_norm_estimate,
    tri_solve,
)
from .eigensolvers import (
    EigResult,
    IterationRecord,
    SolverConfig,
    Variant,
    converged_count,
    hl_update,
    lobpcg_stage,
    mixed_lobpcg,
    pinvit,
    solve,
)
from .errors import *  # noqa: F401,F403
from .generators import gen_kernel, gen_laplace2d, laplace2d_eigenvalues
from .mmio import read_matrix_market, write_matrix_market
from .ortho import QrFactors, block_project_out, cholesky_qr, householder_qr, mixed_qr
from .precision import LOWER, U_LOWER, U_WORKING, WORKING, Precision, to_lower, to_precision, to_working
from .precond import Preconditioner, PrecondKind
from .sparse import CsrMatrix, SparseChol, bandwidth, rcm_ordering, sparse_cholesky, sparse_tri_solve, spmv_block

__version__ = "0.1.0"
