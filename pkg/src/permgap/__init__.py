"""Spectral gap bounds for ``(1 - r) M + r Q`` with ``M`` a uniform random permutation.

The bound is computed from ``Q`` alone: a trace-moment proxy for the norm of
the limiting free operator, the sparsity functional kappa, and the
row/column sum norm. Monte Carlo and quasi-tree tools check it.
"""

__version__ = "0.1.0"

from .certificate import Certificate, certify, certify_convex, classify_regime, epsilon
from .errors import ConvergenceError, RangeError, ValidationError
from .harness import default_ell, dump_spectrum, run_trials, second_eigmod
from .kappa import kappa, kappa_L, support_depth
from .matcore import (
    Permutation,
    SparseMatrix,
    build_P,
    build_sum,
    inf_norm_star,
    perfect_matching,
    rescale_for_convex,
    sample_permutation,
    validate_regular,
    zero_one_norm_star,
)
from .moments import phi_moment_table, rho_ell, rho_ell_convex, trace_table
from .quasitree import Simulator

__all__ = [
    "Certificate",
    "ConvergenceError",
    "Permutation",
    "RangeError",
    "Simulator",
    "SparseMatrix",
    "ValidationError",
    "build_P",
    "build_sum",
    "certify",
    "certify_convex",
    "classify_regime",
    "default_ell",
    "dump_spectrum",
    "epsilon",
    "inf_norm_star",
    "kappa",
    "kappa_L",
    "perfect_matching",
    "phi_moment_table",
    "rescale_for_convex",
    "rho_ell",
    "rho_ell_convex",
    "run_trials",
    "sample_permutation",
    "second_eigmod",
    "support_depth",
    "trace_table",
    "validate_regular",
    "zero_one_norm_star",
]
