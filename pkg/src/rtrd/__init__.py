"""Tensor-ring decomposition with randomized per-mode sketching."""

from .ring import (
    TRFactors,
    compression_ratio,
    num_params,
    random_factors,
    read_trng,
    reconstruct_elementwise,
    reconstruct_full,
    subchain,
    write_trng,
)
from .sketch import ProjectionSpec, SketchResult, back_project, gaussian_matrix, rtrals, rtrd, rtrsvd, sketch
from .solvers import DivergenceError, SolveReport, SolverConfig, rse, trals, trsgd, trsvd
from .tensor import (
    FormatError,
    fold_classic,
    fold_tr,
    frobenius_norm,
    inner_product,
    mode_n_product,
    read_dten,
    unfold_classic,
    unfold_tr,
    write_dten,
)

__version__ = "0.1.0"
