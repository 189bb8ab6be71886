"""Sparse preconditioner toolkit: IC(0) factors optimized by gradient
descent on unweighted vs. inverse-weighted Frobenius objectives, with
spectral diagnostics and a PCG solver."""

from .ic0 import ic0_factorize
from .objective import (TrainConfig, TrainReport, loss_gradient_probe,
                        loss_probe, train)
from .problem import (CoefficientField, GridSpec, ProbeSet, assemble_fvm,
                      attach_solutions, gaussian_random_field, sample_probes)
from .solver import pcg, pcg_detailed
from .sparse import (CsrMatrix, DimensionMismatchError, FactorBreakdownError,
                     LowerFactor, factor_product, frob_norm_sq, lower_apply,
                     lower_solve, spmv, upper_apply, upper_solve)
from .spectral import (EigenPair, ModeEnergies, condition_number,
                       eigen_histogram, mode_energies, precond_spectrum,
                       sym_eig, verify_lemma, theorem_bound)

__all__ = [
    "CsrMatrix", "LowerFactor", "DimensionMismatchError", "FactorBreakdownError",
    "spmv", "lower_apply", "upper_apply", "lower_solve", "upper_solve",
    "factor_product", "frob_norm_sq",
    "GridSpec", "CoefficientField", "ProbeSet",
    "gaussian_random_field", "assemble_fvm", "sample_probes", "attach_solutions",
    "ic0_factorize",
    "TrainConfig", "TrainReport", "loss_probe", "loss_gradient_probe", "train",
    "EigenPair", "ModeEnergies", "sym_eig", "mode_energies",
    "verify_lemma", "theorem_bound", "precond_spectrum",
    "condition_number", "eigen_histogram",
    "pcg", "pcg_detailed",
]

__version__ = "0.1.0"
