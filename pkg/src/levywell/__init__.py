"""Fractional quantum mechanics of Levy flights in an infinite square well.

Free and in-well propagators, the well spectrum and eigenfunctions, time
evolution, and a residual diagnostic for the nonlocal Riesz operator.
"""

from .core import (
    DomainError,
    FractionalParams,
    Grid,
    NumericalFailure,
    ShapeError,
    UsageError,
    WaveFunction,
    inner_product,
    make_params,
)
from .evolution import (
    SpectralCoefficients,
    energy_expectation,
    evolve_by_kernel,
    evolve_spectral,
    expand,
    fidelity,
    reconstruct,
    revival_time,
)
from .freekernel import (
    KernelQuery,
    TimeType,
    free_kernel,
    free_kernel_extrapolated,
    free_kernel_normalization,
)
from .residual import ResidualReport, fse_residual, residual_sweep
from .riesz import RieszMethod, hamiltonian_matrix, riesz_full_line, riesz_singular, riesz_spectral
from .well import (
    EigenState,
    Parity,
    PropagatorMatrix,
    eigenfunction_values,
    eigenstate,
    energy,
    gram_matrix,
    ordered_kernel,
    parity_form,
    propagator_matrix,
    well_kernel_images,
    well_kernel_spectral,
)

__version__ = "0.1.0"
