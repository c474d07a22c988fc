"""Eigenvalue statistics of unitary ensembles with oscillatory (periodized) potentials."""

from .correlation import corr_finite, corr_limit_general, corr_limit_simple, gaussian_well_limit, sine_det_factor
from .errors import (
    CostCap,
    DegreeOutOfRange,
    GridTooCoarse,
    IllConditioned,
    InsufficientResolution,
    NotPositiveDefinite,
    OscueError,
    OutOfRegime,
    OverflowRisk,
    ProbabilityOutOfRange,
)
from .fredholm import (
    ArcSet,
    count_distribution,
    count_probability,
    gap_probability,
    series_Mm,
    solve_nystrom,
    trace_bound_check,
)
from .kernel import KernelContext, cd_kernel, closed_form_kernel, density_of_states
from .opuc import OpucBasis, build_basis, eval_poly, opuc_direct, opuc_lemma_assemble
from .potential import PotentialSpec, Weight, bessel_moment_oracle, compute_moments, eval_potential
from .sampler import EigenSample, empirical_statistics, run_mcmc, sample_dpp, sample_mcmc

__version__ = "0.1.0"

__all__ = [
    "ArcSet", "CostCap", "DegreeOutOfRange", "EigenSample", "GridTooCoarse", "IllConditioned",
    "InsufficientResolution", "KernelContext", "NotPositiveDefinite", "OpucBasis", "OscueError",
    "OutOfRegime", "OverflowRisk", "PotentialSpec", "ProbabilityOutOfRange", "Weight",
    "bessel_moment_oracle", "build_basis", "cd_kernel", "compute_moments", "closed_form_kernel",
    "corr_finite", "corr_limit_general", "corr_limit_simple", "count_distribution", "count_probability",
    "density_of_states", "empirical_statistics", "eval_poly", "eval_potential", "gap_probability",
    "gaussian_well_limit", "opuc_direct", "opuc_lemma_assemble", "run_mcmc", "sample_dpp", "sample_mcmc",
    "series_Mm", "sine_det_factor", "solve_nystrom", "trace_bound_check",
]
