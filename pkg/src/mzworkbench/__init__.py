"""Numerical workbench for memory kernels, projections and Gaussian coarse-graining.

Everything is built over finite-dimensional real Hilbert spaces, where the
operator identities behind the generalized Langevin equation are exactly
checkable: skew generators and their rotation-plane exponentials
(:mod:`.hilbert`), the Mori projection with its orthogonal dynamics and
memory kernel (:mod:`.mori`), the Volterra inversions between kernels and
autocorrelation functions (:mod:`.volterra`), Gaussian coarse-grained
simulation (:mod:`.glesim`), the fast/slow spectral splitting
(:mod:`.spectral`) and the harmonic-oscillator conditional-expectation
laboratory (:mod:`.phaselab`).
"""

from .errors import WorkbenchError
from .hilbert import (
    Generator,
    HilbertSpace,
    SpectralDecomposition,
    inner,
    make_skew_generator,
    norm,
    propagate,
    propagate_series,
    spectral_decompose,
)
from .series import ScalarSeries, TimeGrid
from .mori import (
    MoriDecomposition,
    autocorrelation_exact,
    drift_coefficient,
    fluctuating_force,
    fluctuating_force_series,
    gle_residual,
    kernel_via_2fdt_volterra,
    memory_kernel_exact,
    mori_decomposition,
    mori_project,
    orthogonal_dynamics,
)
from .volterra import (
    acf_from_kernel,
    differentiate_series,
    kernel_from_acf,
    solve_volterra2,
)
from .glesim import (
    CovarianceMatrix,
    TrajectoryEnsemble,
    build_noise_covariance,
    coarse_grained_ensemble,
    empirical_acf,
    integrate_gle,
    sample_gaussian,
    sample_stationary_spectral,
    two_sample_lag_test,
)
from .spectral import (
    SlowSubspace,
    is_slow,
    memory_coupling_norm,
    orthogonal_equals_full_on_fast,
    projected_generator_bound,
    slow_subspace,
)
from .phaselab import (
    PhaseObservable,
    QuadratureGrid,
    expectation,
    liouville_apply,
    observable_xn,
    oscillator_mori_kernel,
    oscillator_trajectories,
    unboundedness_ratio,
    zwanzig_project,
)

__version__ = "0.1.0"

__all__ = [
    "WorkbenchError",
    "Generator",
    "HilbertSpace",
    "SpectralDecomposition",
    "inner",
    "make_skew_generator",
    "norm",
    "propagate",
    "propagate_series",
    "spectral_decompose",
    "ScalarSeries",
    "TimeGrid",
    "MoriDecomposition",
    "autocorrelation_exact",
    "drift_coefficient",
    "fluctuating_force",
    "fluctuating_force_series",
    "gle_residual",
    "kernel_via_2fdt_volterra",
    "memory_kernel_exact",
    "mori_decomposition",
    "mori_project",
    "orthogonal_dynamics",
    "acf_from_kernel",
    "differentiate_series",
    "kernel_from_acf",
    "solve_volterra2",
    "CovarianceMatrix",
    "TrajectoryEnsemble",
    "build_noise_covariance",
    "coarse_grained_ensemble",
    "empirical_acf",
    "integrate_gle",
    "sample_gaussian",
    "sample_stationary_spectral",
    "two_sample_lag_test",
    "SlowSubspace",
    "is_slow",
    "memory_coupling_norm",
    "orthogonal_equals_full_on_fast",
    "projected_generator_bound",
    "slow_subspace",
    "PhaseObservable",
    "QuadratureGrid",
    "expectation",
    "liouville_apply",
    "observable_xn",
    "oscillator_mori_kernel",
    "oscillator_trajectories",
    "unboundedness_ratio",
    "zwanzig_project",
]
