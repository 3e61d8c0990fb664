"""Proximal Langevin Monte Carlo: split-step samplers with exact diagnostics.

The sampler alternates a proximal transport sub-step with an exact Gaussian
diffusion sub-step.  For quadratic potentials the package evaluates the
scheme's law, the continuous-time flow, and every diagnostic bound in closed
form; for general convex potentials it provides particle ensembles, empirical
Wasserstein distances, and Monte-Carlo error budgets.
"""

from .diagnostics import (
    BoundReport,
    DeltaEstimate,
    EndToEndReport,
    RatePlan,
    corollary_bound,
    delta_bound,
    delta_estimates,
    delta_sum,
    end_to_end_check,
    estimate_delta,
    plan_rates,
    theorem1_bound,
)
from .potentials import (
    CompositePotential,
    DiagonalQuadratic,
    IsotropicQuadratic,
    L1Potential,
    Potential,
    ProxConvergenceError,
    ProxSolverSettings,
    soft_threshold,
)
from .reference_flows import (
    EviReport,
    GaussianMeasure,
    discrete_evi_check,
    entropy_gaussian,
    evi_reports,
    gaussian_kl,
    gaussian_w2,
    heat_convolve,
    log_partition,
    ou_flow,
    potential_energy_gaussian,
    prox_pushforward_quadratic,
    scheme_recursion,
    standard_target,
)
from .rng import NoiseSource, keyed_standard_normals
from .samplers import (
    Algorithm,
    Ensemble,
    GaussianInit,
    SchemeConfig,
    read_snapshot,
    run,
    step_diffusion,
    step_transport,
    step_ula,
    trajectory_to_csv,
    write_snapshot,
)
from .wasserstein import (
    PointCloud,
    W2Estimate,
    W2Method,
    displacement_interpolate,
    w2_assignment,
    w2_auto,
    w2_exact_1d,
    w2_sliced,
)

__version__ = "0.1.0"
