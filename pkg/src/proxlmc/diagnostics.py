"""Error-budget diagnostics for the split sampler.

Estimates the per-step potential-energy increase caused by the diffusion
sub-step (delta), accumulates it (Delta), evaluates the non-asymptotic error
budget sqrt(6h(KL0 + Delta)) and its target-distance variant, and plans step
size / iteration count pairs for a requested accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .potentials import Potential, IsotropicQuadratic
from .reference_flows import (
    GaussianMeasure,
    gaussian_kl,
    gaussian_w2,
    ou_flow,
    potential_energy_gaussian,
    scheme_recursion,
)
from .rng import NoiseSource
from .samplers import Algorithm, Ensemble, GaussianInit, SchemeConfig, run
from .wasserstein import PointCloud, w2_auto

__all__ = [
    "DeltaEstimate",
    "BoundReport",
    "RatePlan",
    "EndToEndRow",
    "EndToEndReport",
    "MissingHalfStepsError",
    "estimate_delta",
    "delta_estimates",
    "delta_sum",
    "delta_bound",
    "theorem1_bound",
    "corollary_bound",
    "bound_report",
    "plan_rates",
    "end_to_end_check",
]


class MissingHalfStepsError(ValueError):
    """The trajectory lacks half-step ensembles (record_half_steps was off)."""


@dataclass(frozen=True)
class DeltaEstimate:
    """Monte-Carlo estimate of one per-step energy increase."""

    step: int
    delta_hat: float
    standard_error: float
    n_runs: int

    def __post_init__(self):
        if self.n_runs < 2:
            raise ValueError("a standard error needs at least 2 runs")


def _find(trajectory: list[Ensemble], step_index: int, half: bool) -> Ensemble:
    for ens in trajectory:
        if ens.step_index == step_index and ens.half_step == half:
            return ens
    if half:
        raise MissingHalfStepsError(
            f"no half-step ensemble at step {step_index}; "
            "rerun with record_half_steps=True"
        )
    raise ValueError(f"no full-step ensemble at step {step_index}")


def estimate_delta(trajectory: list[Ensemble], p: Potential, step: int,
                   use_full_step_difference: bool = False) -> DeltaEstimate:
    """Estimate the energy increase across the diffusion sub-step of `step`.

    Particles are treated as i.i.d. runs.  The default estimator averages
    V(X^k) - V(X^{k-1/2}) over particles; `use_full_step_difference` switches
    to the coarser V(X^k) - V(X^{k-1}) variant, which also folds in the
    (negative) transport decrement.
    """
    if step < 1:
        raise ValueError("step must be >= 1")
    after = _find(trajectory, step, half=False)
    if use_full_step_difference:
        before = _find(trajectory, step - 1, half=False)
    else:
        before = _find(trajectory, step - 1, half=True)
    values = np.asarray(p.value(after.particles) - p.value(before.particles))
    n = values.size
    if n < 2:
        raise ValueError("delta estimation needs at least 2 particles/runs")
    return DeltaEstimate(
        step=step,
        delta_hat=float(values.mean()),
        standard_error=float(values.std(ddof=1) / math.sqrt(n)),
        n_runs=n,
    )


def delta_estimates(trajectory: list[Ensemble], p: Potential,
                    use_full_step_difference: bool = False) -> list[DeltaEstimate]:
    """Per-step estimates for every full step recorded in the trajectory."""
    n = max(e.step_index for e in trajectory)
    return [estimate_delta(trajectory, p, k, use_full_step_difference)
            for k in range(1, n + 1)]


def delta_sum(trajectory: list[Ensemble], p: Potential) -> float:
    """Cumulative estimate over all steps of the trajectory."""
    return math.fsum(d.delta_hat for d in delta_estimates(trajectory, p))


def delta_bound(p: Potential, h: float) -> float | None:
    """Analytic per-step bound M h d + L sqrt(2 h d) from the potential metadata.

    Returns None when neither a gradient-Lipschitz constant nor a Lipschitz
    constant is available.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    if p.grad_lipschitz is None and p.lipschitz is None:
        return None
    m = p.grad_lipschitz or 0.0
    lip = p.lipschitz or 0.0
    return m * h * p.dim + lip * math.sqrt(2.0 * h * p.dim)


def theorem1_bound(h: float, n: int, kl0: float, delta_total: float) -> float:
    """Uniform-in-time error budget sqrt(6h (KL0 + Delta)) for an n-step run."""
    if h <= 0 or n < 1:
        raise ValueError("h must be positive and n >= 1")
    if kl0 < 0 or delta_total < 0:
        raise ValueError("kl0 and delta_total must be nonnegative")
    return math.sqrt(6.0 * h * (kl0 + delta_total))


def corollary_bound(h: float, n: int, kl0: float, delta_total: float,
                    w2_init: float, lam: float, t: float) -> float:
    """Distance-to-target budget: the error budget plus the mixing remainder."""
    if not 0.0 <= t <= h * n + 1e-12:
        raise ValueError(f"t={t} outside [0, {h * n}]")
    if w2_init < 0 or lam < 0:
        raise ValueError("w2_init and lam must be nonnegative")
    return theorem1_bound(h, n, kl0, delta_total) + w2_init * math.exp(-lam * t)


@dataclass(frozen=True)
class BoundReport:
    h: float
    n: int
    kl0: float
    delta_sum: float
    theorem1_bound: float
    w2_init: float
    lam: float
    corollary_bound: float

    @property
    def horizon(self) -> float:
        return self.h * self.n


def bound_report(h: float, n: int, kl0: float, delta_total: float,
                 w2_init: float, lam: float, t: float | None = None) -> BoundReport:
    """Evaluate both bounds at time t (default: the horizon h*n)."""
    if t is None:
        t = h * n
    return BoundReport(
        h=h, n=n, kl0=kl0, delta_sum=delta_total,
        theorem1_bound=theorem1_bound(h, n, kl0, delta_total),
        w2_init=w2_init, lam=lam,
        corollary_bound=corollary_bound(h, n, kl0, delta_total, w2_init, lam, t),
    )


@dataclass(frozen=True)
class RatePlan:
    """Candidate (h, n) pairs for a target accuracy, and the binding one.

    All order relations are instantiated with constant 1, so the plan is an
    order-of-magnitude tool.  Each n is the nearest integer to T/h for the
    mixing horizon T = log(sqrt(d)/eps)/lam, and the paired h is adjusted to
    T/n so that h*n equals the horizon exactly.
    """

    epsilon: float
    d: int
    grad_lipschitz: float
    lipschitz: float
    lam: float
    mixing_time: float
    h_kl: float
    n_kl: int
    h_smooth: float | None = None
    n_smooth: int | None = None
    h_nonsmooth: float | None = None
    n_nonsmooth: int | None = None
    binding: str = "kl"
    h_chosen: float = field(default=0.0)
    n_chosen: int = field(default=0)


def _integerize(horizon: float, h_formula: float) -> tuple[float, int]:
    n = max(1, round(horizon / h_formula))
    return horizon / n, n


def plan_rates(epsilon: float, d: int, grad_lipschitz: float, lipschitz: float,
               lam: float) -> RatePlan:
    """Plan (h, n) so each error-budget contribution is of order epsilon^2.

    Candidates: h ~ eps^2/(d M log(sqrt(d)/eps)) for the smooth part,
    h ~ eps^4/(d L^2 log^2(sqrt(d)/eps)) for the nonsmooth part, and
    h ~ eps^2/d for the initial-KL term; the binding candidate is the
    smallest h (equivalently the largest n).
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if lam <= 0:
        raise ValueError("lam must be positive")
    if grad_lipschitz < 0 or lipschitz < 0:
        raise ValueError("Lipschitz constants must be nonnegative")
    if grad_lipschitz == 0 and lipschitz == 0:
        raise ValueError("at least one of the Lipschitz constants must be positive")
    if epsilon >= math.sqrt(d):
        raise ValueError("epsilon must be below sqrt(d) for a positive mixing horizon")

    log_term = math.log(math.sqrt(d) / epsilon)
    horizon = log_term / lam

    h_kl, n_kl = _integerize(horizon, epsilon**2 / d)
    candidates = {"kl": (h_kl, n_kl)}
    h_smooth = n_smooth = h_nonsmooth = n_nonsmooth = None
    if grad_lipschitz > 0:
        h_smooth, n_smooth = _integerize(
            horizon, epsilon**2 / (d * grad_lipschitz * log_term))
        candidates["smooth"] = (h_smooth, n_smooth)
    if lipschitz > 0:
        h_nonsmooth, n_nonsmooth = _integerize(
            horizon, epsilon**4 / (d * lipschitz**2 * log_term**2))
        candidates["nonsmooth"] = (h_nonsmooth, n_nonsmooth)

    binding = min(candidates, key=lambda k: candidates[k][0])
    h_chosen, n_chosen = candidates[binding]
    return RatePlan(
        epsilon=epsilon, d=d, grad_lipschitz=grad_lipschitz, lipschitz=lipschitz,
        lam=lam, mixing_time=horizon,
        h_kl=h_kl, n_kl=n_kl, h_smooth=h_smooth, n_smooth=n_smooth,
        h_nonsmooth=h_nonsmooth, n_nonsmooth=n_nonsmooth,
        binding=binding, h_chosen=h_chosen, n_chosen=n_chosen,
    )


@dataclass(frozen=True)
class EndToEndRow:
    step: int
    t: float
    w2_to_flow: float | None
    w2_to_target: float
    w2_standard_error: float | None
    theorem1_bound: float
    corollary_bound: float

    @property
    def dominated(self) -> bool:
        flow_ok = self.w2_to_flow is None or self.w2_to_flow <= self.theorem1_bound
        return flow_ok and self.w2_to_target <= self.corollary_bound


@dataclass(frozen=True)
class EndToEndReport:
    h: float
    n: int
    kl0: float
    delta_sum: float
    w2_init: float
    lam: float
    exact: bool
    rows: list[EndToEndRow]

    @property
    def all_dominated(self) -> bool:
        return all(row.dominated for row in self.rows)


def end_to_end_check(config: SchemeConfig, p: Potential, init: GaussianMeasure,
                     target: GaussianMeasure) -> EndToEndReport:
    """Compare measured distances against the bounds over a whole run.

    For an isotropic quadratic potential the scheme's law is evaluated in
    closed form at every step (exact path).  Otherwise the scheme is run on
    particles and the final ensemble is compared against an exact sample from
    the Gaussian target (empirical path, with a sampling standard error for
    the sliced backend).
    """
    if not init.is_diagonal:
        raise ValueError("initial measure must have diagonal covariance")
    kl0 = gaussian_kl(init, target)
    w2_init = gaussian_w2(init, target)
    lam = p.strong_convexity
    h, n = config.h, config.n_steps

    if isinstance(p, IsotropicQuadratic):
        seq = scheme_recursion(init, h, p.lam, n)
        deltas = [
            potential_energy_gaussian(seq[2 * k + 2], p.lam)
            - potential_energy_gaussian(seq[2 * k + 1], p.lam)
            for k in range(n)
        ]
        delta_total = math.fsum(deltas)
        t1 = theorem1_bound(h, n, kl0, delta_total)
        rows = []
        for k in range(1, n + 1):
            t = k * h
            measure = seq[2 * k]
            rows.append(EndToEndRow(
                step=k, t=t,
                w2_to_flow=gaussian_w2(measure, ou_flow(init, t, p.lam)),
                w2_to_target=gaussian_w2(measure, target),
                w2_standard_error=None,
                theorem1_bound=t1,
                corollary_bound=corollary_bound(h, n, kl0, delta_total,
                                                w2_init, lam, t),
            ))
        return EndToEndReport(h=h, n=n, kl0=kl0, delta_sum=delta_total,
                              w2_init=w2_init, lam=lam, exact=True, rows=rows)

    if config.algorithm is not Algorithm.PROX_ULA or not config.record_half_steps:
        raise ValueError("empirical check needs the prox-split algorithm "
                         "with record_half_steps=True")
    if not target.is_diagonal:
        raise ValueError("empirical check needs a diagonal-covariance target")
    sqrt_var = np.sqrt(init.cov)
    trajectory = run(config, p, GaussianInit(init.mean, sqrt_var))
    delta_total = max(0.0, delta_sum(trajectory, p))
    final = trajectory[-1]
    reference = target.mean + np.sqrt(np.asarray(target.cov)) * NoiseSource(
        config.seed ^ 0x5EED).standard_normals(0, final.n_particles, final.dim)
    est = w2_auto(PointCloud(final.particles), PointCloud(reference))
    t = h * n
    row = EndToEndRow(
        step=n, t=t, w2_to_flow=None, w2_to_target=est.value,
        w2_standard_error=est.standard_error,
        theorem1_bound=theorem1_bound(h, n, kl0, delta_total),
        corollary_bound=corollary_bound(h, n, kl0, delta_total, w2_init, lam, t),
    )
    return EndToEndReport(h=h, n=n, kl0=kl0, delta_sum=delta_total,
                          w2_init=w2_init, lam=lam, exact=False, rows=[row])
