"""Canned end-to-end verification scenarios (the acceptance suite).

Each criterion is a self-contained function returning a `CriterionResult`
with a pass/fail flag and a one-line detail string.  The CLI `verify`
subcommand and the acceptance test module both run these.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import (
    delta_bound,
    estimate_delta,
    end_to_end_check,
    plan_rates,
)
from .potentials import CompositePotential, IsotropicQuadratic, L1Potential
from .reference_flows import (
    GaussianMeasure,
    evi_reports,
    gaussian_kl,
    gaussian_w2,
    ou_flow,
    scheme_recursion,
    standard_target,
)
from .samplers import GaussianInit, SchemeConfig, run
from .wasserstein import PointCloud, w2_assignment, w2_exact_1d

__all__ = ["CriterionResult", "run_criteria", "CRITERIA"]


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _result(name, started, passed, detail) -> CriterionResult:
    return CriterionResult(name, bool(passed), detail, time.perf_counter() - started)


def criterion_exact_scheme_law() -> CriterionResult:
    """One split step of the quadratic chain matches its exact Gaussian law."""
    started = time.perf_counter()
    init = GaussianMeasure.isotropic([2.0], 4.0)
    seq = scheme_recursion(init, 0.1, 1.0, 1)
    exact_mean = float(seq[2].mean[0])
    exact_var = float(seq[2].cov[0])
    law_ok = (abs(exact_mean - 2.0 / 1.1) < 1e-12
              and abs(exact_var - (4.0 / 1.21 + 0.2)) < 1e-12
              and abs(exact_mean - 1.8182) < 5e-5
              and abs(exact_var - 3.5058) < 5e-5)

    n = 100_000
    cfg = SchemeConfig(h=0.1, n_steps=1, n_particles=n, seed=2024)
    final = run(cfg, IsotropicQuadratic(1.0, 1), GaussianInit([2.0], 2.0))[-1]
    xs = final.particles[:, 0]
    se_mean = math.sqrt(exact_var / n)
    se_var = exact_var * math.sqrt(2.0 / (n - 1))
    mean_err = abs(xs.mean() - exact_mean)
    var_err = abs(xs.var(ddof=1) - exact_var)
    passed = law_ok and mean_err <= 4 * se_mean and var_err <= 4 * se_var
    detail = (f"law N({exact_mean:.4f}, {exact_var:.4f}); "
              f"mean off {mean_err / se_mean:.2f} se, var off {var_err / se_var:.2f} se")
    return _result("exact-scheme-law", started, passed, detail)


def criterion_contraction() -> CriterionResult:
    """Exact flow contracts W2 at rate lam and KL at rate 2*lam."""
    started = time.perf_counter()
    rng = np.random.default_rng(7)
    grid = np.linspace(0.0, 5.0, 51)
    worst = math.inf
    for _ in range(20):
        d = int(rng.integers(1, 4))
        lam = float(rng.uniform(0.5, 2.0))
        mean = rng.uniform(-3, 3, size=d)
        cov = rng.uniform(0.25, 9.0, size=d)
        rho0 = GaussianMeasure(mean, cov)
        pi = standard_target(lam, d)
        w0, kl0 = gaussian_w2(rho0, pi), gaussian_kl(rho0, pi)
        for t in grid:
            rho_t = ou_flow(rho0, t, lam)
            worst = min(worst, w0 * math.exp(-lam * t) - gaussian_w2(rho_t, pi))
            worst = min(worst, kl0 * math.exp(-2 * lam * t) - gaussian_kl(rho_t, pi))
    passed = worst >= -1e-12
    return _result("contraction", started, passed, f"min slack {worst:.3e}")


def criterion_discrete_evi() -> CriterionResult:
    """One-step EVI slack is nonnegative on a Gaussian comparison grid."""
    started = time.perf_counter()
    init = GaussianMeasure.isotropic([2.0], 4.0)
    nus = [GaussianMeasure.isotropic([mu], s2)
           for mu in (-2.0, -1.0, 0.0, 1.0, 2.0)
           for s2 in np.linspace(0.25, 4.0, 9)]
    worst = math.inf
    count = 0
    for h in (0.2, 0.1, 0.05):
        seq = scheme_recursion(init, h, 1.0, 20)
        for nu in nus:
            for rep in evi_reports(seq, nu, 1.0, h):
                worst = min(worst, rep.slack)
                count += 1
    passed = worst >= -1e-9
    return _result("discrete-evi", started, passed,
                   f"min slack {worst:.3e} over {count} evaluations")


def criterion_error_budget_domination() -> CriterionResult:
    """Exact scheme-vs-flow error stays under sqrt(6h(KL0+Delta)); the budget
    scales as sqrt(h) at fixed horizon and the error shrinks at least that fast."""
    started = time.perf_counter()
    hs = (0.2, 0.1, 0.05, 0.025)
    inits = [GaussianMeasure.isotropic([2.0], 4.0),
             GaussianMeasure.isotropic([0.0], 9.0),
             GaussianMeasure.isotropic([-1.0], 1.0)]
    pot = IsotropicQuadratic(1.0, 1)
    target = standard_target(1.0, 1)
    dominated = True
    for h in hs:
        n = round(2.0 / h)
        for init in inits:
            cfg = SchemeConfig(h=h, n_steps=n, n_particles=1, seed=0)
            report = end_to_end_check(cfg, pot, init, target)
            dominated = dominated and report.all_dominated

    init = inits[0]
    errors, budgets = [], []
    for h in hs:
        n = round(2.0 / h)
        cfg = SchemeConfig(h=h, n_steps=n, n_particles=1, seed=0)
        report = end_to_end_check(cfg, pot, init, target)
        errors.append(report.rows[-1].w2_to_flow)
        budgets.append(report.rows[-1].theorem1_bound)
    budget_slope = float(np.polyfit(np.log(hs), np.log(budgets), 1)[0])
    error_slope = float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
    passed = dominated and 0.4 <= budget_slope <= 0.6 and error_slope >= 0.4
    detail = (f"dominated={dominated}, budget slope {budget_slope:.3f}, "
              f"error slope {error_slope:.3f}")
    return _result("error-budget-domination", started, passed, detail)


def criterion_delta_analytics() -> CriterionResult:
    """Estimated per-step energy increases match/obey the analytic values."""
    started = time.perf_counter()
    runs = 10_000

    pot = IsotropicQuadratic(1.0, 3)
    h, d = 0.05, 3
    cfg = SchemeConfig(h=h, n_steps=3, n_particles=runs, seed=31,
                       record_half_steps=True)
    traj = run(cfg, pot, GaussianInit([0.5, -0.5, 1.0], 1.0))
    quad_ok = True
    worst_sigma = 0.0
    for k in (1, 2, 3):
        est = estimate_delta(traj, pot, k)
        sigmas = abs(est.delta_hat - h * d) / est.standard_error
        worst_sigma = max(worst_sigma, sigmas)
        quad_ok = quad_ok and sigmas <= 4.0

    comp = CompositePotential(IsotropicQuadratic(1.0, 4), L1Potential(1.0, 4))
    h4 = 0.1
    bound = delta_bound(comp, h4)
    cfg4 = SchemeConfig(h=h4, n_steps=2, n_particles=runs, seed=32,
                        record_half_steps=True)
    traj4 = run(cfg4, comp, GaussianInit([0.0, 0.0, 0.0, 0.0], 1.0))
    comp_ok = True
    for k in (1, 2):
        est = estimate_delta(traj4, comp, k)
        comp_ok = comp_ok and est.delta_hat <= bound + 3.0 * est.standard_error
    passed = quad_ok and comp_ok
    detail = (f"quad worst {worst_sigma:.2f} se from hd={h * d}; "
              f"composite bound {bound:.4f} respected={comp_ok}")
    return _result("delta-analytics", started, passed, detail)


def criterion_rate_planner() -> CriterionResult:
    """Planner reproduces the worked value and the dimension-scaling ratios."""
    started = time.perf_counter()
    plan = plan_rates(0.1, 10, 1.0, 0.0, 1.0)
    worked_ok = plan.n_smooth == 11_929

    big = 100_000
    smooth_ratio = (plan_rates(0.1, 2 * big, 1.0, 0.0, 1.0).n_smooth
                    / plan_rates(0.1, big, 1.0, 0.0, 1.0).n_smooth)
    nonsmooth_ratio = (
        plan_rates(0.1, 2 * big, 0.0, math.sqrt(2 * big), 1.0).n_nonsmooth
        / plan_rates(0.1, big, 0.0, math.sqrt(big), 1.0).n_nonsmooth)
    passed = (worked_ok and 1.9 <= smooth_ratio <= 2.3
              and 3.7 <= nonsmooth_ratio <= 4.6)
    detail = (f"n_smooth={plan.n_smooth}, smooth ratio {smooth_ratio:.3f}, "
              f"nonsmooth ratio {nonsmooth_ratio:.3f}")
    return _result("rate-planner", started, passed, detail)


def criterion_wasserstein_backends() -> CriterionResult:
    """Assignment agrees with sorting in 1-D, is a metric, and matches the
    Gaussian closed form on 4096-point samples within 5%."""
    started = time.perf_counter()
    rng = np.random.default_rng(99)

    a = PointCloud(rng.normal(size=512))
    b = PointCloud(rng.normal(loc=0.7, size=512))
    agree = abs(w2_assignment(a, b).value - w2_exact_1d(a, b).value)

    metric_ok = True
    tri_worst = math.inf
    for _ in range(100):
        pts = [PointCloud(rng.normal(size=(24, 3))) for _ in range(3)]
        dab = w2_assignment(pts[0], pts[1]).value
        dba = w2_assignment(pts[1], pts[0]).value
        dbc = w2_assignment(pts[1], pts[2]).value
        dac = w2_assignment(pts[0], pts[2]).value
        metric_ok = metric_ok and dab == dba
        metric_ok = metric_ok and w2_assignment(pts[0], pts[0]).value == 0.0
        tri_worst = min(tri_worst, dab + dbc - dac)
    metric_ok = metric_ok and tri_worst >= -1e-9

    gauss_ok = True
    rel_errs = []
    for d in (2, 4):
        mean_b = np.zeros(d)
        mean_b[0] = 2.0
        cov_b = np.ones(d)
        cov_b[0] = 2.0
        ga = GaussianMeasure(np.zeros(d), np.ones(d))
        gb = GaussianMeasure(mean_b, cov_b)
        xa = rng.normal(size=(4096, d))
        xb = mean_b + np.sqrt(cov_b) * rng.normal(size=(4096, d))
        emp = w2_assignment(PointCloud(xa), PointCloud(xb), cap=4096).value
        rel = abs(emp - gaussian_w2(ga, gb)) / gaussian_w2(ga, gb)
        rel_errs.append(rel)
        gauss_ok = gauss_ok and rel <= 0.05

    passed = agree <= 1e-12 and metric_ok and gauss_ok
    detail = (f"1-D gap {agree:.1e}, triangle slack {tri_worst:.2e}, "
              f"Gaussian rel errs {[f'{r:.3f}' for r in rel_errs]}")
    return _result("wasserstein-backends", started, passed, detail)


def criterion_dimension_scalings() -> CriterionResult:
    """KL grows linearly and W2 as sqrt(d) for product initializations."""
    started = time.perf_counter()
    kl_1d = 0.5 * (7.0 - math.log(4.0))
    w2_1d = math.sqrt(5.0)
    worst = 0.0
    for d in (1, 2, 4, 8, 16):
        rho0 = GaussianMeasure(2.0 * np.ones(d), 4.0 * np.ones(d))
        pi = GaussianMeasure(np.zeros(d), np.ones(d))
        worst = max(worst, abs(gaussian_kl(rho0, pi) / d - kl_1d))
        worst = max(worst, abs(gaussian_w2(rho0, pi) / math.sqrt(d) - w2_1d))
    passed = worst <= 1e-10
    return _result("dimension-scalings", started, passed,
                   f"max deviation {worst:.2e} (KL/d vs {kl_1d:.4f}, W2/sqrt(d) vs {w2_1d:.4f})")


def criterion_l1_target() -> CriterionResult:
    """Prox-split chains targeting the double-exponential law get closer to
    exact samples as the step size shrinks."""
    started = time.perf_counter()
    n = 100_000
    horizon = 20.0
    pot = L1Potential(1.0, 1)
    reference = np.random.default_rng(1234).laplace(size=(n, 1))
    ref_cloud = PointCloud(reference)

    def blocked_se(xs: np.ndarray, ys: np.ndarray, blocks: int = 20) -> float:
        per = len(xs) // blocks
        vals = [
            w2_exact_1d(PointCloud(xs[i * per:(i + 1) * per]),
                        PointCloud(ys[i * per:(i + 1) * per])).value
            for i in range(blocks)
        ]
        return float(np.std(vals, ddof=1) / math.sqrt(blocks))

    values, ses = [], []
    for h in (0.4, 0.2, 0.1, 0.05):
        cfg = SchemeConfig(h=h, n_steps=round(horizon / h), n_particles=n, seed=55)
        final = run(cfg, pot, GaussianInit([0.0], 1.0))[-1]
        values.append(w2_exact_1d(PointCloud(final.particles), ref_cloud).value)
        ses.append(blocked_se(final.particles[:, 0], reference[:, 0]))

    monotone = all(
        values[i + 1] <= values[i] + 2.0 * math.hypot(ses[i], ses[i + 1])
        for i in range(len(values) - 1)
    )
    detail = "w2 by h: " + ", ".join(f"{v:.4f}±{s:.4f}" for v, s in zip(values, ses))
    return _result("l1-target", started, monotone, detail)


CRITERIA = (
    ("exact-scheme-law", criterion_exact_scheme_law),
    ("contraction", criterion_contraction),
    ("discrete-evi", criterion_discrete_evi),
    ("error-budget-domination", criterion_error_budget_domination),
    ("delta-analytics", criterion_delta_analytics),
    ("rate-planner", criterion_rate_planner),
    ("wasserstein-backends", criterion_wasserstein_backends),
    ("dimension-scalings", criterion_dimension_scalings),
    ("l1-target", criterion_l1_target),
)


def run_criteria(only: str | None = None) -> list[CriterionResult]:
    """Run all (or a name-filtered subset of) acceptance criteria."""
    return [fn() for name, fn in CRITERIA if only is None or only in name]
