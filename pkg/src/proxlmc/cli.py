"""Command-line front end: reproducible runs, diagnostics CSVs, rate plans.

Subcommands: sample, diagnose, flow, w2, plan, verify.  Exit codes: 0 on
success, 1 on runtime failure, 2 on configuration or validation failure.
The environment variable PROXLMC_THREADS caps worker threads for the sliced
Wasserstein backend.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .diagnostics import (
    corollary_bound,
    delta_bound,
    delta_estimates,
    plan_rates,
    theorem1_bound,
)
from .potentials import IsotropicQuadratic
from .reference_flows import gaussian_kl, gaussian_w2, ou_flow, scheme_recursion, standard_target
from .rng import NoiseSource
from .samplers import read_snapshot, run, trajectory_to_csv, write_snapshot
from .wasserstein import (
    DEFAULT_ASSIGNMENT_CAP,
    PointCloud,
    W2Method,
    w2_assignment,
    w2_auto,
    w2_exact_1d,
    w2_sliced,
)

__all__ = ["main"]


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.17g}"


def _thread_cap() -> int | None:
    raw = os.environ.get("PROXLMC_THREADS")
    if raw is None:
        return None
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"PROXLMC_THREADS must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ConfigError("PROXLMC_THREADS must be >= 1")
    return cap


def _run_experiment(cfg: ExperimentConfig):
    noise = NoiseSource(cfg.scheme.seed, scale_override=cfg.noise_scale)
    return run(cfg.scheme, cfg.potential, cfg.init, noise=noise)


def cmd_sample(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out_dir or cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trajectory = _run_experiment(cfg)
    outputs = []
    if "csv" in cfg.formats:
        csv_path = out_dir / "trajectory.csv"
        trajectory_to_csv(trajectory, csv_path)
        outputs.append(str(csv_path))
    if "bin" in cfg.formats:
        for ens in trajectory:
            tag = "half" if ens.half_step else "full"
            path = out_dir / f"snapshot_{ens.step_index:05d}_{tag}.bin"
            write_snapshot(path, ens.particles)
            outputs.append(str(path))
    manifest = {
        "seed": cfg.scheme.seed,
        "config_sha256": cfg.content_hash,
        "n_records": len(trajectory),
        "outputs": outputs,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                           encoding="utf-8")
    print(json.dumps(manifest, indent=2))
    return 0


def _target_sample(cfg: ExperimentConfig, n: int, dim: int) -> np.ndarray:
    target = cfg.target
    std = np.sqrt(np.asarray(target.cov if target.is_diagonal
                             else np.diag(target.cov)))
    eta = NoiseSource(cfg.scheme.seed ^ 0x5EED).standard_normals(0, n, dim)
    return target.mean + std * eta


def cmd_diagnose(args) -> int:
    cfg = load_config(args.config)
    if not cfg.scheme.record_half_steps:
        raise ConfigError("diagnostics need half-step ensembles: "
                          "set sampler.record_half_steps to true")
    trajectory = _run_experiment(cfg)
    estimates = delta_estimates(trajectory, cfg.potential,
                                use_full_step_difference=args.full_step_delta)
    per_step_bound = delta_bound(cfg.potential, cfg.scheme.h)

    kl0 = cfg.kl0_override
    w2_init = cfg.w2_init_override
    if cfg.target is not None:
        if kl0 is None:
            kl0 = gaussian_kl(cfg.init_measure, cfg.target)
        if w2_init is None:
            w2_init = gaussian_w2(cfg.init_measure, cfg.target)
    have_bounds = kl0 is not None
    have_corollary = have_bounds and w2_init is not None
    if cfg.target is None:
        print("warning: no target spec; bound and W2 columns left empty",
              file=sys.stderr)

    lam = cfg.potential.strong_convexity
    cap = _thread_cap()
    h = cfg.scheme.h
    rows = []
    cum = 0.0
    full_steps = {e.step_index: e for e in trajectory if not e.half_step}
    for est in estimates:
        cum += est.delta_hat
        t1 = c1 = w2_val = method = None
        if have_bounds:
            t1 = theorem1_bound(h, est.step, kl0, max(cum, 0.0))
            if have_corollary:
                c1 = corollary_bound(h, est.step, kl0, max(cum, 0.0),
                                     w2_init, lam, est.step * h)
        if cfg.target is not None:
            ens = full_steps[est.step]
            ref = _target_sample(cfg, ens.n_particles, ens.dim)
            est_w2 = w2_auto(PointCloud(ens.particles), PointCloud(ref))
            if cap is not None and est_w2.method is W2Method.SLICED:
                est_w2 = w2_sliced(PointCloud(ens.particles), PointCloud(ref),
                                   max_workers=cap)
            w2_val, method = est_w2.value, est_w2.method.value
        rows.append((est.step, est.delta_hat, est.standard_error, per_step_bound,
                     cum, t1, c1, w2_val, method))

    header = ("step,delta_hat,delta_se,delta_bound,cum_delta,"
              "theorem1_bound,corollary_bound,w2_measured,w2_method")
    lines = [header]
    for step, d_hat, d_se, d_b, cum_d, t1, c1, w2_val, method in rows:
        lines.append(",".join([
            str(step), _fmt(d_hat), _fmt(d_se), _fmt(d_b), _fmt(cum_d),
            _fmt(t1), _fmt(c1), _fmt(w2_val), method or "",
        ]))
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def cmd_flow(args) -> int:
    cfg = load_config(args.config)
    if not isinstance(cfg.potential, IsotropicQuadratic):
        raise ConfigError("flow requires a quadratic potential")
    if not cfg.init_measure.is_diagonal:
        raise ConfigError("flow requires a diagonal initial measure")
    lam = cfg.potential.lam
    h, n = cfg.scheme.h, cfg.scheme.n_steps
    d = cfg.potential.dim
    target = standard_target(lam, d)
    seq = scheme_recursion(cfg.init_measure, h, lam, n)

    mean_cols = ",".join(f"mean_{i}" for i in range(d))
    var_cols = ",".join(f"var_{i}" for i in range(d))
    lines = [f"step,half,t,w2_vs_flow,w2_vs_target,kl_vs_target,{mean_cols},{var_cols}"]
    for idx, g in enumerate(seq):
        half = idx % 2 == 1
        # half-step rows carry the index of the last completed full step,
        # matching the trajectory CSV convention
        step = (idx - 1) // 2 if half else idx // 2
        t = step * h
        w2_flow = "" if half else _fmt(gaussian_w2(g, ou_flow(cfg.init_measure, t, lam)))
        w2_target = _fmt(gaussian_w2(g, target))
        kl_target = _fmt(gaussian_kl(g, target))
        means = ",".join(_fmt(v) for v in g.mean)
        variances = ",".join(_fmt(v) for v in g.cov_diagonal())
        lines.append(f"{step},{1 if half else 0},{_fmt(t)},{w2_flow},"
                     f"{w2_target},{kl_target},{means},{variances}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _load_cloud(path: str, step: int | None) -> PointCloud:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"no such file: {path}")
    if p.suffix == ".bin":
        return PointCloud(read_snapshot(p))
    rows = p.read_text(encoding="utf-8").splitlines()
    if not rows or not rows[0].startswith("step,"):
        raise ConfigError(f"{path} is not a trajectory CSV or .bin snapshot")
    header = rows[0].split(",")
    coord_cols = [i for i, name in enumerate(header) if name.startswith("x")]
    records: dict[tuple[int, int], list[list[float]]] = {}
    for line in rows[1:]:
        parts = line.split(",")
        key = (int(parts[0]), int(parts[1]))
        records.setdefault(key, []).append([float(parts[i]) for i in coord_cols])
    if step is None:
        key = max(records, key=lambda k: (k[0], -k[1]))
    else:
        key = (step, 0)
        if key not in records:
            raise ConfigError(f"no full-step records for step {step} in {path}")
    return PointCloud(np.asarray(records[key]))


def cmd_w2(args) -> int:
    a = _load_cloud(args.file_a, args.step)
    b = _load_cloud(args.file_b, args.step)
    method = args.method
    if method == "auto":
        est = w2_auto(a, b, cap=args.cap, n_projections=args.projections,
                      seed=args.seed)
    elif method == "exact1d":
        est = w2_exact_1d(a, b)
    elif method == "assignment":
        est = w2_assignment(a, b, cap=args.cap)
    else:
        est = w2_sliced(a, b, n_projections=args.projections, seed=args.seed,
                        max_workers=_thread_cap())
    print(f"w2 = {est.value:.17g} (method={est.method.value}"
          + (f", se={est.standard_error:.17g}" if est.standard_error is not None else "")
          + ")")
    return 0


def cmd_plan(args) -> int:
    plan = plan_rates(args.epsilon, args.d, args.grad_lipschitz, args.lipschitz,
                      args.lam)
    print(f"mixing horizon T = {plan.mixing_time:.6g}")
    print(f"{'branch':<12}{'h':>16}{'n':>14}")
    for name, h, n in (("smooth", plan.h_smooth, plan.n_smooth),
                       ("nonsmooth", plan.h_nonsmooth, plan.n_nonsmooth),
                       ("kl", plan.h_kl, plan.n_kl)):
        if h is None:
            print(f"{name:<12}{'-':>16}{'-':>14}")
        else:
            print(f"{name:<12}{h:>16.6g}{n:>14d}")
    print(f"binding: {plan.binding}  (h = {plan.h_chosen:.6g}, n = {plan.n_chosen})")
    return 0


def cmd_verify(args) -> int:
    from .verify import run_criteria

    results = run_criteria(only=args.only)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name} [{res.seconds:.2f}s] {res.detail}")
        failed += 0 if res.passed else 1
    print(f"{len(results) - failed}/{len(results)} criteria passed")
    return 0 if failed == 0 else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxlmc",
        description="Proximal Langevin Monte Carlo experiments and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="run a sampler and write trajectory files")
    p.add_argument("config", help="experiment config JSON")
    p.add_argument("--out-dir", help="override the output directory")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("diagnose", help="emit per-step error-budget diagnostics")
    p.add_argument("config")
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.add_argument("--full-step-delta", action="store_true",
                   help="estimate delta from full-step value differences")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("flow", help="exact Gaussian scheme law vs continuous flow")
    p.add_argument("config")
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("w2", help="distance between two stored point clouds")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--method", choices=["auto", "exact1d", "assignment", "sliced"],
                   default="auto")
    p.add_argument("--step", type=int, help="trajectory step to load (default: last)")
    p.add_argument("--projections", type=int, default=128)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=DEFAULT_ASSIGNMENT_CAP)
    p.set_defaults(func=cmd_w2)

    p = sub.add_parser("plan", help="step-size/iteration plan for a target accuracy")
    p.add_argument("epsilon", type=float)
    p.add_argument("d", type=int)
    p.add_argument("grad_lipschitz", type=float)
    p.add_argument("lipschitz", type=float)
    p.add_argument("lam", type=float)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("verify", help="run the canned acceptance scenarios")
    p.add_argument("--only", help="run only criteria whose name contains this")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
