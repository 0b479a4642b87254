"""Command-line front end.

Subcommands:
  run           train one configuration from a key = value config file
  scaling       iterations-to-separation sweep over dimensions
  kernel-table  largest workable step size per tap count
  reduce-check  large-step / large-start reduction checks
  verify        run a named self-check suite (or "all")

The master seed defaults to the PDX_SEED environment variable (0 when unset);
an explicit --seed or a seed key in the config file takes precedence.  Exit
codes: 0 success, 1 a check or run failed, 2 bad usage or configuration.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from .data import (ConfigError, RunConfig, TraceRecord, dataset_from_config,
                   parse_config, write_sweep, write_trace)
from .kernels import BACKEND
from .models import ModelParams, gd_step, logistic_loss, margins
from .perceptrons import (BatchPerceptron, IterateState, NoiseSpec,
                          QuadPerceptron, StopRule, TwoSampleQuad, run_until)
from .rng import spawn_rng, uniform_sphere
from .spectral import recommend_step_size
from .sweeps import (best_mean_iterations, fit_loglog_slope, kernel_table,
                     model_race, scaling_sweep)
from .verify import SUITES, run_all, run_suite


def _master_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get("PDX_SEED", "0"))


def _resolve_gamma(cfg: RunConfig, ds) -> float:
    if cfg.gamma != "auto":
        return float(cfg.gamma)
    if cfg.algorithm == "gd-linear":
        return 1.0 / max(float(np.linalg.norm(a)) ** 2 for a in ds.signed())
    return 0.5 * recommend_step_size(ds.signed(), cfg.k)


def _run_gd(cfg: RunConfig, ds, gamma: float):
    if cfg.algorithm == "gd-linear":
        params = ModelParams.linear(np.zeros(ds.d))
    else:
        c = np.zeros(cfg.k)
        c[0] = 1.0
        params = ModelParams.conv(c, np.zeros(ds.d))
    records = []
    steps, separated = 0, False
    for t in range(cfg.max_iters + 1):
        m = margins(params, ds)
        separated = bool(np.all(m > 0))
        if t % cfg.trace_stride == 0 or separated or t == cfg.max_iters:
            report = logistic_loss(params, ds)
            records.append(TraceRecord(
                run_id="run", algo=cfg.algorithm, t=t,
                loss=report.loss, accuracy=report.accuracy,
                iterate_norm=float(np.linalg.norm(params.w)),
                violated_count=int(np.sum(m <= 0)), corr_mu_plus=None,
                step_kind="start" if t == 0 else "gd", step_size=gamma))
        steps = t
        if separated or t == cfg.max_iters:
            break
        try:
            params = gd_step(params, ds, gamma)
        except FloatingPointError:
            break
    return steps, separated, records


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    ds = dataset_from_config(cfg)
    gamma = _resolve_gamma(cfg, ds)
    noise = NoiseSpec(cfg.sigma, cfg.seed)

    if cfg.algorithm in ("gd-linear", "gd-conv"):
        steps, separated, records = _run_gd(cfg, ds, gamma)
        reason = "separated" if separated else "max_iters"
    else:
        if cfg.algorithm == "batch":
            algo = BatchPerceptron(ds)
            theta0 = np.zeros(ds.d)
        elif cfg.algorithm == "quad":
            algo = QuadPerceptron(ds, cfg.k, gamma, noise)
            theta0 = uniform_sphere(spawn_rng(cfg.seed, 1), cfg.k + ds.d)
        else:  # two-sample
            algo = TwoSampleQuad(ds.d, cfg.mu, gamma, noise)
            theta0 = uniform_sphere(spawn_rng(cfg.seed, 1), ds.d + 2)
        state = IterateState(theta0)
        stop = StopRule(max_iters=cfg.max_iters)
        try:
            state, records = run_until(algo, state, stop, trace=True,
                                       run_id="run", trace_stride=cfg.trace_stride)
        except FloatingPointError as exc:
            print(f"run diverged: {exc}", file=sys.stderr)
            return 1
        steps, reason = state.t, state.stop_reason
        separated = reason == "separated"

    if args.trace:
        write_trace(records, args.trace)
    last = records[-1]
    print(f"algo={cfg.algorithm} backend={BACKEND} steps={steps} reason={reason} "
          f"gamma={gamma:.6g} loss={last.loss:.6g} accuracy={last.accuracy:.4f} "
          f"separated={str(separated).lower()}")
    return 0


def cmd_scaling(args) -> int:
    dims = [int(x) for x in args.dims.split(",")]
    lo, hi = args.grid_lo, args.grid_hi
    if args.grid is not None:
        lo_s, _, hi_s = args.grid.partition(":")
        if not _:
            raise ValueError(f"--grid expects LO:HI exponents, got {args.grid!r}")
        lo, hi = int(lo_s), int(hi_s)
    gammas = [2.0**e for e in range(lo, hi + 1)]
    rows = scaling_sweep(dims, mu=args.mu, gammas=gammas, seeds=args.seeds,
                         max_iters=args.max_iters, master_seed=_master_seed(args),
                         jobs=args.jobs)
    if args.out:
        write_sweep(rows, args.out)
    best = best_mean_iterations(rows)
    for algo in sorted({r.algo for r in rows}):
        means = [(d, best[(algo, d)]) for d in dims if (algo, d) in best]
        for d, (gamma, mean) in means:
            print(f"{algo} d={d} best_gamma={gamma:.6g} mean_iterations={mean:.1f}")
        if len(means) >= 2:
            slope = fit_loglog_slope([d for d, _ in means], [m for _, (_, m) in means])
            print(f"{algo} log-log slope {slope:.3f}")
    return 0


def cmd_kernel_table(args) -> int:
    ks = [int(x) for x in args.ks.split(",")]
    rows = kernel_table(ks, d=args.d, mu=args.mu, budget=args.budget,
                        seeds=args.seeds, master_seed=_master_seed(args))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "d", "best_gamma", "predicted", "iterations"])
            for r in rows:
                w.writerow([r.k, r.d, format(r.best_gamma, ".17g"),
                            format(r.predicted, ".17g"), r.iterations])
    failed = False
    for r in rows:
        ratio = r.best_gamma * math.sqrt(r.k * r.d)
        print(f"k={r.k} d={r.d} best_gamma={r.best_gamma:.6g} "
              f"1/||A||={r.predicted:.6g} gamma*sqrt(kd)={ratio:.3f} "
              f"iterations={r.iterations}")
        failed |= not math.isfinite(r.best_gamma)
    return 1 if failed else 0


def cmd_reduce_check(args) -> int:
    from .data import make_separable, make_two_sample
    from .oracles import reduction_check_linear, reduction_check_quadratic
    seed = _master_seed(args)
    if args.kind == "linear":
        ds = make_separable(d=6, n=4, margin=0.5, seed=seed + 1)
        rep = reduction_check_linear(ds)
        slack = 1e-12 * rep.reference
        ok = (all(rep.gaps[i + 1] <= rep.gaps[i] + slack
                  for i in range(len(rep.gaps) - 1))
              and rep.gaps[-1] <= 1e-4 * rep.reference)
        for g, gap in zip(rep.scales, rep.gaps):
            print(f"gamma={g:.0e} max_t ||w_t/gamma - z_t|| = {gap:.3e}")
        print(f"scale max_t ||z_t|| = {rep.reference:.3e}: {'ok' if ok else 'FAIL'}")
    else:
        ds = make_two_sample(8, 0.1)
        theta0 = uniform_sphere(spawn_rng(seed, 0x2ED), 10)
        gamma = 0.5 * recommend_step_size(ds.signed(), 2)
        rep = reduction_check_quadratic(ds, theta0, gamma)
        ok = (all(rep.gaps[i + 1] <= rep.gaps[i] for i in range(len(rep.gaps) - 1))
              and rep.gaps[-1] <= 1e-6 and rep.sign_agreement[-1] == 1.0)
        for W, gap, agree in zip(rep.scales, rep.gaps, rep.sign_agreement):
            print(f"start_norm={W:.0e} max_t direction gap = {gap:.3e} "
                  f"sign agreement = {agree:.3f}")
        print("ok" if ok else "FAIL")
    return 0 if ok else 1


def cmd_verify(args) -> int:
    seed = _master_seed(args)
    if args.suite == "all":
        results = run_all(seed)
    else:
        results = run_suite(args.suite, seed)
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{'ok  ' if ok else 'FAIL'} {name:<{width}}  {detail}")
    bad = sum(1 for _, ok, _ in results if not ok)
    print(f"{len(results) - bad}/{len(results)} checks passed (backend: {BACKEND})")
    return 0 if bad == 0 else 1


def cmd_race(args) -> int:
    from .data import load_idx_pair
    ds = load_idx_pair(args.images, args.labels, args.class_a, args.class_b,
                       limit=args.limit, seed=_master_seed(args))
    rows = model_race(ds, seeds=args.seeds, cap=args.cap,
                      master_seed=_master_seed(args))
    for r in rows:
        print(f"{r.model} seed={r.seed} best_gamma={r.best_gamma:.6g} "
              f"iterations={r.iterations} separated={str(r.separated).lower()}")
    conv = {r.seed: r for r in rows if r.model == "conv"}
    lin = {r.seed: r for r in rows if r.model == "linear"}
    wins = sum(1 for s in conv if conv[s].separated
               and (not lin[s].separated or conv[s].iterations < lin[s].iterations))
    print(f"conv wins {wins}/{len(conv)} seeds")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdx", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="train one configuration")
    pr.add_argument("--config", required=True, help="key = value config file")
    pr.add_argument("--trace", help="write a per-step trace CSV here")
    pr.set_defaults(func=cmd_run)

    ps = sub.add_parser("scaling", help="iterations-to-separation vs dimension")
    ps.add_argument("--dims", default="10,100,400,1000")
    ps.add_argument("--mu", type=float, default=0.01)
    ps.add_argument("--seeds", type=int, default=30)
    ps.add_argument("--grid", metavar="LO:HI",
                    help="log2 step-size grid endpoints, e.g. -10:9")
    ps.add_argument("--grid-lo", type=int, default=-10)
    ps.add_argument("--grid-hi", type=int, default=9)
    ps.add_argument("--max-iters", type=int, default=10**6)
    ps.add_argument("--jobs", type=int, default=1)
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--out", help="write sweep rows CSV here")
    ps.set_defaults(func=cmd_scaling)

    pk = sub.add_parser("kernel-table", help="largest workable step per tap count")
    pk.add_argument("--ks", default="2,10,100,1000")
    pk.add_argument("--d", type=int, default=1000)
    pk.add_argument("--mu", type=float, default=0.05)
    pk.add_argument("--budget", type=int, default=200_000)
    pk.add_argument("--seeds", type=int, default=3)
    pk.add_argument("--seed", type=int, default=None)
    pk.add_argument("--out", help="write the table CSV here")
    pk.set_defaults(func=cmd_kernel_table)

    pc = sub.add_parser("reduce-check", help="perceptron limit checks")
    pc.add_argument("--kind", choices=("linear", "quadratic"), required=True)
    pc.add_argument("--seed", type=int, default=None)
    pc.set_defaults(func=cmd_reduce_check)

    pv = sub.add_parser("verify", help="run a self-check suite")
    pv.add_argument("suite", choices=sorted(SUITES) + ["all"])
    pv.add_argument("--seed", type=int, default=None)
    pv.set_defaults(func=cmd_verify)

    pm = sub.add_parser("race", help="linear vs conv GD on an image pair")
    pm.add_argument("--images", required=True)
    pm.add_argument("--labels", required=True)
    pm.add_argument("--class-a", type=int, default=0)
    pm.add_argument("--class-b", type=int, default=1)
    pm.add_argument("--limit", type=int, default=100)
    pm.add_argument("--seeds", type=int, default=6)
    pm.add_argument("--cap", type=int, default=5000)
    pm.add_argument("--seed", type=int, default=None)
    pm.set_defaults(func=cmd_race)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
