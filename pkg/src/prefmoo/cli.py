"""Command-line entry point: experiments, sweeps, self-checks, and the service.

Exit codes: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .benchmarks import benchmark_names

VALID_METHODS = ("proposed", "proposed-pc", "proposed-ir", "proposed-pgpm",
                 "random", "mobo-rs", "ei-tp")


def parse_seeds(text: str) -> tuple:
    """Seed lists: '0..9' (inclusive range), '1,4,7', or a single integer."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    if "," in text:
        return tuple(int(t) for t in text.split(",") if t.strip())
    return (int(text),)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefmoo",
        description="Preference-guided multi-objective Bayesian optimization")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_experiment_flags(p):
        p.add_argument("--benchmark", default="schaffer2",
                       help=f"benchmark name: {', '.join(benchmark_names())}")
        p.add_argument("--iters", type=int, default=30,
                       help="optimization iterations per run")
        p.add_argument("--seeds", type=parse_seeds, default=(0,),
                       help="seed list: 'a..b', 'a,b,c', or one integer")
        p.add_argument("--sigma-pc", type=float, default=0.1,
                       help="pairwise-comparison noise scale")
        p.add_argument("--sigma-ir", type=float, default=0.1,
                       help="improvement-request noise scale")
        p.add_argument("--alpha", type=float, default=2.0,
                       help="symmetric Dirichlet prior strength")
        p.add_argument("--mc-samples", type=int, default=1000,
                       help="joint Monte Carlo draws for sampling-based EI")
        p.add_argument("--truth", default="csf",
                       choices=("csf", "augmented", "basis"),
                       help="simulated decision maker's ground-truth utility")
        p.add_argument("--dtlz-norm", default="euclidean",
                       choices=("euclidean", "cardinality"),
                       help="reading of the DTLZ g-term head")
        p.add_argument("--config", default=None,
                       help="JSON file with ExperimentConfig fields (flags override)")

    run_p = sub.add_parser("run", help="run one experiment configuration")
    add_experiment_flags(run_p)
    run_p.add_argument("--method", default="proposed", help=f"one of: {', '.join(VALID_METHODS)}")
    run_p.add_argument("--out", default="runs.csv", help="CSV output path")

    sweep_p = sub.add_parser("sweep", help="fan out methods x seeds")
    add_experiment_flags(sweep_p)
    sweep_p.add_argument("--methods", default="proposed,random,mobo-rs,ei-tp",
                         help="comma-separated method list")
    sweep_p.add_argument("--out-dir", default="sweep", help="output directory")
    sweep_p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    diag_p = sub.add_parser("diag", help="run the numerical self-checks")
    diag_p.add_argument("--fast", action="store_true",
                        help="fewer Monte Carlo draws (smoke mode)")

    serve_p = sub.add_parser("serve", help="start the HTTP session service")
    serve_p.add_argument("--listen", default="127.0.0.1:8080", help="host:port to bind")
    serve_p.add_argument("--data-dir", default="sessions",
                         help="directory for per-session JSON snapshots")

    return parser


def _experiment_config(args, method: str):
    from .harness import ExperimentConfig

    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    overrides = dict(
        benchmark=args.benchmark, method=method, iters=args.iters,
        seeds=tuple(args.seeds), sigma_pc=args.sigma_pc, sigma_ir=args.sigma_ir,
        alpha=args.alpha, mc_samples=args.mc_samples, truth=args.truth,
        dtlz_norm=args.dtlz_norm)
    base.update(overrides)
    return ExperimentConfig(**base)


def _run_one(cfg):
    from .harness import run_experiment

    return run_experiment(cfg)


def cmd_run(args) -> int:
    from .harness import aggregate, run_experiment, write_csv, write_manifest

    try:
        cfg = _experiment_config(args, args.method)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    traces = run_experiment(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(traces, out)
    write_manifest(cfg, traces, out.with_suffix(".manifest.json"))
    agg = aggregate(traces)
    final = agg["regret"]["mean"][-1]
    print(f"{cfg.method} on {cfg.benchmark}: final mean regret {final:.4f} "
          f"over {len(cfg.seeds)} seed(s); wrote {out}")
    return 0


def cmd_sweep(args) -> int:
    from .harness import aggregate, write_csv, write_manifest

    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    try:
        configs = [_experiment_config(args, m) for m in methods]
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, configs))
    else:
        results = [_run_one(cfg) for cfg in configs]
    for cfg, traces in zip(configs, results):
        path = out_dir / f"{cfg.method}.csv"
        write_csv(traces, path)
        write_manifest(cfg, traces, path.with_suffix(".manifest.json"))
        final = aggregate(traces)["regret"]["mean"][-1]
        print(f"{cfg.method}: final mean regret {final:.4f} -> {path}")
    return 0


def cmd_diag(args) -> int:
    from . import diagnostics

    checks = [
        diagnostics.check_mc_vs_quadrature(
            n_states=10 if args.fast else 50,
            n_joint=20_000 if args.fast else 100_000),
        diagnostics.check_density_normalization(),
        diagnostics.check_closed_form_l1(),
        diagnostics.check_ep_vs_grid(),
    ]
    failed = 0
    for res in checks:
        print(f"{'PASS' if res.passed else 'FAIL'} {res.name}: {res.detail}")
        failed += not res.passed
    return 1 if failed else 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        print(f"error: --listen expects host:port, got {args.listen!r}", file=sys.stderr)
        return 2
    uvicorn.run(create_app(args.data_dir), host=host, port=int(port),
                log_level="warning")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "diag":
            return cmd_diag(args)
        if args.command == "serve":
            return cmd_serve(args)
    except KeyboardInterrupt:
        return 1
    except Exception as exc:  # runtime failure contract
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
