"""Command-line entry point: fit cells, run benchmarks, aggregate tables, self-check."""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import yaml

from .errors import ConfigError, MomentForgeError


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        if path.endswith(".json"):
            cfg = json.loads(text)
        else:
            cfg = yaml.safe_load(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{path}:{mark.line + 1}" if mark is not None else path
        raise ConfigError(f"{where}: invalid YAML: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    return cfg


def _default_jobs() -> int:
    raw = os.environ.get("MOMENT_FORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"MOMENT_FORGE_THREADS must be an integer, got {raw!r}")


def _emit_records(records, out: str | None) -> None:
    from .records import write_records

    if out:
        write_records(out, records)
        print(f"wrote {len(records)} records to {out}")
    else:
        for rec in records:
            print(rec.to_json_line())


def cmd_fit(args) -> int:
    from .runner import run_cell

    est_cfg = None
    if args.config:
        cfg = load_config(args.config)
        est_cfg = cfg.get(args.estimator)
    rec = run_cell(
        args.design, args.estimator, args.n_train, args.seed,
        n_val=args.n_val, n_test=args.n_test, est_cfg=est_cfg,
    )
    _emit_records([rec], args.out)
    return 0


def cmd_benchmark(args) -> int:
    from .runner import run_benchmark

    cfg = load_config(args.config)
    if args.seeds is not None:
        cfg["seeds"] = args.seeds
    jobs = args.jobs if args.jobs is not None else _default_jobs()
    records = run_benchmark(cfg, jobs=jobs)
    _emit_records(records, args.out)
    return 0


def cmd_table(args) -> int:
    from .records import aggregate, read_records, render_table

    records = []
    for path in args.records:
        records.extend(read_records(path))
    if not records:
        raise ConfigError("no records found in the given files")
    text = render_table(aggregate(records), fmt=args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote table to {args.out}")
    else:
        print(text)
    return 0


def cmd_check(args) -> int:
    """Self-check: conjugate identities, a duality oracle, and a scaled-down consistency run."""
    from .asymptotics import asymptotics_check
    from .baselines import exact_mmd_profile, mmd_profile_primal_discrete
    from .data import Dataset
    from .divergences import get_divergence
    from .kernels import KernelSpec
    from .models import mean_model

    rng = np.random.default_rng(0)
    for name in ("kl", "log", "chi2"):
        div = get_divergence(name)
        t = rng.uniform(-1.0, 0.5, size=64)
        d1 = div.conjugate_d1(t)
        num = (div.conjugate(t + 1e-6) - div.conjugate(t - 1e-6)) / 2e-6
        if not np.allclose(d1, num, rtol=1e-5, atol=1e-7):
            print(f"self-check failed: conjugate derivative mismatch for {name}")
            return 2
    print("conjugate identities: ok")

    model = mean_model(1)
    support = rng.normal(size=(5, 1))
    p_star = rng.dirichlet(np.full(5, 2.0))
    theta = np.array([float(p_star @ support[:, 0])])
    kern = KernelSpec(bandwidth=1.0, input_dim=1)
    dual = exact_mmd_profile(model, theta, Dataset(x=support.copy()),
                             constraint_grid=support, kernel=kern)
    primal, _ = mmd_profile_primal_discrete(model, theta, support, np.full(5, 0.2), kern)
    gap = abs(dual - primal)
    if gap > 1e-4:
        print(f"self-check failed: duality gap {gap:.2e}")
        return 2
    print(f"profile duality gap: {gap:.2e}")

    report = asymptotics_check(n_grid=(100, 400), replications=20, seed=0, max_iters=600)
    print(f"consistency (desk scale): slope {report.slope:.2f}, "
          f"scaled-variance ratio {report.var_ratio:.2f}")
    # 20 replications leave real Monte-Carlo noise; bounds are loose on purpose
    if not (-1.6 <= report.slope <= -0.5 and 0.4 <= report.var_ratio <= 1.6):
        print("self-check failed: consistency run out of range")
        return 2
    print("self-check passed")
    return 0


def cmd_datagen(args) -> int:
    from .runner import generate

    data = generate(args.design, args.n, args.seed)
    payload = {"x": data.x}
    if data.z is not None:
        payload["z"] = data.z
    np.savez(args.out, **payload)
    print(f"wrote {data.n} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moment-forge",
        description="Kernel method-of-moments estimation and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="run a single (design, estimator, seed) cell")
    p_fit.add_argument("--design", required=True)
    p_fit.add_argument("--estimator", required=True)
    p_fit.add_argument("--n-train", type=int, default=500)
    p_fit.add_argument("--n-val", type=int, default=None)
    p_fit.add_argument("--n-test", type=int, default=20000)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--config", default=None, help="optional YAML/JSON with per-estimator settings")
    p_fit.add_argument("--out", default=None, help="JSONL output path (default: stdout)")
    p_fit.set_defaults(func=cmd_fit)

    p_bench = sub.add_parser("benchmark", help="run a benchmark config over estimators and seeds")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--seeds", type=int, nargs="+", default=None,
                         help="override the seed list from the config")
    p_bench.add_argument("--jobs", type=int, default=None,
                         help="worker threads (default: MOMENT_FORGE_THREADS or 1)")
    p_bench.set_defaults(func=cmd_benchmark)

    p_table = sub.add_parser("table", help="aggregate JSONL records into a summary table")
    p_table.add_argument("records", nargs="+")
    p_table.add_argument("--format", choices=("text", "csv"), default="text")
    p_table.add_argument("--out", default=None)
    p_table.set_defaults(func=cmd_table)

    p_check = sub.add_parser("check", help="fast estimator self-check")
    p_check.set_defaults(func=cmd_check)

    p_gen = sub.add_parser("datagen", help="sample a synthetic design to .npz")
    p_gen.add_argument("--design", required=True)
    p_gen.add_argument("--n", type=int, default=1000)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=cmd_datagen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except MomentForgeError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
