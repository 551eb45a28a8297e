"""Command-line front end: run, ablate, synth, bench.

Everything meant for programs goes to stdout as ``key=value`` lines, the
last of which summarizes the command.  Progress and errors go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import data_io
from .pipeline import SolverConfig, Variant, run

log = logging.getLogger("argda")

# flag dest -> SolverConfig field
_CONFIG_FLAGS = {
    "k": "k", "lam": "lam", "alpha": "alpha", "iters": "n_iter",
    "neighbors": "n_neighbors", "sigma": "sigma", "kernel": "kernel",
    "kernel_sigma": "kernel_sigma", "variant": "variant", "seed": "seed",
    "attention_floor": "attention_floor",
}
_SWEEPABLE = {"k": int, "lam": float, "lambda": float, "alpha": float,
              "iters": int, "neighbors": int}
_SYNTH_KEYS = {"classes": int, "per_class": int, "offset": float, "rotation": float,
               "dim": int, "noise": float, "separation": float, "seed": int}


class CliError(Exception):
    pass


def parse_synth(spec: str) -> tuple[str, dict]:
    """Parse ``kind[:key=value,...]``, e.g. ``gaussian_shift:classes=3,rotation=20``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    if kind not in data_io.SYNTHETIC_KINDS:
        raise CliError(f"unknown synthetic kind {kind!r}; choose from {data_io.SYNTHETIC_KINDS}")
    params = {}
    for item in filter(None, (p.strip() for p in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep or key not in _SYNTH_KEYS:
            raise CliError(f"bad synthetic parameter {item!r}; known keys: {sorted(_SYNTH_KEYS)}")
        try:
            params[key] = _SYNTH_KEYS[key](value)
        except ValueError:
            raise CliError(f"synthetic parameter {key} expects a number, got {value!r}") from None
    return kind, params


def _synthetic(spec: str, seed: int | None):
    kind, params = parse_synth(spec)
    if "seed" not in params:
        params["seed"] = 0 if seed is None else seed
    if "classes" in params:
        params["n_classes"] = params.pop("classes")
    return data_io.generate_synthetic(kind, **params)


def _load(args):
    """Return ``(features, split, truth, manifest_config)``."""
    if args.manifest:
        X, split, truth = data_io.load_dataset(args.manifest)
        return X, split, truth, data_io.load_manifest_config(args.manifest)
    ds = _synthetic(args.synth, args.seed)
    return ds.features, ds.split, ds.truth, {}


def _config(args, manifest_config: dict) -> SolverConfig:
    known = {f.name for f in fields(SolverConfig)}
    unknown = set(manifest_config) - known
    if unknown:
        raise CliError(f"manifest config has unknown keys {sorted(unknown)}")
    values = dict(manifest_config)
    for dest, name in _CONFIG_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            values[name] = value
    if getattr(args, "no_repulsive", False):
        values["use_repulsive"] = False
    if getattr(args, "uniform_attention", False):
        values["uniform_attention"] = True
    try:
        return SolverConfig(**values)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid configuration: {exc}") from None


def _fmt(value) -> str:
    if value is None:
        return "na"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _emit(**pairs) -> None:
    print(" ".join(f"{k}={_fmt(v)}" for k, v in pairs.items()))


def _write_rows(rows: list[dict], path, fmt: str) -> None:
    path = Path(path)
    try:
        if fmt == "json":
            path.write_text(json.dumps(rows, indent=2) + "\n", encoding="utf-8")
        else:
            with path.open("w", newline="", encoding="utf-8") as fh:
                writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else [])
                writer.writeheader()
                writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        # map() yields in submission order, independent of completion order
        return list(pool.map(fn, items))


def cmd_run(args) -> int:
    X, split, truth, mcfg = _load(args)
    config = _config(args, mcfg)
    log.info("running %s on %d source / %d target samples",
             config.variant.value, split.n_source, split.n_target)
    report = run(X, split, config, truth)
    log.info("finished in %.2fs after %d iterations", report.elapsed, len(report.iterations))
    if args.out:
        data_io.save_report(report, args.out, args.format)
    if report.final_accuracy is not None:
        log.info("target accuracy %.2f", report.final_accuracy)
    _emit(status="ok", variant=config.variant.value, accuracy=report.final_accuracy,
          iterations=len(report.iterations), report=args.out)
    return 0


def cmd_ablate(args) -> int:
    X, split, truth, mcfg = _load(args)
    base = _config(args, mcfg)
    configs = [replace(base, variant=v) for v in Variant]
    reports = _map(lambda c: run(X, split, c, truth), configs, args.jobs)
    rows = [{"variant": c.variant.value, "accuracy": r.final_accuracy,
             "iterations": len(r.iterations)} for c, r in zip(configs, reports)]
    for row in rows:
        _emit(**row)
    if args.out:
        _write_rows(rows, args.out, args.format)
    _emit(status="ok", rows=len(rows), report=args.out)
    return 0


def parse_sweep(spec: str) -> tuple[str, list]:
    name, sep, values = spec.partition("=")
    name = name.strip()
    if not sep or name not in _SWEEPABLE:
        raise CliError(f"sweep must look like NAME=v1,v2,... with NAME in {sorted(_SWEEPABLE)}")
    try:
        parsed = [_SWEEPABLE[name](v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise CliError(f"bad sweep values {values!r}") from None
    if not parsed:
        raise CliError("sweep needs at least one value")
    return ("lam" if name == "lambda" else name), parsed


def cmd_bench(args) -> int:
    X, split, truth, mcfg = _load(args)
    base = _config(args, mcfg)
    if args.sweep:
        name, values = parse_sweep(args.sweep)
        field_name = _CONFIG_FLAGS[name]
        try:
            configs = [replace(base, **{field_name: v}) for v in values]
        except ValueError as exc:
            raise CliError(f"invalid sweep value: {exc}") from None
        reports = _map(lambda c: run(X, split, c, truth), configs, args.jobs)
        rows = [{"parameter": name, "value": v, "accuracy": r.final_accuracy,
                 "iterations": len(r.iterations)} for v, r in zip(values, reports)]
    else:
        report = run(X, split, base, truth)
        rows = [{"iteration": r.iteration, "accuracy": r.accuracy,
                 "n_changed": r.n_changed} for r in report.iterations]
    for row in rows:
        _emit(**row)
    if args.out:
        _write_rows(rows, args.out, args.format)
    accs = [row["accuracy"] for row in rows if row["accuracy"] is not None]
    spread = max(accs) - min(accs) if accs else None
    _emit(status="ok", rows=len(rows), accuracy_range=spread, report=args.out)
    return 0


def cmd_synth(args) -> int:
    ds = _synthetic(args.synth, args.seed)
    if not args.out:
        raise CliError("synth needs --out DIRECTORY")
    path = data_io.save_dataset(args.out, ds.features, ds.split, ds.truth)
    log.info("wrote %d samples to %s", ds.split.n, path.parent)
    _emit(status="ok", manifest=path, n_source=ds.split.n_source,
          n_target=ds.split.n_target, classes=ds.split.n_classes)
    return 0


def _add_data_flags(p, need_data=True):
    src = p.add_mutually_exclusive_group(required=need_data)
    src.add_argument("--manifest", help="JSON dataset manifest")
    src.add_argument("--synth", help="synthetic task, e.g. gaussian_shift:classes=3,rotation=20")
    p.add_argument("--seed", type=int, help="seed for synthetic data (default 0)")


def _add_config_flags(p):
    g = p.add_argument_group("solver settings (flag > manifest 'config' > default)")
    g.add_argument("--variant", choices=[v.value for v in Variant],
                   help="model variant (default arg-da)")
    g.add_argument("--k", type=int, help="subspace dimension (default 200, capped)")
    g.add_argument("--lambda", dest="lam", type=float, help="ridge weight (default 0.1)")
    g.add_argument("--alpha", type=float, help="propagation trade-off in (0,1) (default 0.9)")
    g.add_argument("--iters", type=int, help="maximum outer iterations T (default 10)")
    g.add_argument("--neighbors", type=int, help="kNN graph width p (default 5)")
    g.add_argument("--sigma", type=float, help="heat-kernel bandwidth (default: median distance)")
    g.add_argument("--kernel", choices=["none", "linear", "rbf"], help="kernelization (default none)")
    g.add_argument("--kernel-sigma", type=float, help="rbf kernel bandwidth (default: median)")
    g.add_argument("--attention-floor", type=float,
                   help="remap attention to [floor, 1] (default off)")
    g.add_argument("--uniform-attention", action="store_true",
                   help="force every attention weight to 1")
    g.add_argument("--no-repulsive", action="store_true", help="drop the repulsive MMD terms")
    p.add_argument("--out", help="output file")
    p.add_argument("--format", choices=["json", "csv"], default="json",
                   help="output format (default json)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="argda", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="adapt one task and write a report")
    _add_data_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate", help="compare dga-da, dga+f, dga+a and arg-da")
    _add_data_flags(p)
    _add_config_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("bench", help="parameter sweep, or a convergence trace without --sweep")
    _add_data_flags(p)
    _add_config_flags(p)
    p.add_argument("--sweep", help="NAME=v1,v2,... with NAME in k, lambda, alpha, iters, neighbors")
    p.add_argument("--jobs", type=int, default=1, help="parallel runs (default 1)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="write a synthetic task as CSV files plus manifest")
    p.add_argument("--synth", required=True, help="synthetic task, e.g. gaussian_shift:classes=3,rotation=20")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(message)s", stream=sys.stderr, force=True)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except (CliError, data_io.DataError, ValueError, ArithmeticError,
            np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
