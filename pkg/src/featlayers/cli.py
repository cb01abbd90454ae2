"""Command-line interface.

Commands: build, compose, communities, recreate, validate, sweep,
synth, experiment.  Global flags: --seed, --out, --threads, --format.
Exit codes: 0 success, 2 usage or config error, 3 data error,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .community import detect_communities, read_partition, write_partition
from .compose import (
    And,
    Not,
    Or,
    and_compose,
    check_bounds,
    eval_expr,
    expr_refs,
    parse_expr,
)
from .experiment import ExperimentConfig, run_experiment
from .ingest import (
    ConfigError,
    DataError,
    load_dataset,
    parse_schema_config,
    schema_to_config,
    table_to_csv,
    validate_instances,
)
from .layers import (
    build_layer,
    format_edgelist,
    layer_density,
    read_edgelist,
    suggest_threshold,
    threshold_sweep,
    write_edgelist,
)
from .recreate import InvariantError, intersect_partitions, jaccard_rank_compare
from .recreate import verify_recreated_connectivity
from .synth import crossed_nominal_spec, generate


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"missing file: {path}")
    return p.read_text(encoding="utf-8")


def _load_table(args):
    config = parse_schema_config(_read_text(args.schema))
    table = load_dataset(
        _read_text(args.dataset), list(config.features), config.id_column
    )
    return config, table


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# -- commands ------------------------------------------------------------------

def cmd_build(args) -> int:
    config, table = _load_table(args)
    report = validate_instances(table)
    for line in report.lines():
        print(line, file=sys.stderr)

    layers = {s.name: build_layer(table, s) for s in config.features}
    if args.baseline:
        expr = parse_expr(args.baseline)
        refs = expr_refs(expr)
        unknown = refs - set(layers)
        if unknown:
            raise ConfigError(f"baseline references unknown features: {sorted(unknown)}")
        base = eval_expr(expr, layers)
        for name in layers:
            if name not in refs:
                layers[name] = and_compose(layers[name], base)

    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for name in (s.name for s in config.features):
        layer = layers[name]
        path = out_dir / f"{name}.edges"
        write_edgelist(layer, path)
        rows.append([str(path), layer.name, layer.edge_count, layer_density(layer)])
    if args.format == "json":
        print(
            json.dumps(
                [
                    {"file": f, "layer": l, "edges": e, "density": d}
                    for f, l, e, d in rows
                ],
                indent=2,
            )
        )
    else:
        sys.stdout.write(_csv_text(["file", "layer", "edges", "density"], rows))
    return 0


def _load_store(layer_dir: str):
    paths = sorted(Path(layer_dir).glob("*.edges"))
    if not paths:
        raise ConfigError(f"no .edges files in {layer_dir}")
    return {path.stem: read_edgelist(path) for path in paths}


def cmd_compose(args) -> int:
    store = _load_store(args.layers)
    expr = parse_expr(args.expr)
    result = eval_expr(expr, store)

    if isinstance(expr, (And, Or)):
        op = "AND" if isinstance(expr, And) else "OR"
        operands = [eval_expr(expr.left, store), eval_expr(expr.right, store)]
    elif isinstance(expr, Not):
        op = "NOT"
        operands = [eval_expr(expr.child, store)]
    else:
        op = None
        operands = []
    text = format_edgelist(result)
    if args.out is None:
        sys.stdout.write(text)
        stream = sys.stderr
    else:
        Path(args.out).write_text(text, encoding="utf-8")
        stream = sys.stdout
    if op is not None:
        report = check_bounds(result, op, operands)
        print(report.line(), file=stream)
        if not report.passed:
            raise InvariantError(f"edge-count bound failed: {report.line()}")
    return 0


def cmd_communities(args) -> int:
    layer = read_edgelist(args.layer)
    part = detect_communities(layer, seed=args.seed, min_size=args.min_size)
    from .community import format_partition

    _emit(format_partition(part), args.out)
    return 0


def cmd_recreate(args) -> int:
    parts = [read_partition(path) for path in args.partitions]
    result = intersect_partitions(parts, min_size=args.min_size)
    if args.verify:
        composed = read_edgelist(args.verify)
        bad = verify_recreated_connectivity(result, composed)
        if bad:
            raise InvariantError(
                f"recreated communities {bad} are not connected in {composed.name!r}"
            )
        print(f"verified: all {result.n_communities} communities connected",
              file=sys.stderr)
    from .community import format_partition

    _emit(format_partition(result), args.out)
    return 0


def cmd_validate(args) -> int:
    actual = read_partition(args.actual)
    recreated = read_partition(args.recreated)
    series = jaccard_rank_compare(actual, recreated, args.k)
    if args.format == "json":
        _emit(
            json.dumps([{"rank": p.rank, "jaccard": p.value} for p in series], indent=2)
            + "\n",
            args.out,
        )
    else:
        _emit(
            _csv_text(["rank", "jaccard"], [[p.rank, p.value] for p in series]),
            args.out,
        )
    return 0


def _parse_grid(text: str) -> list[float]:
    if ":" in text:
        try:
            start, stop, step = (float(x) for x in text.split(":"))
        except ValueError:
            raise ConfigError(f"bad grid {text!r}; use start:stop:step") from None
        if step <= 0:
            raise ConfigError("grid step must be positive")
        grid = []
        value = start
        while value <= stop + 1e-9:
            grid.append(round(value, 12))
            value += step
        return grid
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None


def cmd_sweep(args) -> int:
    config, table = _load_table(args)
    try:
        spec = next(s for s in config.features if s.name == args.feature)
    except StopIteration:
        raise ConfigError(f"unknown feature {args.feature!r}") from None
    points = threshold_sweep(table, spec, _parse_grid(args.grid))
    rows = [[p.threshold, p.density, p.delta] for p in points]
    if args.format == "json":
        _emit(
            json.dumps(
                [
                    {"threshold": t, "density": d, "delta": dd}
                    for t, d, dd in rows
                ],
                indent=2,
            )
            + "\n",
            args.out,
        )
    else:
        _emit(_csv_text(["threshold", "density", "delta"], rows), args.out)
    suggestion = suggest_threshold(points)
    note = " (flat sweep; no density jump found)" if suggestion.flat else ""
    print(f"suggested threshold: {suggestion.threshold:g}{note}", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    spec = crossed_nominal_spec(args.n, q=args.q, noise=args.noise, seed=args.seed)
    table, truth = generate(spec)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "dataset.csv").write_text(table_to_csv(table), encoding="utf-8")
    (out_dir / "schema.cfg").write_text(
        schema_to_config(list(spec.schema)), encoding="utf-8"
    )
    for name, part in truth.items():
        write_partition(part, out_dir / f"truth_{name}.part")
    print(f"wrote dataset.csv, schema.cfg and {len(truth)} truth files to {out_dir}")
    return 0


def cmd_experiment(args) -> int:
    table = None
    if args.dataset or args.schema:
        if not (args.dataset and args.schema):
            raise ConfigError("--dataset and --schema go together")
        _, table = _load_table(args)
        synth_n = None
    else:
        if args.synth_n is None:
            raise ConfigError("experiment needs --synth-n or --dataset/--schema")
        synth_n = args.synth_n
    config = ExperimentConfig(
        synth_n=synth_n,
        synth_q=args.q,
        noise=args.noise,
        seed=args.seed,
        min_size=args.min_size,
        k=args.k,
        repeats=args.repeats,
        sp_communities=args.sp_communities,
        sp_subsets=args.sp_subsets,
        threads=args.threads,
    )
    report = run_experiment(config, table=table)

    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "runreport.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    jaccard_rows = [
        [expr, rank, value]
        for expr, series in report["jaccard"].items()
        for rank, value in series
    ]
    (out_dir / "jaccard.csv").write_text(
        _csv_text(["expr", "rank", "jaccard"], jaccard_rows), encoding="utf-8"
    )
    (out_dir / "coverage.csv").write_text(
        _csv_text(
            ["label", "n_features", "count", "percent"],
            [
                [r["label"], r["n_features"], r["count"], r["percent"]]
                for r in report["coverage"]
            ],
        ),
        encoding="utf-8",
    )
    (out_dir / "densities.csv").write_text(
        _csv_text(
            ["layer", "density"], [[k, v] for k, v in report["densities"].items()]
        ),
        encoding="utf-8",
    )

    for name in ("build", "compose", "detect", "detect_layers", "recreate", "compare"):
        stage = report["stages"][name]
        print(f"stage {name}: median {stage['median']:.4f}s over {stage['samples']}")
    failed = [b["expr"] for b in report["bounds"] if not b["passed"]]
    print(f"bounds: {len(report['bounds']) - len(failed)}/{len(report['bounds'])} passed")
    worst = min(
        (value for series in report["jaccard"].values() for _, value in series),
        default=float("nan"),
    )
    print(f"jaccard: minimum over all ranks {worst:g}")
    sp_ok = all(r["overall"] for r in report["self_preservation"])
    print(f"self-preservation: {'all preserving' if sp_ok else 'VIOLATIONS found'}")
    paths = report["paths"]
    print(
        f"recreation {paths['recreate_seconds']:.4f}s vs "
        f"recompute {paths['recompute_seconds']:.4f}s, ratio {paths['ratio']:.3f}"
    )
    print(f"report written to {out_dir / 'runreport.json'}")
    if failed:
        raise InvariantError(f"edge-count bounds failed for: {failed}")
    return 0


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featlayers",
        description="Multilayer similarity networks: Boolean composition "
        "and community recreation.",
    )
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument("--out", default=None, help="output file or directory")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for independent per-layer work")
    parser.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="stdout report format")

    # same flags accepted after the subcommand; SUPPRESS keeps the
    # subparser from clobbering values parsed at the top level
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    common.add_argument("--format", choices=("csv", "json"),
                        default=argparse.SUPPRESS)

    sub = parser.add_subparsers(dest="command", required=True)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[common], **kwargs)

    p = add_parser("build", help="build one layer per schema feature")
    p.add_argument("dataset", help="CSV dataset path")
    p.add_argument("schema", help="schema config path")
    p.add_argument("--baseline", default=None,
                   help="expression to AND into every non-baseline feature layer")
    p.set_defaults(func=cmd_build)

    p = add_parser("compose", help="evaluate a layer expression")
    p.add_argument("expr", help="expression, e.g. '(light AND weather) OR road'")
    p.add_argument("--layers", required=True, help="directory of .edges files")
    p.set_defaults(func=cmd_compose)

    p = add_parser("communities", help="detect communities in a layer")
    p.add_argument("layer", help="edge-list file")
    p.add_argument("--min-size", type=int, default=3)
    p.set_defaults(func=cmd_communities)

    p = add_parser("recreate", help="intersect per-layer partitions")
    p.add_argument("partitions", nargs="+", help="two or more partition files")
    p.add_argument("--min-size", type=int, default=3)
    p.add_argument("--verify", default=None,
                   help="composed layer file; check recreated communities connect")
    p.set_defaults(func=cmd_recreate)

    p = add_parser("validate", help="rank-wise Jaccard between partitions")
    p.add_argument("actual", help="partition file")
    p.add_argument("recreated", help="partition file")
    p.add_argument("-k", type=int, default=5, help="ranks to compare")
    p.set_defaults(func=cmd_validate)

    p = add_parser("sweep", help="density sweep over thresholds")
    p.add_argument("dataset", help="CSV dataset path")
    p.add_argument("schema", help="schema config path")
    p.add_argument("feature", help="feature to sweep")
    p.add_argument("--grid", required=True, help="start:stop:step or v1,v2,...")
    p.set_defaults(func=cmd_sweep)

    p = add_parser("synth", help="generate a planted synthetic dataset")
    p.add_argument("--n", type=int, required=True, help="instance count")
    p.add_argument("--q", type=int, default=None,
                   help="values per feature (default: scale with n)")
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    p = add_parser("experiment", help="run both paths and write a RunReport")
    p.add_argument("--synth-n", type=int, default=None, help="synthesize n instances")
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--dataset", default=None, help="CSV dataset path")
    p.add_argument("--schema", default=None, help="schema config path")
    p.add_argument("--min-size", type=int, default=3)
    p.add_argument("-k", type=int, default=5)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--sp-communities", type=int, default=1,
                   help="communities checked for self-preservation per layer")
    p.add_argument("--sp-subsets", type=int, default=12,
                   help="sampled subsets per checked community")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except InvariantError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
