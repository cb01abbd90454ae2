"""End-to-end experiment: build, compose, detect, recreate, compare.

Runs both routes to the communities of every AND composition in the
configured lattice (all feature pairs, plus the all-features AND when
there are more than two features):

* recompute path: compose the layers, then detect on the result;
* recreation path: detect once per feature layer, then intersect the
  per-layer partitions.

Each stage is timed with a median-of-``repeats`` wall clock and the
two path totals are reported side by side.  The report also carries
layer densities, edge-count bound checks, rank-wise Jaccard between
detected and recreated partitions, a coverage breakdown, and sampled
self-preservation verdicts for the per-feature layers.
"""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from itertools import combinations

from .compose import check_bounds, evaluate
from .community import Partition, detect_communities
from .ingest import ConfigError, InstanceTable
from .layers import Layer, build_layer, layer_density
from .recreate import (
    check_self_preserving,
    coverage_breakdown,
    intersect_partitions,
    jaccard_rank_compare,
)
from .synth import crossed_nominal_spec, generate

STAGES = ("build", "compose", "detect", "detect_layers", "recreate", "compare")


@dataclass(frozen=True)
class ExperimentConfig:
    """What to run; either synth_n or a pre-loaded table drives the data."""

    synth_n: int | None = None
    synth_q: int | None = None  # None: scale with n (see crossed_nominal_spec)
    noise: float = 0.0
    seed: int = 0
    min_size: int = 3
    k: int = 5
    repeats: int = 3
    sp_communities: int = 1
    sp_subsets: int = 12
    threads: int = 1


def _timed(work, repeats: int):
    """Run work() repeats times; return (last result, samples, median)."""
    samples = []
    result = None
    for _ in range(max(1, repeats)):
        start = time.perf_counter()
        result = work()
        samples.append(time.perf_counter() - start)
    return result, samples, statistics.median(samples)


def _map_maybe_threads(fn, items, threads: int) -> list:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def composition_lattice(features: list[str]) -> list[list[str]]:
    """All feature pairs, plus the full set when more than two."""
    subsets = [list(pair) for pair in combinations(features, 2)]
    if len(features) > 2:
        subsets.append(list(features))
    return subsets


def _and_expression(names: list[str]) -> str:
    text = names[0]
    for name in names[1:]:
        text = f"({text} AND {name})"
    return text


def run_experiment(
    config: ExperimentConfig, table: InstanceTable | None = None
) -> dict:
    """Run both paths over the AND lattice and return the RunReport dict."""
    if table is None:
        if config.synth_n is None:
            raise ConfigError("experiment needs synth_n or a loaded dataset")
        spec = crossed_nominal_spec(
            config.synth_n, q=config.synth_q, noise=config.noise, seed=config.seed
        )
        table, _ = generate(spec)
    features = [s.name for s in table.schema]
    if len(features) < 2:
        raise ConfigError("experiment needs at least 2 features")
    lattice = composition_lattice(features)
    expressions = [_and_expression(subset) for subset in lattice]

    stages: dict[str, dict] = {}

    def record(name, work):
        result, samples, median = _timed(work, config.repeats)
        stages[name] = {"samples": samples, "median": median}
        return result

    layers: list[Layer] = record(
        "build", lambda: [build_layer(table, s) for s in table.schema]
    )
    store = {layer.name: layer for layer in layers}

    composed: list[Layer] = record(
        "compose", lambda: [evaluate(expr, store) for expr in expressions]
    )

    detect = lambda layer: detect_communities(
        layer, seed=config.seed, min_size=config.min_size
    )
    composed_parts: list[Partition] = record(
        "detect", lambda: _map_maybe_threads(detect, composed, config.threads)
    )
    layer_parts: list[Partition] = record(
        "detect_layers", lambda: _map_maybe_threads(detect, layers, config.threads)
    )
    by_feature = dict(zip(features, layer_parts))

    def recreate_all():
        return [
            intersect_partitions(
                [by_feature[name] for name in subset], min_size=config.min_size
            )
            for subset in lattice
        ]

    recreated: list[Partition] = record("recreate", recreate_all)

    def compare_all():
        series = {}
        for expr, actual, redone in zip(expressions, composed_parts, recreated):
            series[expr] = [
                list(point) for point in jaccard_rank_compare(actual, redone, config.k)
            ]
        partitions = dict(by_feature)
        partitions.update(zip(expressions, composed_parts))
        rows = coverage_breakdown(partitions)
        return series, rows

    (jaccard_series, coverage_rows) = record("compare", compare_all)

    bounds = []
    for expr, subset, result in zip(expressions, lattice, composed):
        report = check_bounds(result, "AND", [store[name] for name in subset])
        bounds.append(
            {
                "expr": expr,
                "op": report.op,
                "result_edges": report.result_edges,
                "operand_edges": list(report.operand_edges),
                "lower": report.lower,
                "upper": report.upper,
                "passed": report.passed,
            }
        )

    sp_start = time.perf_counter()
    self_preservation = []
    for layer, part in zip(layers, layer_parts):
        ids = list(range(min(config.sp_communities, part.n_communities)))
        report = check_self_preserving(
            layer,
            part,
            mode="auto",
            sample_count=config.sp_subsets,
            min_size=config.min_size,
            seed=config.seed,
            community_ids=ids,
        )
        self_preservation.append(
            {
                "layer": layer.name,
                "overall": report.overall,
                "proven": report.proven,
                "checks": [
                    {
                        "community_id": c.community_id,
                        "size": c.size,
                        "method": c.method,
                        "subsets_tested": c.subsets_tested,
                        "preserving": c.preserving,
                        "witness": list(c.witness) if c.witness else None,
                    }
                    for c in report.checks
                ],
            }
        )
    sp_seconds = time.perf_counter() - sp_start

    densities = {layer.name: layer_density(layer) for layer in layers}
    densities.update({layer.name: layer_density(layer) for layer in composed})

    recreate_seconds = stages["detect_layers"]["median"] + stages["recreate"]["median"]
    recompute_seconds = stages["compose"]["median"] + stages["detect"]["median"]

    return {
        "config": asdict(config),
        "n_instances": table.n_instances,
        "features": features,
        "compositions": expressions,
        "stages": stages,
        "densities": densities,
        "bounds": bounds,
        "jaccard": jaccard_series,
        "coverage": [
            {
                "label": row.label,
                "n_features": row.n_features,
                "count": row.count,
                "percent": row.percent,
            }
            for row in coverage_rows
        ],
        "self_preservation": self_preservation,
        "self_preservation_seconds": sp_seconds,
        "paths": {
            "recreate_seconds": recreate_seconds,
            "recompute_seconds": recompute_seconds,
            "ratio": recreate_seconds / recompute_seconds,
        },
    }
