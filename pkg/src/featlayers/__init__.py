"""Multi-feature event data as multilayer similarity networks.

Build one network layer per feature (edge = similar under that
feature's threshold), compose layers with Boolean set algebra, and
recreate the communities of AND compositions by intersecting
per-layer communities instead of recomputing them.
"""

from .community import (
    UNASSIGNED,
    Partition,
    connected_components,
    detect_communities,
    modularity,
    read_partition,
    write_partition,
)
from .compose import (
    And,
    LayerRef,
    Not,
    Or,
    and_compose,
    check_bounds,
    eval_expr,
    evaluate,
    expr_to_str,
    nand_expr,
    nor_expr,
    not_compose,
    or_compose,
    parse_expr,
    xor_expr,
)
from .distance import (
    EARTH_RADIUS_KM,
    EARTH_RADIUS_MILES,
    UNDEFINED,
    date_distance,
    feature_distance,
    haversine_distance,
    nominal_distance,
    numeric_distance,
    time_distance,
    time_slot,
)
from .ingest import (
    ConfigError,
    DataError,
    FeatureSpec,
    InstanceTable,
    load_dataset,
    parse_schema,
    parse_schema_config,
    schema_to_config,
    table_to_csv,
    validate_instances,
)
from .experiment import (
    ExperimentConfig,
    run_experiment,
)
from .layers import (
    DensityPoint,
    Layer,
    build_all_layers,
    build_layer,
    layer_density,
    read_edgelist,
    suggest_threshold,
    threshold_sweep,
    write_edgelist,
)
from .recreate import (
    InvariantError,
    SelfPreservationReport,
    check_self_preserving,
    coverage_breakdown,
    intersect_partitions,
    jaccard,
    jaccard_rank_compare,
)
from .synth import BlockSpec, SynthSpec, crossed_nominal_spec, generate

__version__ = "0.1.0"

__all__ = [
    "UNASSIGNED",
    "UNDEFINED",
    "EARTH_RADIUS_KM",
    "EARTH_RADIUS_MILES",
    "And",
    "BlockSpec",
    "ConfigError",
    "DataError",
    "DensityPoint",
    "ExperimentConfig",
    "FeatureSpec",
    "InstanceTable",
    "InvariantError",
    "Layer",
    "LayerRef",
    "Not",
    "Or",
    "Partition",
    "SelfPreservationReport",
    "SynthSpec",
    "and_compose",
    "build_all_layers",
    "build_layer",
    "check_bounds",
    "check_self_preserving",
    "connected_components",
    "coverage_breakdown",
    "crossed_nominal_spec",
    "date_distance",
    "detect_communities",
    "eval_expr",
    "evaluate",
    "expr_to_str",
    "feature_distance",
    "generate",
    "haversine_distance",
    "intersect_partitions",
    "jaccard",
    "jaccard_rank_compare",
    "layer_density",
    "load_dataset",
    "modularity",
    "nand_expr",
    "nominal_distance",
    "nor_expr",
    "not_compose",
    "numeric_distance",
    "or_compose",
    "parse_expr",
    "parse_schema",
    "parse_schema_config",
    "read_edgelist",
    "read_partition",
    "run_experiment",
    "schema_to_config",
    "suggest_threshold",
    "table_to_csv",
    "threshold_sweep",
    "time_distance",
    "time_slot",
    "validate_instances",
    "write_edgelist",
    "write_partition",
    "xor_expr",
]
