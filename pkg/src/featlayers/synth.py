"""Synthetic multi-feature datasets with planted community structure.

A dataset is planted as blocks of instances.  Every instance in a
block draws its feature values tightly around the block's base value,
so at noise 0 each block is a clique on every feature layer: intra-
block distances stay below the threshold, and distinct base values
are required to sit far enough apart that inter-block pairs never
connect.  That clique guarantee is what makes planted communities
provably self-preserving, which the recreation validation relies on.

Ground truth per feature groups blocks that share a base value; with
all-distinct bases this is exactly the planted block partition.
Noise re-draws a value's base uniformly among the feature's bases;
ground truth always reflects the planted assignment, so noisy
datasets measure detector robustness against it.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field

import numpy as np

from .community import Partition
from .distance import haversine_distance, time_slot
from .ingest import ConfigError, FeatureSpec, InstanceTable


@dataclass(frozen=True)
class BlockSpec:
    """One planted block: its size and a base value per feature."""

    size: int
    values: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class SynthSpec:
    n_instances: int
    schema: tuple[FeatureSpec, ...]
    blocks: tuple[BlockSpec, ...]
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if sum(b.size for b in self.blocks) != self.n_instances:
            raise ConfigError("block sizes must sum to n_instances")
        if not 0.0 <= self.noise <= 1.0:
            raise ConfigError("noise rate must be in [0, 1]")
        for block in self.blocks:
            for spec in self.schema:
                if spec.name not in block.values:
                    raise ConfigError(
                        f"block is missing a value for feature {spec.name!r}"
                    )


def _distinct_bases(values: list) -> list:
    seen = []
    for v in values:
        if v not in seen:
            seen.append(v)
    return seen


def _check_separation(spec: FeatureSpec, bases: list) -> None:
    """Distinct bases must stay unreachable after intra-block jitter.

    Jitter moves a value at most threshold/4 from its base (time stays
    inside the base's slot), so separation > 1.5 * threshold keeps all
    inter-block distances above the threshold.
    """
    if spec.ftype == "nominal":
        return
    tau = spec.threshold
    for i, a in enumerate(bases):
        for b in bases[i + 1 :]:
            if spec.ftype == "numeric":
                gap = abs(a - b)
            elif spec.ftype == "date":
                gap = abs((a - b).days)
            elif spec.ftype == "time":
                gap = abs(time_slot(*a) - time_slot(*b))
                if gap <= tau:
                    raise ConfigError(
                        f"feature {spec.name!r}: base slots {a} and {b} are "
                        f"within the threshold"
                    )
                continue
            elif spec.ftype == "location":
                gap = haversine_distance(a, b, radius=spec.radius)
            else:
                raise TypeError(spec.ftype)
            if gap <= 1.5 * tau:
                raise ConfigError(
                    f"feature {spec.name!r}: bases {a!r} and {b!r} are only "
                    f"{gap:g} apart; need > {1.5 * tau:g} to keep blocks separated"
                )


def _jitter_column(spec: FeatureSpec, base_ids: np.ndarray, bases: list, rng) -> list:
    """Draw one instance value per row around its base value."""
    n = base_ids.size
    if spec.ftype == "nominal":
        return [bases[i] for i in base_ids]
    tau = spec.threshold
    if spec.ftype == "numeric":
        centers = np.asarray([bases[i] for i in base_ids], dtype=np.float64)
        return (centers + (rng.random(n) * 2.0 - 1.0) * (tau / 4.0)).tolist()
    if spec.ftype == "date":
        amp = int(tau // 4)
        offsets = rng.integers(-amp, amp + 1, size=n) if amp else np.zeros(n, int)
        return [
            bases[i] + _dt.timedelta(days=int(d)) for i, d in zip(base_ids, offsets)
        ]
    if spec.ftype == "time":
        # jitter minutes within the base's half-hour slot: distance 0 intra-block
        minutes = rng.integers(0, 30, size=n)
        out = []
        for i, mm_off in zip(base_ids, minutes):
            hh, mm = bases[i]
            total = hh * 60 + (mm // 30) * 30 + int(mm_off)
            out.append((total // 60, total % 60))
        return out
    if spec.ftype == "location":
        amp_deg = math.degrees(tau / (4.0 * spec.radius * math.sqrt(2.0)))
        lat_off = (rng.random(n) * 2.0 - 1.0) * amp_deg
        lon_off = (rng.random(n) * 2.0 - 1.0) * amp_deg
        return [
            (bases[i][0] + dlat, bases[i][1] + dlon)
            for i, dlat, dlon in zip(base_ids, lat_off, lon_off)
        ]
    raise TypeError(spec.ftype)


def generate(spec: SynthSpec) -> tuple[InstanceTable, dict[str, Partition]]:
    """Generate the dataset and the per-feature ground-truth partitions."""
    rng = np.random.default_rng(spec.seed)
    sizes = np.asarray([b.size for b in spec.blocks], dtype=np.int64)
    block_of = np.repeat(np.arange(len(spec.blocks)), sizes)

    columns: dict[str, list] = {}
    truth: dict[str, Partition] = {}
    for feature in spec.schema:
        block_bases = [b.values[feature.name] for b in spec.blocks]
        bases = _distinct_bases(block_bases)
        _check_separation(feature, bases)
        base_of_block = np.asarray([bases.index(v) for v in block_bases])

        planted = base_of_block[block_of]
        base_ids = planted.copy()
        if spec.noise > 0.0:
            redraw = rng.random(spec.n_instances) < spec.noise
            base_ids[redraw] = rng.integers(len(bases), size=int(redraw.sum()))
        columns[feature.name] = _jitter_column(feature, base_ids, bases, rng)
        truth[feature.name] = Partition.from_labels(feature.name, planted)

    table = InstanceTable(schema=list(spec.schema), columns=columns)
    return table, truth


def crossed_nominal_spec(
    n_instances: int, q: int | None = None, noise: float = 0.0, seed: int = 0
) -> SynthSpec:
    """Three nominal features crossed so AND-compositions genuinely intersect.

    Plants 2q blocks arranged in a cycle; each feature takes q values
    and merges the blocks in pairs, with the three pairings staggered:

        alpha pairs {0,1}, {2,3}, ..., {2q-2, 2q-1}
        beta  pairs {1,2}, {3,4}, ..., {2q-1, 0}
        gamma pairs {i, i+q}

    Any two pairings intersect in single blocks, so every pairwise AND
    and the triple AND share the same 2q-block community structure,
    while each single layer has q communities of two blocks each.  With
    q unset it scales as n/20, keeping blocks near 10 vertices at every
    size so both detection routes face similarly shaped cliques.
    """
    if q is None:
        q = max(2, n_instances // 20)
    if q < 2:
        raise ConfigError("q must be >= 2")
    n_blocks = 2 * q
    base_size, remainder = divmod(n_instances, n_blocks)
    if base_size < 3:
        raise ConfigError(
            f"need at least {3 * n_blocks} instances for q={q} "
            f"(blocks must reach the default community size)"
        )
    schema = (
        FeatureSpec(name="alpha", ftype="nominal"),
        FeatureSpec(name="beta", ftype="nominal"),
        FeatureSpec(name="gamma", ftype="nominal"),
    )
    blocks = []
    for k in range(n_blocks):
        blocks.append(
            BlockSpec(
                size=base_size + (1 if k < remainder else 0),
                values={
                    "alpha": f"a{k // 2}",
                    "beta": f"b{((k - 1) % n_blocks) // 2}",
                    "gamma": f"c{k % q}",
                },
            )
        )
    return SynthSpec(
        n_instances=n_instances,
        schema=schema,
        blocks=tuple(blocks),
        noise=noise,
        seed=seed,
    )
