"""Recreating AND-composed communities from per-layer partitions.

The central claim this module carries: when the communities of two
layers are self-preserving, the communities of their AND composition
are exactly the pairwise intersections of per-layer communities, so
they can be recreated without ever building the composed layer.

Self-preservation of a community C on its layer means every connected
subset S of C with at least 3 vertices re-forms as its own community
once the rest of C is removed.  Checking that literally is exponential
in |C|, so small communities are enumerated exhaustively and large
ones are sampled; a sampled "preserving" verdict is evidence, not
proof, and reports say which mode produced them.

Intersection folds pairwise but dissolves undersized fragments only
after the full fold; dissolving mid-fold would make the result depend
on fold order.  Intersections of more than two partitions are provided
but heuristic: the two-layer case is the analytically grounded one.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from .community import UNASSIGNED, Partition, detect_communities
from .ingest import DataError
from .layers import Layer


class InvariantError(RuntimeError):
    """A cross-checked invariant failed (CLI exit code 4)."""


# -- self-preservation ---------------------------------------------------------

@dataclass(frozen=True)
class CommunityCheck:
    community_id: int
    size: int
    method: str  # "exhaustive" or "sampled"
    subsets_tested: int
    preserving: bool
    witness: tuple[int, ...] | None = None


@dataclass(frozen=True)
class SelfPreservationReport:
    layer_name: str
    checks: tuple[CommunityCheck, ...]

    @property
    def overall(self) -> bool:
        return all(c.preserving for c in self.checks)

    @property
    def proven(self) -> bool:
        # a violation witness is proof on its own; a preserving verdict is
        # proof only when every subset was enumerated
        return all(
            not c.preserving or c.method == "exhaustive" for c in self.checks
        )

    def lines(self) -> list[str]:
        out = [f"self-preservation on {self.layer_name}"]
        for c in self.checks:
            verdict = "preserving" if c.preserving else "VIOLATED"
            line = (
                f"  community {c.community_id} (size {c.size}): {verdict} "
                f"[{c.method}, {c.subsets_tested} subsets]"
            )
            if c.witness is not None:
                line += f" witness {sorted(c.witness)}"
            out.append(line)
        out.append(
            "  overall: "
            + ("preserving" if self.overall else "violated")
            + ("" if self.proven else " (sampled evidence, not proof)")
        )
        return out


def _community_adjacency(layer: Layer, members: np.ndarray) -> dict[int, list[int]]:
    u, v = layer.edge_arrays()
    inside = np.zeros(layer.n_vertices, dtype=bool)
    inside[members] = True
    keep = inside[u] & inside[v]
    adj: dict[int, list[int]] = {int(m): [] for m in members}
    for a, b in zip(u[keep].tolist(), v[keep].tolist()):
        adj[a].append(b)
        adj[b].append(a)
    return adj


def _is_connected(subset: tuple[int, ...], adj: dict[int, list[int]]) -> bool:
    inside = set(subset)
    stack = [subset[0]]
    seen = {subset[0]}
    while stack:
        for w in adj[stack.pop()]:
            if w in inside and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(inside)


def _grow_connected(members, adj, k: int, rng) -> tuple[int, ...]:
    start = int(members[rng.integers(len(members))])
    chosen = {start}
    pool = list(adj[start])
    while len(chosen) < k:
        # a connected community always has a frontier until S = C
        idx = int(rng.integers(len(pool)))
        cand = pool[idx]
        pool[idx] = pool[-1]
        pool.pop()
        if cand in chosen:
            continue
        chosen.add(cand)
        pool.extend(adj[cand])
    return tuple(sorted(chosen))


def _drop_vertices(layer: Layer, dropped) -> Layer:
    """Remove all edges incident to the dropped vertices (ids kept)."""
    u, v = layer.edge_arrays()
    gone = np.zeros(layer.n_vertices, dtype=bool)
    gone[np.fromiter(dropped, dtype=np.int64)] = True
    keep = ~(gone[u] | gone[v])
    return Layer.from_edges(
        layer.name, layer.n_vertices, zip(u[keep].tolist(), v[keep].tolist())
    )


def _subset_emerges(
    layer: Layer, members: np.ndarray, subset: tuple[int, ...], seed, min_size
) -> bool:
    rest = np.setdiff1d(members, np.asarray(subset, dtype=np.int64))
    reduced = _drop_vertices(layer, rest)
    detected = detect_communities(reduced, seed=seed, min_size=min_size)
    labels = detected.assignment[list(subset)]
    label = labels[0]
    if label == UNASSIGNED or not (labels == label).all():
        return False
    return int(np.count_nonzero(detected.assignment == label)) == len(subset)


def check_self_preserving(
    layer: Layer,
    p: Partition,
    mode: str = "auto",
    sample_count: int = 200,
    exhaustive_limit: int = 8,
    min_size: int = 3,
    seed: int = 0,
    community_ids: list[int] | None = None,
) -> SelfPreservationReport:
    """Check whether the tested communities of p are self-preserving.

    For each community C and each tested connected subset S (|S| >= 3):
    drop the rest of C from the layer, re-detect with the same
    parameters, and require S to emerge as exactly one community.
    Mode "auto" enumerates subsets exhaustively for communities up to
    exhaustive_limit vertices and samples sample_count random connected
    subsets above that; "exhaustive" refuses oversized communities
    instead of sampling; "sampled" always samples.
    """
    if mode not in ("auto", "exhaustive", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    ids = list(community_ids) if community_ids is not None else list(
        range(p.n_communities)
    )
    checks: list[CommunityCheck] = []
    for cid in ids:
        members = p.community(cid)
        adj = _community_adjacency(layer, members)
        exhaustive = len(members) <= exhaustive_limit and mode != "sampled"
        if mode == "exhaustive" and len(members) > exhaustive_limit:
            raise ValueError(
                f"community {cid} has {len(members)} vertices; exhaustive "
                f"enumeration is capped at {exhaustive_limit}"
            )
        witness = None
        tested = 0
        if exhaustive:
            member_list = [int(m) for m in members]
            for size in range(3, len(member_list) + 1):
                for subset in combinations(member_list, size):
                    if not _is_connected(subset, adj):
                        continue
                    tested += 1
                    if not _subset_emerges(layer, members, subset, seed, min_size):
                        witness = subset
                        break
                if witness is not None:
                    break
        else:
            rng = np.random.default_rng([seed, cid])
            for _ in range(sample_count):
                if len(members) < 3:
                    break
                k = int(rng.integers(3, len(members) + 1))
                subset = _grow_connected(members, adj, k, rng)
                tested += 1
                if not _subset_emerges(layer, members, subset, seed, min_size):
                    witness = subset
                    break
        checks.append(
            CommunityCheck(
                community_id=cid,
                size=len(members),
                method="exhaustive" if exhaustive else "sampled",
                subsets_tested=tested,
                preserving=witness is None,
                witness=witness,
            )
        )
    return SelfPreservationReport(layer_name=layer.name, checks=tuple(checks))


# -- recreation ----------------------------------------------------------------

def intersect_partitions(parts: list[Partition], min_size: int = 3) -> Partition:
    """Intersect communities across partitions (the recreation step).

    A vertex stays assigned only when assigned in every input, and two
    vertices share a recreated community only when they share one in
    every input.  Fragments below min_size dissolve afterwards.
    """
    if len(parts) < 2:
        raise ValueError("intersection needs at least 2 partitions")
    n = parts[0].n_vertices
    for p in parts[1:]:
        if p.n_vertices != n:
            raise DataError("partitions disagree on vertex count")
    stacked = np.stack([p.assignment for p in parts])
    assigned = (stacked >= 0).all(axis=0)
    labels = np.full(n, UNASSIGNED, dtype=np.int64)
    if assigned.any():
        _, inv = np.unique(stacked[:, assigned].T, axis=0, return_inverse=True)
        labels[assigned] = inv
    name = parts[0].layer_name
    for p in parts[1:]:
        name = f"({name} AND {p.layer_name})"
    return Partition.from_labels(name, labels, min_size=min_size)


def jaccard(a, b) -> float:
    """|A n B| / |A u B| for two vertex sets."""
    sa = {int(x) for x in a}
    sb = {int(x) for x in b}
    if not sa and not sb:
        raise ValueError("Jaccard of two empty sets is undefined")
    return len(sa & sb) / len(sa | sb)


class JaccardPoint(NamedTuple):
    rank: int  # 1-based
    value: float


def jaccard_rank_compare(
    actual: Partition, recreated: Partition, k: int
) -> list[JaccardPoint]:
    """Jaccard between the i-th largest communities of each partition.

    Ranks follow the canonical community order (size descending,
    smallest member ascending); rank i pairs community i-1 of each.
    """
    if actual.n_vertices != recreated.n_vertices:
        raise DataError("partitions disagree on vertex count")
    if k < 1:
        raise ValueError("k must be >= 1")
    if actual.n_communities == 0 or recreated.n_communities == 0:
        raise ValueError("rank comparison needs at least one community on each side")
    ranks = min(k, actual.n_communities, recreated.n_communities)
    return [
        JaccardPoint(i + 1, jaccard(actual.community(i), recreated.community(i)))
        for i in range(ranks)
    ]


# -- coverage ------------------------------------------------------------------

@dataclass(frozen=True)
class CoverageRow:
    label: str
    n_features: int
    count: int
    percent: float


def coverage_breakdown(
    partitions: dict[str, Partition],
    feature_counts: dict[str, int] | None = None,
) -> list[CoverageRow]:
    """Bucket each vertex under the most specific expression covering it.

    Specificity is the number of distinct features an expression
    touches (ties broken by expression name); vertices in no partition
    land in the "(none)" bucket.  Counts sum to the vertex total, so
    percentages sum to 100.
    """
    if not partitions:
        raise ValueError("coverage needs at least one partition")
    n_set = {p.n_vertices for p in partitions.values()}
    if len(n_set) != 1:
        raise DataError("partitions disagree on vertex count")
    n = n_set.pop()

    if feature_counts is None:
        from .compose import expr_refs, parse_expr

        feature_counts = {
            label: len(expr_refs(parse_expr(label))) for label in partitions
        }
    order = sorted(partitions, key=lambda label: (-feature_counts[label], label))

    taken = np.zeros(n, dtype=bool)
    rows: list[CoverageRow] = []
    for label in order:
        covered = (partitions[label].assignment >= 0) & ~taken
        taken |= covered
        count = int(covered.sum())
        rows.append(
            CoverageRow(
                label=label,
                n_features=feature_counts[label],
                count=count,
                percent=100.0 * count / n,
            )
        )
    rest = int(n - taken.sum())
    rows.append(
        CoverageRow(label="(none)", n_features=0, count=rest, percent=100.0 * rest / n)
    )
    return rows


# -- optional connectivity verification ------------------------------------------

def verify_recreated_connectivity(
    recreated: Partition, composed: Layer
) -> list[int]:
    """Ids of recreated communities not connected in the composed layer.

    Recreation never consults the composed layer; this cross-check is
    for callers who built it anyway and want the discrepancy report.
    """
    from .community import connected_components

    bad: list[int] = []
    for cid in range(recreated.n_communities):
        members = recreated.community(cid)
        induced = _drop_vertices(
            composed, np.setdiff1d(np.arange(composed.n_vertices), members)
        )
        comp = connected_components(induced)
        labels = comp.assignment[members]
        if labels[0] == UNASSIGNED or not (labels == labels[0]).all():
            bad.append(cid)
    return bad
