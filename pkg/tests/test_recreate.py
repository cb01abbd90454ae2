import itertools

import numpy as np
import pytest

from featlayers.community import UNASSIGNED, Partition, detect_communities
from featlayers.ingest import DataError
from featlayers.layers import Layer
from featlayers.recreate import (
    check_self_preserving,
    coverage_breakdown,
    intersect_partitions,
    jaccard,
    jaccard_rank_compare,
    verify_recreated_connectivity,
)


def two_triangles():
    return Layer.from_edges(
        "g", 6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


# clique on 0..3 with a six-vertex path hanging off vertex 3; detection
# carves {6,7,8,9} out of the path, and that community is not
# self-preserving: dropping 9 re-attaches {6,7,8} to the path remnant
def clique_plus_path():
    edges = list(itertools.combinations(range(4), 2))
    chain = [3, 4, 5, 6, 7, 8, 9]
    edges += [(chain[i], chain[i + 1]) for i in range(len(chain) - 1)]
    return Layer.from_edges("g", 10, edges)


# -- self-preservation ------------------------------------------------------------

def test_triangles_are_self_preserving():
    layer = two_triangles()
    p = detect_communities(layer)
    report = check_self_preserving(layer, p, mode="exhaustive")
    assert report.overall
    assert report.proven
    assert all(c.method == "exhaustive" for c in report.checks)
    # a size-3 community has exactly one connected subset of size >= 3
    assert [c.subsets_tested for c in report.checks] == [1, 1]


def test_violation_fixture():
    layer = clique_plus_path()
    p = detect_communities(layer, min_size=3)
    assert p.assignment.tolist() == [0, 0, 0, 0, -1, -1, 1, 1, 1, 1]
    report = check_self_preserving(layer, p, mode="exhaustive",
                                   exhaustive_limit=10)
    by_id = {c.community_id: c for c in report.checks}
    assert by_id[0].preserving
    assert not by_id[1].preserving
    assert by_id[1].witness == (6, 7, 8)
    assert not report.overall
    # the witness is concrete, so the violated verdict is proof
    assert report.proven
    assert any("VIOLATED" in line for line in report.lines())


def test_exhaustive_mode_refuses_oversized_community():
    layer = two_triangles()
    p = Partition.from_labels("g", [0, 0, 0, 0, 0, 0])
    with pytest.raises(ValueError, match="exhaustive"):
        check_self_preserving(layer, p, mode="exhaustive", exhaustive_limit=4)


def test_auto_mode_switches_to_sampling():
    # one 12-clique community: 2^12 subsets is past the exhaustive limit
    layer = Layer.from_edges("g", 12, itertools.combinations(range(12), 2))
    p = detect_communities(layer)
    report = check_self_preserving(layer, p, mode="auto", sample_count=10)
    assert report.checks[0].method == "sampled"
    assert report.checks[0].subsets_tested == 10
    assert report.overall
    assert not report.proven  # sampled preserving verdicts are evidence only


def test_sampled_mode_is_seed_deterministic():
    layer = Layer.from_edges("g", 12, itertools.combinations(range(12), 2))
    p = detect_communities(layer)
    a = check_self_preserving(layer, p, mode="sampled", sample_count=25, seed=7)
    b = check_self_preserving(layer, p, mode="sampled", sample_count=25, seed=7)
    assert a.checks == b.checks


def test_community_ids_filter():
    layer = clique_plus_path()
    p = detect_communities(layer)
    report = check_self_preserving(layer, p, mode="exhaustive",
                                   exhaustive_limit=10, community_ids=[0])
    assert [c.community_id for c in report.checks] == [0]
    assert report.overall


# -- intersection -------------------------------------------------------------------

def test_intersection_hand_fixture():
    # light splits 0-5 | 6-8, weather splits 0-2 | 3-8
    light = Partition.from_labels("light", [0, 0, 0, 0, 0, 0, 1, 1, 1])
    weather = Partition.from_labels("weather", [0, 0, 0, 1, 1, 1, 1, 1, 1])
    out = intersect_partitions([light, weather], min_size=3)
    assert [c.tolist() for c in out.communities()] == \
        [[0, 1, 2], [3, 4, 5], [6, 7, 8]]
    assert out.layer_name == "(light AND weather)"


def test_intersection_unassigned_propagates():
    a = Partition.from_labels("a", [0, 0, 0, UNASSIGNED])
    b = Partition.from_labels("b", [0, 0, 0, 0])
    out = intersect_partitions([a, b], min_size=1)
    assert out.assignment.tolist() == [0, 0, 0, UNASSIGNED]


def test_intersection_min_size_applies_after_all_folds():
    # fragments of size 2 survive the intersection only to dissolve at
    # the end, exactly as a single k-way pass would
    a = Partition.from_labels("a", [0, 0, 0, 0, 1, 1])
    b = Partition.from_labels("b", [0, 0, 1, 1, 1, 1])
    out = intersect_partitions([a, b], min_size=3)
    assert out.assignment.tolist() == [UNASSIGNED] * 6
    keep = intersect_partitions([a, b], min_size=2)
    assert keep.n_communities == 3


def test_intersection_order_independent():
    rng = np.random.default_rng(13)
    n = 40
    parts = [
        Partition.from_labels(f"p{i}", rng.integers(0, 4, size=n))
        for i in range(3)
    ]
    forward = intersect_partitions(parts, min_size=3)
    backward = intersect_partitions(list(reversed(parts)), min_size=3)
    assert forward == backward


def test_intersection_needs_two_partitions():
    p = Partition.from_labels("a", [0, 0, 0])
    with pytest.raises(ValueError):
        intersect_partitions([p])


def test_intersection_vertex_count_mismatch():
    a = Partition.from_labels("a", [0, 0, 0])
    b = Partition.from_labels("b", [0, 0])
    with pytest.raises(DataError):
        intersect_partitions([a, b])


def test_recreation_matches_composed_detection():
    # the central claim at unit scale: intersecting per-layer
    # partitions equals detecting on the AND-composed layer
    from featlayers.compose import and_compose
    from featlayers.ingest import load_dataset, parse_schema
    from featlayers.layers import build_layer

    csv_text = "light,weather\n" + "".join(
        f"{'A' if i < 6 else 'B'},{'X' if i < 3 else 'Y'}\n" for i in range(9))
    table = load_dataset(csv_text, parse_schema(
        "feature light\n type nominal\nfeature weather\n type nominal\n"))
    light = build_layer(table, table.feature("light"))
    weather = build_layer(table, table.feature("weather"))
    composed = and_compose(light, weather)
    actual = detect_communities(composed)
    recreated = intersect_partitions(
        [detect_communities(light), detect_communities(weather)])
    assert recreated == actual
    assert verify_recreated_connectivity(recreated, composed) == []


# -- jaccard ---------------------------------------------------------------------

def test_jaccard_hand_values():
    assert jaccard([0, 1, 2], [0, 1, 2]) == 1.0
    assert jaccard([0, 1], [2, 3]) == 0.0
    assert jaccard([0, 1, 2], [1, 2, 3]) == pytest.approx(2 / 4)
    assert jaccard([0], []) == 0.0


def test_jaccard_empty_pair_is_undefined():
    with pytest.raises(ValueError):
        jaccard([], [])


def test_rank_compare_identical():
    p = Partition.from_labels("g", [0, 0, 0, 1, 1, 1, 2, 2, 2])
    points = jaccard_rank_compare(p, p, k=5)
    assert [pt.rank for pt in points] == [1, 2, 3]
    assert all(pt.value == 1.0 for pt in points)


def test_rank_compare_partial_overlap():
    a = Partition.from_labels("a", [0, 0, 0, 0, 1, 1, 1])
    b = Partition.from_labels("b", [0, 0, 0, 1, 1, 1, 1])
    points = jaccard_rank_compare(a, b, k=2)
    # rank 1: {0,1,2,3} vs {3,4,5,6} overlap 1 of 7
    assert points[0].value == pytest.approx(1 / 7)
    # rank 2: {4,5,6} vs {0,1,2} disjoint
    assert points[1].value == 0.0


def test_rank_compare_truncates_to_available():
    a = Partition.from_labels("a", [0, 0, 0, 1, 1, 1])
    b = Partition.from_labels("b", [0, 0, 0, UNASSIGNED, UNASSIGNED, UNASSIGNED])
    points = jaccard_rank_compare(a, b, k=5)
    assert len(points) == 1


def test_rank_compare_errors():
    p = Partition.from_labels("g", [0, 0, 0])
    empty = Partition.from_labels("e", [UNASSIGNED] * 3)
    with pytest.raises(ValueError):
        jaccard_rank_compare(p, p, k=0)
    with pytest.raises(ValueError):
        jaccard_rank_compare(p, empty, k=1)
    with pytest.raises(DataError):
        jaccard_rank_compare(p, Partition.from_labels("g", [0, 0]), k=1)


# -- coverage ---------------------------------------------------------------------

def test_coverage_breakdown_fixture():
    n = 10
    parts = {
        "(light AND weather)": Partition.from_labels(
            "lw", [0, 0, 0] + [UNASSIGNED] * 7),
        "light": Partition.from_labels(
            "light", [0, 0, 0, 1, 1, 1] + [UNASSIGNED] * 4),
        "weather": Partition.from_labels(
            "weather", [UNASSIGNED] * 6 + [0, 0, 0, UNASSIGNED]),
    }
    rows = coverage_breakdown(parts)
    by_label = {r.label: r for r in rows}
    # most specific expression wins: 0-2 go to the AND bucket
    assert by_label["(light AND weather)"].count == 3
    assert by_label["light"].count == 3
    assert by_label["weather"].count == 3
    assert by_label["(none)"].count == 1
    assert sum(r.count for r in rows) == n
    assert sum(r.percent for r in rows) == pytest.approx(100.0)
    # ordered most specific first, names breaking ties
    assert [r.label for r in rows] == [
        "(light AND weather)", "light", "weather", "(none)"]


def test_coverage_percent_rounds_cleanly():
    parts = {"a": Partition.from_labels("a", [0, 0, 0, UNASSIGNED])}
    rows = coverage_breakdown(parts)
    assert [r.percent for r in rows] == [75.0, 25.0]


# -- recreated connectivity check ---------------------------------------------------

def test_verify_connectivity_flags_disconnected():
    composed = Layer.from_edges("c", 6, [(0, 1), (1, 2), (0, 2)])
    good = Partition.from_labels("p", [0, 0, 0, UNASSIGNED, UNASSIGNED, UNASSIGNED])
    bad = Partition.from_labels("p", [0, 0, 0, 1, 1, 1])
    assert verify_recreated_connectivity(good, composed) == []
    assert verify_recreated_connectivity(bad, composed) == [1]
