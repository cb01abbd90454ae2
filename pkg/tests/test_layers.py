import datetime as dt
import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from featlayers.ingest import (
    ConfigError,
    DataError,
    FeatureSpec,
    InstanceTable,
    load_dataset,
    parse_schema,
)
from featlayers.layers import (
    Layer,
    build_all_layers,
    build_layer,
    format_edgelist,
    layer_density,
    n_pairs,
    pair_index,
    pair_uv,
    parse_edgelist,
    read_edgelist,
    suggest_threshold,
    threshold_sweep,
    write_edgelist,
)

# 4 instances; light gives edges {(0,3),(1,2)}, weather {(0,1),(0,3),(1,3)}
FIXTURE_CSV = """\
light,weather
daylight,clear
dark-lit,clear
dark-lit,rain
daylight,clear
"""
FIXTURE_CFG = "feature light\n type nominal\nfeature weather\n type nominal\n"


def fixture_table() -> InstanceTable:
    return load_dataset(FIXTURE_CSV, parse_schema(FIXTURE_CFG))


def test_pair_index_is_lexicographic():
    n = 5
    expected = 0
    for u in range(n):
        for v in range(u + 1, n):
            assert pair_index(u, v, n) == expected
            expected += 1
    assert expected == n_pairs(n)


def test_pair_uv_inverts_pair_index():
    for n in (2, 3, 7, 40):
        idx = np.arange(n_pairs(n))
        u, v = pair_uv(idx, n)
        assert (pair_index(u, v, n) == idx).all()
        assert (u < v).all()
        assert (v < n).all()


def test_layer_from_edges_round_trip():
    # (3, 1) and (1, 3) are the same undirected edge
    layer = Layer.from_edges("g", 5, [(3, 1), (0, 4), (1, 3)])
    assert layer.edge_count == 2
    assert layer.edge_set() == {(1, 3), (0, 4)}
    assert layer.has_edge(1, 3)
    assert layer.has_edge(3, 1)
    assert not layer.has_edge(0, 1)
    assert layer.degrees().tolist() == [1, 1, 0, 1, 1]


def test_layer_equality_ignores_name():
    a = Layer.from_edges("a", 4, [(0, 1)])
    b = Layer.from_edges("b", 4, [(0, 1)])
    c = Layer.from_edges("a", 4, [(0, 2)])
    assert a == b
    assert a != c
    assert a.renamed("z").name == "z"


def test_nominal_layer_fixture():
    table = fixture_table()
    light = build_layer(table, table.feature("light"))
    weather = build_layer(table, table.feature("weather"))
    assert light.edge_set() == {(0, 3), (1, 2)}
    assert weather.edge_set() == {(0, 1), (0, 3), (1, 3)}
    assert light.n_vertices == weather.n_vertices == 4


def test_layer_density_fixture():
    table = fixture_table()
    light = build_layer(table, table.feature("light"))
    assert layer_density(light) == pytest.approx(2 / 6)


def test_density_rejects_tiny_layers():
    with pytest.raises(ValueError):
        layer_density(Layer.from_edges("g", 1, []))


def test_numeric_threshold_is_inclusive():
    spec = FeatureSpec(name="x", ftype="numeric", threshold=2.0)
    table = InstanceTable(schema=[spec], columns={"x": [0.0, 2.0, 5.0]})
    layer = build_layer(table, spec)
    # |0 - 2| == threshold connects; |2 - 5| does not
    assert layer.edge_set() == {(0, 1)}


def test_missing_value_never_connects():
    spec = FeatureSpec(name="x", ftype="numeric", threshold=10.0)
    table = InstanceTable(schema=[spec], columns={"x": [1.0, None, 2.0]})
    layer = build_layer(table, spec)
    assert layer.edge_set() == {(0, 2)}


def test_build_layer_without_threshold_fails():
    spec = FeatureSpec(name="x", ftype="numeric")
    table = InstanceTable(schema=[spec], columns={"x": [1.0, 2.0]})
    with pytest.raises(ConfigError, match="no threshold"):
        build_layer(table, spec)


def test_date_layer():
    spec = FeatureSpec(name="day", ftype="date", threshold=1.0)
    days = [dt.date(2020, 1, 1), dt.date(2020, 1, 2), dt.date(2020, 1, 9)]
    table = InstanceTable(schema=[spec], columns={"day": days})
    assert build_layer(table, spec).edge_set() == {(0, 1)}


def test_time_layer_uses_slots():
    spec = FeatureSpec(name="tod", ftype="time", threshold=1.0)
    times = [(9, 0), (9, 40), (13, 0)]
    table = InstanceTable(schema=[spec], columns={"tod": times})
    # slots 19, 20, 27: one slot apart connects, eight does not
    assert build_layer(table, spec).edge_set() == {(0, 1)}


def test_location_layer():
    spec = FeatureSpec(name="where", ftype="location", threshold=5.0)
    pts = [(40.0, -75.0), (40.01, -75.0), (41.0, -75.0), None]
    table = InstanceTable(schema=[spec], columns={"where": pts})
    layer = build_layer(table, spec)
    # 0.01 deg latitude is under a mile; a full degree is about 69
    assert layer.edge_set() == {(0, 1)}


def test_build_all_layers_share_vertices():
    table = fixture_table()
    layers = build_all_layers(table)
    assert [l.name for l in layers] == ["light", "weather"]
    assert {l.n_vertices for l in layers} == {4}


def test_edges_monotone_in_threshold():
    rng = np.random.default_rng(7)
    for _ in range(25):
        values = rng.uniform(0, 100, size=30).tolist()
        spec_small = FeatureSpec(name="x", ftype="numeric", threshold=5.0)
        spec_large = FeatureSpec(name="x", ftype="numeric", threshold=20.0)
        table = InstanceTable(schema=[spec_small], columns={"x": values})
        small = build_layer(table, spec_small)
        large = build_layer(table, spec_large)
        assert small.edge_set() <= large.edge_set()


def test_build_layer_deterministic():
    rng = np.random.default_rng(3)
    values = rng.uniform(0, 10, size=40).tolist()
    spec = FeatureSpec(name="x", ftype="numeric", threshold=1.5)
    table = InstanceTable(schema=[spec], columns={"x": values})
    a = format_edgelist(build_layer(table, spec))
    b = format_edgelist(build_layer(table, spec))
    assert a == b


# -- threshold sweep ----------------------------------------------------------

# two clusters of six points, centers 4.9 miles apart at latitude 40
TWO_CLUSTER_POINTS = [
    (40.000274, -75.000061),
    (40.000359, -74.999803),
    (39.999594, -74.999524),
    (40.000261, -74.999714),
    (39.999628, -75.00005),
    (39.999871, -74.999573),
    (40.000144, -74.907101),
    (39.999943, -74.907696),
    (40.000055, -74.90786),
    (40.000328, -74.907292),
    (40.000258, -74.907569),
    (40.000471, -74.90703),
]


def two_cluster_table():
    spec = FeatureSpec(name="where", ftype="location", threshold=1.0)
    return InstanceTable(schema=[spec], columns={"where": list(TWO_CLUSTER_POINTS)})


def test_sweep_density_and_deltas():
    table = two_cluster_table()
    points = threshold_sweep(table, table.schema[0], [float(t) for t in range(1, 21)])
    assert [p.threshold for p in points] == [float(t) for t in range(1, 21)]
    assert points[0].delta == 0.0
    densities = [p.density for p in points]
    assert densities == sorted(densities)
    # both clusters are cliques below the gap, everything above it
    assert points[0].density == pytest.approx(30 / 66)
    assert points[-1].density == 1.0


def test_suggest_threshold_two_cluster_fixture():
    table = two_cluster_table()
    points = threshold_sweep(table, table.schema[0], [float(t) for t in range(1, 21)])
    suggestion = suggest_threshold(points)
    # planted gap is 4.9 miles; the jump lands on the next grid value
    assert suggestion.threshold == 5.0
    assert not suggestion.flat


def test_suggest_threshold_flat_sweep():
    spec = FeatureSpec(name="x", ftype="numeric", threshold=1.0)
    table = InstanceTable(schema=[spec], columns={"x": [0.0, 100.0, 200.0]})
    points = threshold_sweep(table, spec, [1.0, 2.0, 3.0])
    suggestion = suggest_threshold(points)
    assert suggestion.flat
    assert suggestion.threshold == 1.0


def test_suggest_threshold_tie_takes_smaller():
    spec = FeatureSpec(name="x", ftype="numeric", threshold=1.0)
    # equal jumps at 2 and 4
    table = InstanceTable(schema=[spec], columns={"x": [0.0, 2.0, 6.0]})
    points = threshold_sweep(table, spec, [1.0, 2.0, 3.0, 4.0, 5.0])
    assert [p.delta for p in points].count(max(p.delta for p in points)) == 2
    assert suggest_threshold(points).threshold == 2.0


def test_sweep_errors():
    table = two_cluster_table()
    spec = table.schema[0]
    with pytest.raises(ConfigError, match="empty"):
        threshold_sweep(table, spec, [])
    with pytest.raises(ConfigError, match="ascending"):
        threshold_sweep(table, spec, [1.0, 1.0])
    nominal = FeatureSpec(name="n", ftype="nominal")
    nom_table = InstanceTable(schema=[nominal], columns={"n": ["a", "b"]})
    with pytest.raises(ConfigError, match="no sweep"):
        threshold_sweep(nom_table, nominal, [1.0])
    tiny = InstanceTable(schema=[spec], columns={"where": [(0.0, 0.0)]})
    with pytest.raises(DataError):
        threshold_sweep(tiny, spec, [1.0])


# -- edge-list files ----------------------------------------------------------

def test_edgelist_format():
    layer = Layer.from_edges("light", 4, [(1, 2), (0, 3)])
    assert format_edgelist(layer) == "# layer light vertices 4\n0 3\n1 2\n"


def test_edgelist_round_trip(tmp_path):
    layer = Layer.from_edges("light layer", 6, [(0, 5), (2, 3), (1, 4)])
    path = tmp_path / "light.edges"
    write_edgelist(layer, path)
    again = read_edgelist(path)
    assert again == layer
    assert again.name == "light layer"


@pytest.mark.parametrize("text", [
    "",
    "vertices 4\n",
    "# layer g vertices -1\n",
    "# layer g vertices 4\n1 1\n",
    "# layer g vertices 4\n3 1\n",
    "# layer g vertices 4\n0 9\n",
    "# layer g vertices 4\n0 x\n",
])
def test_parse_edgelist_rejects_malformed(text):
    with pytest.raises(DataError):
        parse_edgelist(text)


@given(st.integers(2, 12), st.data())
def test_edgelist_text_round_trip(n, data):
    all_pairs = list(itertools.combinations(range(n), 2))
    chosen = data.draw(st.lists(st.sampled_from(all_pairs), unique=True))
    layer = Layer.from_edges("g", n, chosen)
    assert parse_edgelist(format_edgelist(layer)) == layer
