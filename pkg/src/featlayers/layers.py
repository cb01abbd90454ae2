"""Per-feature network layers over a shared vertex set.

A layer is a simple undirected graph on the instance ids of one table:
vertices u < v are adjacent iff the feature distance between instances
u and v is defined and at most the feature's threshold (nominal: iff
the values match exactly).  Every layer built from one table has the
same vertex set, so an edge set is stored as a packed bitset over the
canonical pair indexing

    index(u, v) = u*n - u*(u+1)/2 + (v - u - 1)      for 0 <= u < v < n

which orders pairs lexicographically.  Bitsets make the Boolean layer
algebra (AND/OR/NOT) byte-level operations.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .distance import time_slot
from .ingest import ConfigError, DataError, FeatureSpec, InstanceTable


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_bases(n: int) -> np.ndarray:
    """First pair index for each row vertex u (length n, ascending)."""
    u = np.arange(n, dtype=np.int64)
    return u * n - u * (u + 1) // 2


def pair_index(u, v, n: int):
    """Pair index of (u, v) with u < v; accepts scalars or arrays."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    return u * n - u * (u + 1) // 2 + (v - u - 1)


def pair_uv(idx, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Invert pair_index: idx -> (u, v) arrays with u < v."""
    idx = np.asarray(idx, dtype=np.int64)
    bases = pair_bases(n)
    u = np.searchsorted(bases, idx, side="right") - 1
    v = idx - bases[u] + u + 1
    return u, v


class Layer:
    """Edge set of one layer, packed 8 pairs per byte (little bit order).

    Equality compares vertex count and edge set; the name is a label
    (feature name or composition expression) and does not participate.
    """

    __slots__ = ("name", "n_vertices", "bits")

    def __init__(self, name: str, n_vertices: int, bits: np.ndarray):
        expected = (n_pairs(n_vertices) + 7) // 8
        if bits.dtype != np.uint8 or bits.shape != (expected,):
            raise ValueError(
                f"layer {name!r}: bit array must be uint8 of length {expected}"
            )
        self.name = name
        self.n_vertices = n_vertices
        self.bits = bits

    @classmethod
    def from_pair_indices(cls, name: str, n_vertices: int, idx) -> "Layer":
        conn = np.zeros(n_pairs(n_vertices), dtype=bool)
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size:
            if idx.min() < 0 or idx.max() >= conn.size:
                raise ValueError(f"layer {name!r}: pair index out of range")
            conn[idx] = True
        return cls(name, n_vertices, np.packbits(conn, bitorder="little"))

    @classmethod
    def from_edges(
        cls, name: str, n_vertices: int, edges: Iterable[tuple[int, int]]
    ) -> "Layer":
        idx = []
        for u, v in edges:
            if u == v:
                raise ValueError(f"layer {name!r}: self-loop ({u}, {v})")
            if u > v:
                u, v = v, u
            if not (0 <= u and v < n_vertices):
                raise ValueError(f"layer {name!r}: vertex out of range ({u}, {v})")
            idx.append(u * n_vertices - u * (u + 1) // 2 + (v - u - 1))
        return cls.from_pair_indices(name, n_vertices, idx)

    @property
    def edge_count(self) -> int:
        return int(np.bitwise_count(self.bits).sum())

    def pair_indices(self) -> np.ndarray:
        """Edge pair indices, ascending (= lexicographic (u, v) order)."""
        count = n_pairs(self.n_vertices)
        flat = np.unpackbits(self.bits, count=count, bitorder="little")
        return np.flatnonzero(flat)

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return pair_uv(self.pair_indices(), self.n_vertices)

    def edge_set(self) -> set[tuple[int, int]]:
        u, v = self.edge_arrays()
        return set(zip(u.tolist(), v.tolist()))

    def has_edge(self, u: int, v: int) -> bool:
        if u == v:
            return False
        if u > v:
            u, v = v, u
        idx = u * self.n_vertices - u * (u + 1) // 2 + (v - u - 1)
        return bool((self.bits[idx >> 3] >> (idx & 7)) & 1)

    def degrees(self) -> np.ndarray:
        u, v = self.edge_arrays()
        return np.bincount(u, minlength=self.n_vertices) + np.bincount(
            v, minlength=self.n_vertices
        )

    def renamed(self, name: str) -> "Layer":
        return Layer(name, self.n_vertices, self.bits)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Layer):
            return NotImplemented
        return self.n_vertices == other.n_vertices and np.array_equal(
            self.bits, other.bits
        )

    def __hash__(self):
        return hash((self.n_vertices, self.bits.tobytes()))

    def __repr__(self):
        return (
            f"Layer({self.name!r}, n_vertices={self.n_vertices}, "
            f"edges={self.edge_count})"
        )


# -- building from features --------------------------------------------------

def _column_floats(table: InstanceTable, spec: FeatureSpec) -> np.ndarray:
    """Scalar feature column as float64 with NaN for missing values."""
    raw = table.columns[spec.name]
    out = np.full(len(raw), np.nan)
    for i, value in enumerate(raw):
        if value is None:
            continue
        if spec.ftype == "numeric":
            out[i] = value
        elif spec.ftype == "date":
            out[i] = value.toordinal()
        elif spec.ftype == "time":
            out[i] = time_slot(*value)
        else:
            raise TypeError(spec.ftype)
    return out


def _location_radians(
    table: InstanceTable, spec: FeatureSpec
) -> tuple[np.ndarray, np.ndarray]:
    raw = table.columns[spec.name]
    lat = np.full(len(raw), np.nan)
    lon = np.full(len(raw), np.nan)
    for i, value in enumerate(raw):
        if value is not None:
            lat[i] = math.radians(value[0])
            lon[i] = math.radians(value[1])
    return lat, lon


def _row_distances(table: InstanceTable, spec: FeatureSpec):
    """Yield (u, d) where d holds distances from u to all v > u.

    Undefined distances (either value missing) come out as NaN, which
    fails every <= threshold comparison.
    """
    n = table.n_instances
    if spec.ftype == "location":
        lat, lon = _location_radians(table, spec)
        cos_lat = np.cos(lat)
        two_r = 2.0 * spec.radius
        for u in range(n - 1):
            h = (
                np.sin(0.5 * (lat[u + 1 :] - lat[u])) ** 2
                + cos_lat[u] * cos_lat[u + 1 :] * np.sin(0.5 * (lon[u + 1 :] - lon[u])) ** 2
            )
            yield u, two_r * np.arcsin(np.minimum(np.sqrt(h), 1.0))
    else:
        x = _column_floats(table, spec)
        for u in range(n - 1):
            yield u, np.abs(x[u + 1 :] - x[u])


def _build_nominal(table: InstanceTable, spec: FeatureSpec) -> Layer:
    # exact-match cliques per value bucket; same result as pairwise scan
    n = table.n_instances
    buckets: dict[str, list[int]] = {}
    for i, value in enumerate(table.columns[spec.name]):
        if value is not None:
            buckets.setdefault(value, []).append(i)
    conn = np.zeros(n_pairs(n), dtype=bool)
    for members in buckets.values():
        ids = np.asarray(members, dtype=np.int64)  # ascending by construction
        for k in range(len(ids) - 1):
            u = ids[k]
            vs = ids[k + 1 :]
            conn[u * n - u * (u + 1) // 2 + (vs - u - 1)] = True
    return Layer(spec.name, n, np.packbits(conn, bitorder="little"))


def build_layer(table: InstanceTable, spec: FeatureSpec) -> Layer:
    """Build the layer of one feature: edge iff distance <= threshold."""
    if spec.ftype == "nominal":
        return _build_nominal(table, spec)
    if spec.threshold is None:
        raise ConfigError(f"feature {spec.name!r} has no threshold")
    n = table.n_instances
    conn = np.zeros(n_pairs(n), dtype=bool)
    bases = pair_bases(n)
    for u, d in _row_distances(table, spec):
        conn[bases[u] : bases[u] + d.size] = d <= spec.threshold
    return Layer(spec.name, n, np.packbits(conn, bitorder="little"))


def build_all_layers(table: InstanceTable) -> list[Layer]:
    return [build_layer(table, spec) for spec in table.schema]


def layer_density(layer: Layer) -> float:
    """Fraction of the n(n-1)/2 possible edges that are present."""
    if layer.n_vertices < 2:
        raise ValueError("density needs at least 2 vertices")
    return layer.edge_count / n_pairs(layer.n_vertices)


# -- threshold selection ------------------------------------------------------

@dataclass(frozen=True)
class DensityPoint:
    threshold: float
    density: float
    delta: float


class ThresholdSuggestion(NamedTuple):
    threshold: float
    #: True when every grid step left the density unchanged
    flat: bool


def threshold_sweep(
    table: InstanceTable, spec: FeatureSpec, grid: list[float]
) -> list[DensityPoint]:
    """Layer density at each grid threshold; distances computed once."""
    if spec.ftype == "nominal":
        raise ConfigError(f"feature {spec.name!r}: nominal features have no sweep")
    if not grid:
        raise ConfigError("sweep grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("sweep grid must be strictly ascending")
    if table.n_instances < 2:
        raise DataError("sweep needs at least 2 instances")

    chunks = [d for _, d in _row_distances(table, spec)]
    distances = np.concatenate(chunks) if chunks else np.empty(0)
    distances = np.sort(distances[~np.isnan(distances)])
    total = n_pairs(table.n_instances)

    points: list[DensityPoint] = []
    previous = None
    for tau in grid:
        density = float(np.searchsorted(distances, tau, side="right")) / total
        delta = 0.0 if previous is None else density - previous
        points.append(DensityPoint(threshold=tau, density=density, delta=delta))
        previous = density
    return points


def suggest_threshold(sweep: list[DensityPoint]) -> ThresholdSuggestion:
    """Grid value with the largest density jump; ties take the smaller.

    A completely flat sweep returns the smallest grid value with the
    flat flag set, since no jump marks a natural scale.
    """
    if len(sweep) < 2:
        raise ValueError("suggest_threshold needs at least 2 sweep points")
    deltas = [p.delta for p in sweep]
    best = max(deltas)
    if best <= 0.0:
        return ThresholdSuggestion(threshold=sweep[0].threshold, flat=True)
    return ThresholdSuggestion(threshold=sweep[deltas.index(best)].threshold, flat=False)


# -- edge-list files ----------------------------------------------------------

_HEADER_RE = re.compile(r"^# layer (?P<name>.*) vertices (?P<n>\d+)$")


def format_edgelist(layer: Layer) -> str:
    """Canonical edge-list text: header, then ascending `u v` lines."""
    lines = [f"# layer {layer.name} vertices {layer.n_vertices}"]
    u, v = layer.edge_arrays()
    lines.extend(f"{a} {b}" for a, b in zip(u.tolist(), v.tolist()))
    return "\n".join(lines) + "\n"


def parse_edgelist(text: str) -> Layer:
    lines = text.splitlines()
    if not lines:
        raise DataError("empty edge-list file")
    header = _HEADER_RE.match(lines[0])
    if header is None:
        raise DataError(f"bad edge-list header: {lines[0]!r}")
    n = int(header.group("n"))
    edges = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        try:
            u, v = map(int, line.split())
        except ValueError:
            raise DataError(f"line {lineno}: bad edge line {line!r}") from None
        if not (0 <= u < v < n):
            raise DataError(f"line {lineno}: edge ({u}, {v}) out of order or range")
        edges.append((u, v))
    return Layer.from_edges(header.group("name"), n, edges)


def write_edgelist(layer: Layer, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_edgelist(layer))


def read_edgelist(path) -> Layer:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edgelist(fh.read())
