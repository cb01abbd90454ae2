"""Disjoint community detection on a single layer.

The detector is a greedy modularity optimizer in the Louvain mold:
sweep vertices in ascending id order, move each to the neighboring
community with the best modularity gain, repeat until stable, then
collapse communities into supernodes and recurse.  Two choices make
it bit-for-bit deterministic across platforms:

* gains are compared in exactly-scaled integer arithmetic
  (2m * w(v, B) - deg(v) * deg(B) with int64 operands), so there are
  no floating-point ties to break differently on different machines;
* ties go to the lowest community id, and a vertex moves only when a
  move is strictly better than staying put.

Communities smaller than ``min_size`` dissolve to UNASSIGNED, which
models vertices that belong to no community.  Community ids are dense
and ordered by (size descending, smallest member ascending).

The ``seed`` parameter is accepted for interface stability but the
sweep is order-deterministic and never consults it.
"""

from __future__ import annotations

import re

import numpy as np
from scipy.sparse import csr_array
from scipy.sparse.csgraph import connected_components as _cc

from .ingest import DataError
from .layers import Layer

UNASSIGNED = -1


def dense_renumber(labels: np.ndarray) -> np.ndarray:
    """Relabel communities to dense ids by (size desc, min member asc).

    Negative labels mean UNASSIGNED and pass through unchanged.
    """
    labels = np.asarray(labels, dtype=np.int64)
    mask = labels >= 0
    out = np.full(labels.shape, UNASSIGNED, dtype=np.int64)
    if not mask.any():
        return out
    uniq, inv = np.unique(labels[mask], return_inverse=True)
    sizes = np.bincount(inv)
    vertices = np.flatnonzero(mask)
    first = np.full(uniq.size, labels.size, dtype=np.int64)
    np.minimum.at(first, inv, vertices)
    order = np.lexsort((first, -sizes))  # size desc, then smallest member asc
    rank = np.empty(uniq.size, dtype=np.int64)
    rank[order] = np.arange(uniq.size)
    out[mask] = rank[inv]
    return out


class Partition:
    """Assignment of each vertex to at most one community.

    ``assignment[v]`` is the community id of vertex v, or UNASSIGNED.
    Ids are kept canonical (dense, size-desc / smallest-member order);
    construct through :meth:`from_labels` to renumber arbitrary labels.
    Equality compares vertex count and assignment; the layer name is a
    label only.
    """

    __slots__ = ("layer_name", "n_vertices", "assignment", "_members")

    def __init__(self, layer_name: str, assignment: np.ndarray):
        self.layer_name = layer_name
        self.assignment = np.asarray(assignment, dtype=np.int64)
        self.n_vertices = int(self.assignment.size)
        self._members: list[np.ndarray] | None = None

    @classmethod
    def from_labels(
        cls, layer_name: str, labels, min_size: int = 1
    ) -> "Partition":
        labels = np.asarray(labels, dtype=np.int64).copy()
        if min_size > 1 and labels.size:
            uniq, counts = np.unique(labels[labels >= 0], return_counts=True)
            small = uniq[counts < min_size]
            if small.size:
                labels[np.isin(labels, small)] = UNASSIGNED
        return cls(layer_name, dense_renumber(labels))

    @property
    def n_communities(self) -> int:
        if self.assignment.size == 0:
            return 0
        return int(self.assignment.max()) + 1

    def communities(self) -> list[np.ndarray]:
        """Member vertex arrays, indexed by community id (ascending)."""
        if self._members is None:
            order = np.argsort(self.assignment, kind="stable")
            order = order[self.assignment[order] >= 0]
            bounds = np.searchsorted(
                self.assignment[order], np.arange(self.n_communities + 1)
            )
            self._members = [
                order[bounds[c] : bounds[c + 1]] for c in range(self.n_communities)
            ]
        return self._members

    def community(self, cid: int) -> np.ndarray:
        return self.communities()[cid]

    def sizes(self) -> np.ndarray:
        return np.asarray([m.size for m in self.communities()], dtype=np.int64)

    @property
    def unassigned_count(self) -> int:
        return int(np.count_nonzero(self.assignment == UNASSIGNED))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.assignment, other.assignment)

    def __hash__(self):
        return hash(self.assignment.tobytes())

    def __repr__(self):
        return (
            f"Partition({self.layer_name!r}, n_vertices={self.n_vertices}, "
            f"communities={self.n_communities}, unassigned={self.unassigned_count})"
        )


# -- construction -------------------------------------------------------------

def _symmetric_csr(layer: Layer) -> csr_array:
    u, v = layer.edge_arrays()
    n = layer.n_vertices
    data = np.ones(2 * u.size, dtype=np.int8)
    return csr_array(
        (data, (np.concatenate((u, v)), np.concatenate((v, u)))), shape=(n, n)
    )


def connected_components(layer: Layer) -> Partition:
    """Connected components as a partition; isolated vertices UNASSIGNED."""
    n = layer.n_vertices
    if n == 0:
        return Partition(layer.name, np.empty(0, dtype=np.int64))
    _, labels = _cc(_symmetric_csr(layer), directed=False)
    labels = labels.astype(np.int64)
    sizes = np.bincount(labels)
    labels[sizes[labels] < 2] = UNASSIGNED
    return Partition(layer.name, dense_renumber(labels))


def _adjacency(eu, ev, ew, n):
    """Unweighted-direction CSR arrays (indptr, indices, weights)."""
    rows = np.concatenate((eu, ev))
    cols = np.concatenate((ev, eu))
    data = np.concatenate((ew, ew))
    counts = np.bincount(rows, minlength=n)
    indptr = np.concatenate(([0], np.cumsum(counts)))
    order = np.argsort(rows, kind="stable")
    return indptr, cols[order], data[order]


def _sweep(n, indptr, indices, weights, deg, comm, comm_deg, two_m) -> int:
    """One ascending pass of greedy moves; returns how many vertices moved."""
    moved = 0
    for v in range(n):
        start, end = indptr[v], indptr[v + 1]
        c0 = comm[v]
        comm_deg[c0] -= deg[v]
        cand = np.concatenate((comm[indices[start:end]], (c0,)))
        wts = np.concatenate((weights[start:end], (0,)))
        uniq, inv = np.unique(cand, return_inverse=True)
        wsum = np.bincount(inv, weights=wts).astype(np.int64)  # exact: ints < 2^53
        gains = two_m * wsum - deg[v] * comm_deg[uniq]
        best = int(np.argmax(gains))  # first max: lowest community id wins ties
        stay = int(np.searchsorted(uniq, c0))
        target = uniq[best] if gains[best] > gains[stay] else c0
        comm[v] = target
        comm_deg[target] += deg[v]
        if target != c0:
            moved += 1
    return moved


def detect_communities(layer: Layer, seed: int = 0, min_size: int = 3) -> Partition:
    """Greedy modularity communities of one layer (see module docstring)."""
    n = layer.n_vertices
    eu, ev = layer.edge_arrays()
    m = eu.size
    if m == 0:
        return Partition.from_labels(layer.name, np.full(n, UNASSIGNED))
    two_m = np.int64(2 * m)

    eu = eu.astype(np.int64)
    ev = ev.astype(np.int64)
    ew = np.ones(m, dtype=np.int64)
    self_w = np.zeros(n, dtype=np.int64)
    node_map = np.arange(n, dtype=np.int64)
    n_nodes = n

    while True:
        indptr, indices, weights = _adjacency(eu, ev, ew, n_nodes)
        deg = np.zeros(n_nodes, dtype=np.int64)
        np.add.at(deg, eu, ew)
        np.add.at(deg, ev, ew)
        deg += 2 * self_w

        comm = np.arange(n_nodes, dtype=np.int64)
        comm_deg = deg.copy()
        level_moves = 0
        while True:
            moved = _sweep(
                n_nodes, indptr, indices, weights, deg, comm, comm_deg, two_m
            )
            level_moves += moved
            if moved == 0:
                break
        if level_moves == 0:
            break

        uniq, new_ids = np.unique(comm, return_inverse=True)
        if uniq.size == n_nodes:
            break
        node_map = new_ids[node_map]

        cu = new_ids[eu]
        cv = new_ids[ev]
        internal = cu == cv
        new_self = np.bincount(
            new_ids, weights=self_w, minlength=uniq.size
        ).astype(np.int64)
        new_self += np.bincount(
            cu[internal], weights=ew[internal], minlength=uniq.size
        ).astype(np.int64)

        lo = np.minimum(cu[~internal], cv[~internal])
        hi = np.maximum(cu[~internal], cv[~internal])
        key = lo * uniq.size + hi
        ukey, kinv = np.unique(key, return_inverse=True)
        ew = np.bincount(kinv, weights=ew[~internal]).astype(np.int64)
        eu = ukey // uniq.size
        ev = ukey % uniq.size
        self_w = new_self
        n_nodes = uniq.size

    return Partition.from_labels(layer.name, node_map, min_size=min_size)


def modularity(layer: Layer, p: Partition) -> float:
    """Newman-Girvan modularity of a partition on a layer.

    UNASSIGNED vertices count as singleton communities: they add no
    internal edges but their degrees still enter the null model.
    """
    if p.n_vertices != layer.n_vertices:
        raise DataError("partition and layer disagree on vertex count")
    m = layer.edge_count
    if m == 0:
        raise ValueError("modularity of an edgeless layer is undefined")
    u, v = layer.edge_arrays()
    deg = layer.degrees().astype(np.float64)
    a = p.assignment[u]
    b = p.assignment[v]
    intra = (a == b) & (a >= 0)
    k = p.n_communities
    e_c = np.bincount(a[intra], minlength=k).astype(np.float64)
    d_c = np.bincount(
        p.assignment[p.assignment >= 0], weights=deg[p.assignment >= 0], minlength=k
    )
    q = float(np.sum(e_c / m - (d_c / (2.0 * m)) ** 2))
    loners = deg[p.assignment == UNASSIGNED]
    q -= float(np.sum((loners / (2.0 * m)) ** 2))
    return q


# -- partition files -----------------------------------------------------------

_PART_HEADER_RE = re.compile(r"^# partition (?P<name>.*) vertices (?P<n>\d+)$")


def format_partition(p: Partition) -> str:
    """Canonical partition text: `vertex community` lines, `-` unassigned."""
    lines = [f"# partition {p.layer_name} vertices {p.n_vertices}"]
    for vertex, cid in enumerate(p.assignment.tolist()):
        lines.append(f"{vertex} {'-' if cid == UNASSIGNED else cid}")
    return "\n".join(lines) + "\n"


def parse_partition(text: str) -> Partition:
    lines = text.splitlines()
    if not lines:
        raise DataError("empty partition file")
    header = _PART_HEADER_RE.match(lines[0])
    if header is None:
        raise DataError(f"bad partition header: {lines[0]!r}")
    n = int(header.group("n"))
    labels = np.full(n, UNASSIGNED, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"line {lineno}: bad partition line {line!r}")
        try:
            vertex = int(parts[0])
        except ValueError:
            raise DataError(f"line {lineno}: bad vertex {parts[0]!r}") from None
        if not 0 <= vertex < n:
            raise DataError(f"line {lineno}: vertex {vertex} out of range")
        if parts[1] == "-":
            cid = UNASSIGNED
        else:
            try:
                cid = int(parts[1])
            except ValueError:
                raise DataError(
                    f"line {lineno}: bad community id {parts[1]!r}"
                ) from None
            if cid < 0:
                raise DataError(f"line {lineno}: bad community id {parts[1]!r}")
        if seen[vertex]:
            raise DataError(f"line {lineno}: duplicate vertex {vertex}")
        seen[vertex] = True
        labels[vertex] = cid
    if not seen.all():
        raise DataError(f"partition file lists {seen.sum()} of {n} vertices")
    return Partition.from_labels(header.group("name"), labels)


def write_partition(p: Partition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_partition(p))


def read_partition(path) -> Partition:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_partition(fh.read())
