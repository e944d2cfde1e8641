"""Road network, shortest-path distances and zone-to-node endpoint decoding.

Distances are in miles. A missing path is reported as ``None`` rather than a
large float so that it cannot leak into fare or detour arithmetic.
"""
from __future__ import annotations

import csv
import heapq
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from crossride.errors import DataError

NodeId = int
ZoneId = str

DEFAULT_CANDIDATE_PAIRS = 50


class RoadNetwork:
    """Undirected road graph with planar node coordinates and zone membership.

    Instances are treated as immutable once built; the only mutable state is
    the single-source shortest-path memo, which is filled lazily.
    """

    def __init__(
        self,
        nodes: Mapping[NodeId, tuple[float, float]],
        edges: Iterable[tuple[NodeId, NodeId, float]],
        zones: Mapping[ZoneId, Sequence[NodeId]] | None = None,
    ):
        self.nodes: dict[NodeId, tuple[float, float]] = {
            int(k): (float(x), float(y)) for k, (x, y) in nodes.items()
        }
        adj: dict[NodeId, dict[NodeId, float]] = {n: {} for n in self.nodes}
        for a, b, w in edges:
            if a not in self.nodes or b not in self.nodes:
                missing = a if a not in self.nodes else b
                raise DataError(f"edge ({a}, {b}) references unknown node {missing}")
            if not (w > 0) or not math.isfinite(w):
                raise DataError(f"edge ({a}, {b}) has non-positive length {w}")
            if a == b:
                continue
            # parallel edges collapse to the shortest one
            if w < adj[a].get(b, math.inf):
                adj[a][b] = float(w)
                adj[b][a] = float(w)
        self.adj = adj

        self.zones: dict[ZoneId, tuple[NodeId, ...]] = {}
        for zone, members in (zones or {}).items():
            for n in members:
                if n not in self.nodes:
                    raise DataError(f"zone {zone!r} references unknown node {n}")
            self.zones[str(zone)] = tuple(members)

        self._order = sorted(self.nodes)
        self._index = {n: i for i, n in enumerate(self._order)}
        self._sssp: dict[NodeId, dict[NodeId, float]] = {}

    def __repr__(self) -> str:
        return (
            f"RoadNetwork(nodes={len(self.nodes)}, edges={self.n_edges}, "
            f"zones={len(self.zones)})"
        )

    @property
    def n_edges(self) -> int:
        return sum(len(v) for v in self.adj.values()) // 2

    def edge_list(self) -> list[tuple[NodeId, NodeId, float]]:
        return [(a, b, w) for a in self._order for b, w in sorted(self.adj[a].items()) if a < b]

    def check_node(self, n: NodeId) -> None:
        if n not in self.nodes:
            raise KeyError(f"unknown node id {n}")

    def _single_source(self, source: NodeId) -> dict[NodeId, float]:
        cached = self._sssp.get(source)
        if cached is not None:
            return cached
        dist: dict[NodeId, float] = {source: 0.0}
        heap = [(0.0, source)]
        done: set[NodeId] = set()
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            done.add(u)
            for v, w in self.adj[u].items():
                nd = d + w
                if nd < dist.get(v, math.inf):
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
        self._sssp[source] = dist
        return dist

    def csgraph(self) -> csr_matrix:
        rows, cols, vals = [], [], []
        for a, nbrs in self.adj.items():
            for b, w in nbrs.items():
                rows.append(self._index[a])
                cols.append(self._index[b])
                vals.append(w)
        n = len(self._order)
        return csr_matrix((vals, (rows, cols)), shape=(n, n))


def shortest_distance(net: RoadNetwork, a: NodeId, b: NodeId) -> float | None:
    """Shortest-path length between two nodes, or ``None`` if unreachable.

    Single-source results are memoised on the network, so after the first
    query from ``a`` every further query from ``a`` is a dictionary lookup.
    """
    net.check_node(a)
    net.check_node(b)
    if a == b:
        return 0.0
    # the graph is undirected; reuse whichever endpoint is already solved
    if b in net._sssp and a not in net._sssp:
        a, b = b, a
    return net._single_source(a).get(b)


class DistanceMatrix:
    """Dense shortest-path table over a fixed list of nodes.

    ``values`` holds ``inf`` for unreachable pairs; callers going through
    :meth:`get` receive ``None`` instead.
    """

    def __init__(self, nodes: Sequence[NodeId], values: np.ndarray):
        self.nodes = list(nodes)
        self.index = {n: i for i, n in enumerate(self.nodes)}
        self.values = values

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node: NodeId) -> bool:
        return node in self.index

    def get(self, a: NodeId, b: NodeId) -> float | None:
        d = self.values[self.index[a], self.index[b]]
        return float(d) if math.isfinite(d) else None

    def reachable(self, a: NodeId, b: NodeId) -> bool:
        return bool(np.isfinite(self.values[self.index[a], self.index[b]]))


def precompute_distance_matrix(net: RoadNetwork, sources: Sequence[NodeId]) -> DistanceMatrix:
    """All-pairs shortest distances among ``sources``."""
    sources = list(dict.fromkeys(sources))
    for s in sources:
        net.check_node(s)
    if not sources:
        return DistanceMatrix([], np.zeros((0, 0)))
    idx = np.array([net._index[s] for s in sources])
    full = dijkstra(net.csgraph(), directed=False, indices=idx)
    values = np.ascontiguousarray(full[:, idx])
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(sources, values)


def assign_endpoint(
    net: RoadNetwork,
    zone: ZoneId,
    counterpart_zone: ZoneId,
    reported_length: float,
    rng_seed: int,
    k: int = DEFAULT_CANDIDATE_PAIRS,
) -> tuple[NodeId, NodeId]:
    """Pick an (origin, destination) node pair whose distance best matches a trip length.

    When the two zones admit at most ``k`` node pairs all of them are scored;
    otherwise ``k`` pairs are drawn with a generator seeded by ``rng_seed``.
    Ties keep the first candidate seen.
    """
    origins = net.zones.get(str(zone))
    dests = net.zones.get(str(counterpart_zone))
    if not origins:
        raise DataError(f"zone {zone!r} is empty or unknown")
    if not dests:
        raise DataError(f"zone {counterpart_zone!r} is empty or unknown")

    if len(origins) * len(dests) <= k:
        candidates = [(o, d) for o in origins for d in dests]
    else:
        rng = np.random.default_rng(rng_seed)
        oi = rng.integers(len(origins), size=k)
        di = rng.integers(len(dests), size=k)
        candidates = [(origins[a], dests[b]) for a, b in zip(oi, di)]

    best = None
    best_err = math.inf
    for o, d in candidates:
        dist = shortest_distance(net, o, d)
        if dist is None:
            continue
        err = abs(dist - reported_length)
        if err < best_err:
            best, best_err = (o, d), err
    if best is None:
        raise DataError(
            f"no reachable node pair between zones {zone!r} and {counterpart_zone!r}"
        )
    return best


def grid_network(
    rows: int,
    cols: int,
    spacing: float = 0.25,
    jitter: float = 0.0,
    seed: int = 0,
    zone_block: int = 4,
) -> RoadNetwork:
    """Rectangular street grid; zones are ``zone_block`` x ``zone_block`` node blocks.

    With ``jitter > 0`` node positions are perturbed by up to ``jitter * spacing``
    and edge lengths become the Euclidean lengths of the perturbed segments,
    which breaks the many exact ties of a perfect Manhattan grid.
    """
    rng = np.random.default_rng(seed)
    nodes = {}
    for r in range(rows):
        for c in range(cols):
            dx, dy = (rng.uniform(-jitter, jitter, size=2) * spacing) if jitter else (0.0, 0.0)
            nodes[r * cols + c] = (c * spacing + dx, r * spacing + dy)

    def length(a: int, b: int) -> float:
        (x1, y1), (x2, y2) = nodes[a], nodes[b]
        return math.hypot(x1 - x2, y1 - y2)

    edges = []
    for r in range(rows):
        for c in range(cols):
            n = r * cols + c
            if c + 1 < cols:
                edges.append((n, n + 1, length(n, n + 1)))
            if r + 1 < rows:
                edges.append((n, n + cols, length(n, n + cols)))

    zones: dict[str, list[int]] = {}
    for r in range(rows):
        for c in range(cols):
            key = f"{r // zone_block}-{c // zone_block}"
            zones.setdefault(key, []).append(r * cols + c)
    return RoadNetwork(nodes, edges, zones)


def _read_rows(path: Path, columns: Sequence[str]) -> Iterable[tuple[int, dict[str, str]]]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise DataError(f"{path}:1: missing column(s) {', '.join(missing)}")
        for row in reader:
            yield reader.line_num, row


def load_network(
    nodes_file: str | Path,
    edges_file: str | Path,
    zones_file: str | Path | None = None,
) -> RoadNetwork:
    nodes: dict[int, tuple[float, float]] = {}
    for line, row in _read_rows(nodes_file, ("node_id", "x", "y")):
        try:
            nodes[int(row["node_id"])] = (float(row["x"]), float(row["y"]))
        except (TypeError, ValueError) as exc:
            raise DataError(f"{nodes_file}:{line}: {exc}") from None

    edges = []
    for line, row in _read_rows(edges_file, ("node_a", "node_b", "length_miles")):
        try:
            a, b, w = int(row["node_a"]), int(row["node_b"]), float(row["length_miles"])
        except (TypeError, ValueError) as exc:
            raise DataError(f"{edges_file}:{line}: {exc}") from None
        for n in (a, b):
            if n not in nodes:
                raise DataError(f"{edges_file}:{line}: dangling reference to node {n}")
        if not w > 0:
            raise DataError(f"{edges_file}:{line}: non-positive edge length {w}")
        edges.append((a, b, w))

    zones: dict[str, list[int]] = {}
    if zones_file is not None:
        for line, row in _read_rows(zones_file, ("zone_id", "node_id")):
            try:
                n = int(row["node_id"])
            except (TypeError, ValueError) as exc:
                raise DataError(f"{zones_file}:{line}: {exc}") from None
            if n not in nodes:
                raise DataError(f"{zones_file}:{line}: dangling reference to node {n}")
            zones.setdefault(str(row["zone_id"]), []).append(n)
    return RoadNetwork(nodes, edges, zones)


def write_network(net: RoadNetwork, directory: str | Path) -> tuple[Path, Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = directory / "nodes.csv", directory / "edges.csv", directory / "zones.csv"
    with open(paths[0], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "x", "y"])
        for n in sorted(net.nodes):
            x, y = net.nodes[n]
            w.writerow([n, repr(x), repr(y)])
    with open(paths[1], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_a", "node_b", "length_miles"])
        for a, b, length in net.edge_list():
            w.writerow([a, b, repr(length)])
    with open(paths[2], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["zone_id", "node_id"])
        for z in sorted(net.zones):
            for n in net.zones[z]:
                w.writerow([z, n])
    return paths
