"""Rider-rider graphs for one window: competition, full and profit-aware variants."""
from __future__ import annotations

import csv
import enum
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from crossride.errors import ConfigError
from crossride.shareability import FeasibilityMatrix, SharedTripCandidate


class Variant(str, enum.Enum):
    COMPETITION = "competition"
    FULL = "full"
    PROFIT_AWARE = "profit-aware"


@dataclass(frozen=True)
class EdgeWeightParams:
    psi: float = 0.5
    alpha_t: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.psi <= 1.0:
            raise ConfigError(f"psi must lie in [0, 1], got {self.psi}")


@dataclass
class RiderGraph:
    window_time: float
    variant: Variant
    vertices: list[int]
    edges: dict[tuple[int, int], float] = field(default_factory=dict)
    platform_of: dict[int, int] = field(default_factory=dict)
    platform: int | None = None  # set on competition subgraphs

    def add_edge(self, a: int, b: int, weight: float) -> None:
        if a == b:
            raise ValueError("self-loops are not allowed")
        key = (a, b) if a < b else (b, a)
        if key in self.edges:
            raise ValueError(f"duplicate edge {key}")
        self.edges[key] = weight

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(self.edges)

    def has_inter_platform_edge(self) -> bool:
        return any(self.platform_of[a] != self.platform_of[b] for a, b in self.edges)


def edge_weight(
    candidate: SharedTripCandidate | None,
    wait_i: float,
    wait_j: float,
    params: EdgeWeightParams,
    feasible: bool = True,
) -> float:
    """Joint profit plus ``psi``-weighted waiting time valued at ``alpha_t``."""
    if not feasible or candidate is None:
        return 0.0
    if wait_i < 0 or wait_j < 0:
        raise ValueError("waiting times must be non-negative")
    return candidate.joint_profit + params.psi * (wait_i + wait_j) * params.alpha_t


def _weighted_edges(
    matrix: FeasibilityMatrix,
    params: EdgeWeightParams,
    waits: Mapping[int, float] | None,
    include: Callable[[int, int], bool],
) -> Iterable[tuple[int, int, float]]:
    waits = waits or {}
    for a, b in matrix.pairs():
        if not include(a, b):
            continue
        cand = matrix.candidate(a, b)
        w = edge_weight(cand, waits.get(a, 0.0), waits.get(b, 0.0), params)
        yield a, b, w


def _platform_map(matrix: FeasibilityMatrix) -> dict[int, int]:
    return {rid: int(p) for rid, p in zip(matrix.rider_ids, matrix.platforms)}


def build_competition(
    matrix: FeasibilityMatrix,
    params: EdgeWeightParams,
    waits: Mapping[int, float] | None = None,
    platforms: Sequence[int] = (0, 1),
) -> list[RiderGraph]:
    """One induced subgraph per platform: its own riders and intra-platform edges."""
    platform_of = _platform_map(matrix)
    graphs = {}
    for k in sorted(set(platforms) | set(platform_of.values())):
        verts = [r for r in matrix.rider_ids if platform_of[r] == k]
        graphs[k] = RiderGraph(matrix.window_time, Variant.COMPETITION, verts,
                               platform_of={r: k for r in verts}, platform=k)
    for a, b, w in _weighted_edges(matrix, params, waits, lambda a, b: not matrix.is_inter(a, b)):
        graphs[platform_of[a]].add_edge(a, b, w)
    return [graphs[k] for k in sorted(graphs)]


def build_full(
    matrix: FeasibilityMatrix,
    params: EdgeWeightParams,
    waits: Mapping[int, float] | None = None,
) -> RiderGraph:
    g = RiderGraph(matrix.window_time, Variant.FULL, list(matrix.rider_ids), platform_of=_platform_map(matrix))
    for a, b, w in _weighted_edges(matrix, params, waits, lambda a, b: True):
        g.add_edge(a, b, w)
    return g


def build_profit_aware(
    matrix: FeasibilityMatrix,
    filtered: FeasibilityMatrix,
    params: EdgeWeightParams,
    waits: Mapping[int, float] | None = None,
) -> RiderGraph:
    """Feasible edges of ``matrix`` that survive in the profit-filtered ``filtered``."""
    g = RiderGraph(matrix.window_time, Variant.PROFIT_AWARE, list(matrix.rider_ids),
                   platform_of=_platform_map(matrix))
    pos = filtered.position
    for a, b, w in _weighted_edges(matrix, params, waits,
                                   lambda a, b: bool(filtered.entries[pos[a], pos[b]])):
        g.add_edge(a, b, w)
    return g


def graph_stats(g: RiderGraph) -> tuple[int, int, float]:
    """(vertices, edges, average degree)."""
    n, m = g.n_vertices, g.n_edges
    return n, m, (2.0 * m / n if n else 0.0)


def combined_stats(graphs: Sequence[RiderGraph]) -> tuple[int, int, float]:
    """Stats of the disjoint union of per-platform graphs."""
    n = sum(g.n_vertices for g in graphs)
    m = sum(g.n_edges for g in graphs)
    return n, m, (2.0 * m / n if n else 0.0)


def write_graph_dump(graphs: Iterable[RiderGraph], path, append: bool = False) -> None:
    """Per-window edge dump: ``window_t, variant, i, j, weight``."""
    mode = "a" if append else "w"
    with open(path, mode, newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if not append:
            w.writerow(["window_t", "variant", "i", "j", "weight"])
        for g in graphs:
            for (a, b), wt in sorted(g.edges.items()):
                w.writerow([repr(g.window_time), g.variant.value, a, b, repr(wt)])
