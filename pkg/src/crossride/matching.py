"""Maximum-weight matching on general graphs.

:func:`max_weight_matching` is an O(n^3) primal-dual blossom algorithm
(Edmonds' method with Galil's dual bookkeeping). :func:`brute_force_matching`
enumerates every matching and exists only to check it. A greedy matcher is
kept for benchmarking and for mutation-testing the oracle check; it is not
exact.
"""
from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from crossride.graphs import RiderGraph

BRUTE_FORCE_LIMIT = 16

Edge = tuple[int, int, float]


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    total_weight: float

    def __len__(self) -> int:
        return len(self.pairs)

    def mate_of(self) -> dict[int, int]:
        out = {}
        for a, b in self.pairs:
            out[a] = b
            out[b] = a
        return out


def _edges_of(g: RiderGraph | Mapping[tuple[int, int], float] | Iterable[Edge]) -> list[Edge]:
    if isinstance(g, RiderGraph):
        return [(a, b, w) for (a, b), w in sorted(g.edges.items())]
    if isinstance(g, Mapping):
        return [(a, b, w) for (a, b), w in sorted(g.items())]
    return [(a, b, w) for a, b, w in g]


def _result(edges: Sequence[Edge], chosen: Iterable[int]) -> Matching:
    pairs = []
    weights = []
    for k in chosen:
        a, b, w = edges[k]
        pairs.append((a, b) if a < b else (b, a))
        weights.append(w)
    return Matching(tuple(sorted(pairs)), math.fsum(weights))


def is_valid_matching(m: Matching, g) -> bool:
    """Vertex-disjoint pairs that are all edges of ``g`` with the stated total."""
    edges = {(min(a, b), max(a, b)): w for a, b, w in _edges_of(g)}
    seen: set[int] = set()
    for a, b in m.pairs:
        if a in seen or b in seen or (a, b) not in edges:
            return False
        seen.update((a, b))
    return math.isclose(m.total_weight, math.fsum(edges[p] for p in m.pairs), rel_tol=1e-12, abs_tol=1e-9)


def brute_force_matching(g) -> Matching:
    """Exhaustive search over all matchings (at most 16 vertices)."""
    edges = _edges_of(g)
    verts = sorted({v for a, b, _ in edges for v in (a, b)})
    if len(verts) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} vertices, got {len(verts)}")
    incident: dict[int, list[int]] = {v: [] for v in verts}
    for k, (a, b, _) in enumerate(edges):
        incident[a].append(k)
        incident[b].append(k)

    best_w = 0.0
    best: list[int] = []
    chosen: list[int] = []
    used: set[int] = set()

    def search(pos: int, weight: float) -> None:
        nonlocal best_w, best
        while pos < len(verts) and verts[pos] in used:
            pos += 1
        if pos == len(verts):
            if weight > best_w:
                best_w, best = weight, list(chosen)
            return
        v = verts[pos]
        # leave v unmatched
        used.add(v)
        search(pos + 1, weight)
        used.discard(v)
        for k in incident[v]:
            a, b, w = edges[k]
            u = b if a == v else a
            if u in used:
                continue
            used.update((u, v))
            chosen.append(k)
            search(pos + 1, weight + w)
            chosen.pop()
            used.difference_update((u, v))

    search(0, 0.0)
    return _result(edges, best)


def greedy_matching(g) -> Matching:
    """Heaviest-edge-first matching. Not optimal; for benchmarks and mutation tests only."""
    edges = _edges_of(g)
    order = sorted(range(len(edges)), key=lambda k: (-edges[k][2], k))
    used: set[int] = set()
    chosen = []
    for k in order:
        a, b, w = edges[k]
        if w > 0 and a not in used and b not in used:
            used.update((a, b))
            chosen.append(k)
    return _result(edges, chosen)


def max_weight_matching(g) -> Matching:
    """Exact maximum-weight matching of a general undirected graph.

    Accepts a :class:`RiderGraph`, a mapping ``{(a, b): weight}`` or an
    iterable of ``(a, b, weight)``. Non-positive edges never improve a
    matching and are ignored. Among several optimal matchings any may be
    returned.
    """
    edges = [e for e in _edges_of(g) if e[2] > 0]
    if not edges:
        return Matching((), 0.0)
    verts = sorted({v for a, b, _ in edges for v in (a, b)})
    index = {v: i for i, v in enumerate(verts)}
    local = [(index[a], index[b], w) for a, b, w in edges]
    mate = _Blossom(len(verts), local).solve()
    chosen = [k for k, (i, j, _) in enumerate(local) if mate[i] == j]
    return _result(edges, chosen)


class _Blossom:
    """Primal-dual state for one weighted matching solve.

    Vertices are ``0..n-1``; blossoms use ids ``n..2n-1``. Edge ``k`` has
    endpoints ``2k`` and ``2k+1``; ``endpoint[p]`` is the vertex at endpoint
    ``p`` and ``p ^ 1`` is the opposite end.
    """

    def __init__(self, n: int, edges: list[Edge]):
        self.n = n
        self.edges = edges
        self.integer = all(isinstance(w, int) for _, _, w in edges)
        self.endpoint = [v for i, j, _ in edges for v in (i, j)]
        self.neighbend: list[list[int]] = [[] for _ in range(n)]
        for k, (i, j, _) in enumerate(edges):
            self.neighbend[i].append(2 * k + 1)
            self.neighbend[j].append(2 * k)
        maxw = max(w for _, _, w in edges)

        self.mate = [-1] * n
        self.label = [0] * (2 * n)
        self.labelend = [-1] * (2 * n)
        self.inblossom = list(range(n))
        self.blossomparent = [-1] * (2 * n)
        self.blossomchilds: list[list[int] | None] = [None] * (2 * n)
        self.blossombase = list(range(n)) + [-1] * n
        self.blossomendps: list[list[int] | None] = [None] * (2 * n)
        self.bestedge = [-1] * (2 * n)
        self.blossombestedges: list[list[int] | None] = [None] * (2 * n)
        self.unusedblossoms = list(range(n, 2 * n))
        self.dualvar = [maxw] * n + [0] * n
        self.allowedge = [False] * len(edges)
        self.queue: list[int] = []

    def slack(self, k: int):
        i, j, w = self.edges[k]
        return self.dualvar[i] + self.dualvar[j] - 2 * w

    def leaves(self, b: int) -> Iterable[int]:
        if b < self.n:
            yield b
            return
        stack = [b]
        while stack:
            t = stack.pop()
            for c in self.blossomchilds[t]:
                if c < self.n:
                    yield c
                else:
                    stack.append(c)

    def assign_label(self, w: int, t: int, p: int) -> None:
        b = self.inblossom[w]
        self.label[w] = self.label[b] = t
        self.labelend[w] = self.labelend[b] = p
        self.bestedge[w] = self.bestedge[b] = -1
        if t == 1:
            self.queue.extend(self.leaves(b))
        else:
            base = self.blossombase[b]
            self.assign_label(self.endpoint[self.mate[base]], 1, self.mate[base] ^ 1)

    def scan_blossom(self, v: int, w: int) -> int:
        """Trace back from v and w; return the new blossom's base or -1 on an augmenting path."""
        path = []
        base = -1
        while v != -1 or w != -1:
            b = self.inblossom[v]
            if self.label[b] & 4:
                base = self.blossombase[b]
                break
            path.append(b)
            self.label[b] = 5
            if self.labelend[b] == -1:
                v = -1
            else:
                v = self.endpoint[self.labelend[b]]
                b = self.inblossom[v]
                v = self.endpoint[self.labelend[b]]
            if w != -1:
                v, w = w, v
        for b in path:
            self.label[b] = 1
        return base

    def add_blossom(self, base: int, k: int) -> None:
        v, w, _ = self.edges[k]
        bb = self.inblossom[base]
        bv = self.inblossom[v]
        bw = self.inblossom[w]
        b = self.unusedblossoms.pop()
        self.blossombase[b] = base
        self.blossomparent[b] = -1
        self.blossomparent[bb] = b
        path: list[int] = []
        endps: list[int] = []
        self.blossomchilds[b] = path
        self.blossomendps[b] = endps
        while bv != bb:
            self.blossomparent[bv] = b
            path.append(bv)
            endps.append(self.labelend[bv])
            v = self.endpoint[self.labelend[bv]]
            bv = self.inblossom[v]
        path.append(bb)
        path.reverse()
        endps.reverse()
        endps.append(2 * k)
        while bw != bb:
            self.blossomparent[bw] = b
            path.append(bw)
            endps.append(self.labelend[bw] ^ 1)
            w = self.endpoint[self.labelend[bw]]
            bw = self.inblossom[w]
        self.label[b] = 1
        self.labelend[b] = self.labelend[bb]
        self.dualvar[b] = 0
        for v in self.leaves(b):
            if self.label[self.inblossom[v]] == 2:
                self.queue.append(v)
            self.inblossom[v] = b

        # least-slack edges from the new blossom to every other S-blossom
        bestedgeto = [-1] * (2 * self.n)
        for bv in path:
            if self.blossombestedges[bv] is None:
                nblists = [[p // 2 for p in self.neighbend[v]] for v in self.leaves(bv)]
            else:
                nblists = [self.blossombestedges[bv]]
            for nblist in nblists:
                for k in nblist:
                    i, j, _ = self.edges[k]
                    if self.inblossom[j] == b:
                        i, j = j, i
                    bj = self.inblossom[j]
                    if (bj != b and self.label[bj] == 1
                            and (bestedgeto[bj] == -1 or self.slack(k) < self.slack(bestedgeto[bj]))):
                        bestedgeto[bj] = k
            self.blossombestedges[bv] = None
            self.bestedge[bv] = -1
        self.blossombestedges[b] = [k for k in bestedgeto if k != -1]
        self.bestedge[b] = -1
        for k in self.blossombestedges[b]:
            if self.bestedge[b] == -1 or self.slack(k) < self.slack(self.bestedge[b]):
                self.bestedge[b] = k

    def expand_blossom(self, b: int, endstage: bool) -> None:
        for s in self.blossomchilds[b]:
            self.blossomparent[s] = -1
            if s < self.n:
                self.inblossom[s] = s
            elif endstage and self.dualvar[s] == 0:
                self.expand_blossom(s, endstage)
            else:
                for v in self.leaves(s):
                    self.inblossom[v] = s
        if not endstage and self.label[b] == 2:
            # relabel the part of the expanded T-blossom that lies on the alternating tree
            entrychild = self.inblossom[self.endpoint[self.labelend[b] ^ 1]]
            childs = self.blossomchilds[b]
            endps = self.blossomendps[b]
            j = childs.index(entrychild)
            if j & 1:
                j -= len(childs)
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            p = self.labelend[b]
            while j != 0:
                self.label[self.endpoint[p ^ 1]] = 0
                self.label[self.endpoint[endps[j - endptrick] ^ endptrick ^ 1]] = 0
                self.assign_label(self.endpoint[p ^ 1], 2, p)
                self.allowedge[endps[j - endptrick] // 2] = True
                j += jstep
                p = endps[j - endptrick] ^ endptrick
                self.allowedge[p // 2] = True
                j += jstep
            bv = childs[j]
            self.label[self.endpoint[p ^ 1]] = self.label[bv] = 2
            self.labelend[self.endpoint[p ^ 1]] = self.labelend[bv] = p
            self.bestedge[bv] = -1
            j += jstep
            while childs[j] != entrychild:
                bv = childs[j]
                if self.label[bv] == 1:
                    j += jstep
                    continue
                for v in self.leaves(bv):
                    if self.label[v] != 0:
                        break
                else:
                    v = -1
                if v != -1:
                    self.label[v] = 0
                    self.label[self.endpoint[self.mate[self.blossombase[bv]]]] = 0
                    self.assign_label(v, 2, self.labelend[v])
                j += jstep
        self.label[b] = self.labelend[b] = -1
        self.blossomchilds[b] = self.blossomendps[b] = None
        self.blossombase[b] = -1
        self.blossombestedges[b] = None
        self.bestedge[b] = -1
        self.unusedblossoms.append(b)

    def augment_blossom(self, b: int, v: int) -> None:
        t = v
        while self.blossomparent[t] != b:
            t = self.blossomparent[t]
        if t >= self.n:
            self.augment_blossom(t, v)
        childs = self.blossomchilds[b]
        endps = self.blossomendps[b]
        i = j = childs.index(t)
        if i & 1:
            j -= len(childs)
            jstep = 1
            endptrick = 0
        else:
            jstep = -1
            endptrick = 1
        while j != 0:
            j += jstep
            t = childs[j]
            p = endps[j - endptrick] ^ endptrick
            if t >= self.n:
                self.augment_blossom(t, self.endpoint[p])
            j += jstep
            t = childs[j]
            if t >= self.n:
                self.augment_blossom(t, self.endpoint[p ^ 1])
            self.mate[self.endpoint[p]] = p ^ 1
            self.mate[self.endpoint[p ^ 1]] = p
        # rotate so that the new base comes first
        self.blossomchilds[b] = childs[i:] + childs[:i]
        self.blossomendps[b] = endps[i:] + endps[:i]
        self.blossombase[b] = self.blossombase[self.blossomchilds[b][0]]

    def augment_matching(self, k: int) -> None:
        v, w, _ = self.edges[k]
        for s, p in ((v, 2 * k + 1), (w, 2 * k)):
            while True:
                bs = self.inblossom[s]
                if bs >= self.n:
                    self.augment_blossom(bs, s)
                self.mate[s] = p
                if self.labelend[bs] == -1:
                    break
                t = self.endpoint[self.labelend[bs]]
                bt = self.inblossom[t]
                s = self.endpoint[self.labelend[bt]]
                j = self.endpoint[self.labelend[bt] ^ 1]
                if bt >= self.n:
                    self.augment_blossom(bt, j)
                self.mate[j] = self.labelend[bt]
                p = self.labelend[bt] ^ 1

    def solve(self) -> list[int]:
        n = self.n
        for _ in range(n):
            self.label = [0] * (2 * n)
            self.bestedge = [-1] * (2 * n)
            for b in range(n, 2 * n):
                self.blossombestedges[b] = None
            self.allowedge = [False] * len(self.edges)
            self.queue = []
            for v in range(n):
                if self.mate[v] == -1 and self.label[self.inblossom[v]] == 0:
                    self.assign_label(v, 1, -1)

            augmented = False
            while True:
                while self.queue and not augmented:
                    v = self.queue.pop()
                    for p in self.neighbend[v]:
                        k = p // 2
                        w = self.endpoint[p]
                        if self.inblossom[v] == self.inblossom[w]:
                            continue
                        if not self.allowedge[k]:
                            kslack = self.slack(k)
                            if kslack <= 0:
                                self.allowedge[k] = True
                        if self.allowedge[k]:
                            if self.label[self.inblossom[w]] == 0:
                                self.assign_label(w, 2, p ^ 1)
                            elif self.label[self.inblossom[w]] == 1:
                                base = self.scan_blossom(v, w)
                                if base >= 0:
                                    self.add_blossom(base, k)
                                else:
                                    self.augment_matching(k)
                                    augmented = True
                                    break
                            elif self.label[w] == 0:
                                self.label[w] = 2
                                self.labelend[w] = p ^ 1
                        elif self.label[self.inblossom[w]] == 1:
                            b = self.inblossom[v]
                            if self.bestedge[b] == -1 or kslack < self.slack(self.bestedge[b]):
                                self.bestedge[b] = k
                        elif self.label[w] == 0:
                            if self.bestedge[w] == -1 or kslack < self.slack(self.bestedge[w]):
                                self.bestedge[w] = k
                if augmented:
                    break

                # dual adjustment
                deltatype = 1
                delta = min(self.dualvar[:n])
                deltaedge = deltablossom = -1
                for v in range(n):
                    if self.label[self.inblossom[v]] == 0 and self.bestedge[v] != -1:
                        d = self.slack(self.bestedge[v])
                        if d < delta:
                            delta, deltatype, deltaedge = d, 2, self.bestedge[v]
                for b in range(2 * n):
                    if self.blossomparent[b] == -1 and self.label[b] == 1 and self.bestedge[b] != -1:
                        kslack = self.slack(self.bestedge[b])
                        d = kslack // 2 if self.integer else kslack / 2
                        if d < delta:
                            delta, deltatype, deltaedge = d, 3, self.bestedge[b]
                for b in range(n, 2 * n):
                    if (self.blossombase[b] >= 0 and self.blossomparent[b] == -1
                            and self.label[b] == 2 and self.dualvar[b] < delta):
                        delta, deltatype, deltablossom = self.dualvar[b], 4, b

                for v in range(n):
                    lab = self.label[self.inblossom[v]]
                    if lab == 1:
                        self.dualvar[v] -= delta
                    elif lab == 2:
                        self.dualvar[v] += delta
                for b in range(n, 2 * n):
                    if self.blossombase[b] >= 0 and self.blossomparent[b] == -1:
                        if self.label[b] == 1:
                            self.dualvar[b] += delta
                        elif self.label[b] == 2:
                            self.dualvar[b] -= delta

                if deltatype == 1:
                    break
                if deltatype == 2:
                    self.allowedge[deltaedge] = True
                    i, j, _ = self.edges[deltaedge]
                    if self.label[self.inblossom[i]] == 0:
                        i, j = j, i
                    self.queue.append(i)
                elif deltatype == 3:
                    self.allowedge[deltaedge] = True
                    self.queue.append(self.edges[deltaedge][0])
                else:
                    self.expand_blossom(deltablossom, False)

            if not augmented:
                break
            for b in range(n, 2 * n):
                if (self.blossomparent[b] == -1 and self.blossombase[b] >= 0
                        and self.label[b] == 1 and self.dualvar[b] == 0):
                    self.expand_blossom(b, True)

        return [self.endpoint[p] if p != -1 else -1 for p in self.mate]
