"""Which rider pairs can share a vehicle in a given window.

A pair is feasible when the best of the four two-rider stop orders keeps
both pickup delays within ``max_wait`` (C1), both relative detours within
``max_detour`` (C2), and the shared trip earns at least as much as two solo
trips (C3). The matrix builder is vectorised over all pairs of a window;
:func:`best_shared_path` and the ``check_*`` functions are the scalar
reference used for candidates and post-hoc verification.
"""
from __future__ import annotations

import enum
import math
import warnings
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from crossride.economics import (
    MONEY_TOL,
    AllocationSplit,
    MarketShares,
    Mechanism,
    PricingParams,
    allocate,
    shared_profit,
    single_profit,
)
from crossride.errors import ConfigError
from crossride.geo import DistanceMatrix, RoadNetwork, precompute_distance_matrix, shortest_distance
from crossride.requests import RiderRequest

RATIO_TOL = 1e-9
TIME_TOL = 1e-9

# Stops as (rider slot, is_dropoff); slot 0 is rider i, slot 1 is rider j.
SEQUENCES: tuple[tuple[tuple[int, bool], ...], ...] = (
    ((0, False), (1, False), (1, True), (0, True)),  # O_i O_j D_j D_i
    ((1, False), (0, False), (0, True), (1, True)),  # O_j O_i D_i D_j
    ((0, False), (1, False), (0, True), (1, True)),  # O_i O_j D_i D_j
    ((1, False), (0, False), (1, True), (0, True)),  # O_j O_i D_j D_i
)
SEQUENCE_LABELS = ("OiOjDjDi", "OjOiDiDj", "OiOjDiDj", "OjOiDjDi")


@dataclass(frozen=True)
class WindowConfig:
    length: float = 5.0  # epsilon, minutes
    step: float = 5.0  # s, minutes
    max_wait: float = 10.0  # tau, minutes
    max_detour: float = 0.2  # gamma, fraction of direct distance

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigError("window length must be positive")
        if not self.step > 0:
            raise ConfigError("window step must be positive")
        if self.max_wait < 0 or self.max_detour < 0:
            raise ConfigError("max_wait and max_detour must be non-negative")
        if self.step > self.length:
            warnings.warn(
                f"window step {self.step} exceeds window length {self.length}; "
                "requests between windows are only reachable through carry-over",
                stacklevel=2,
            )


class AccessMode(str, enum.Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    UNIFORM = "uniform-random"


@dataclass(frozen=True)
class VehicleAccessModel:
    """Distance from the serving vehicle to the first pickup of a shared trip.

    The second rider's access distance is this plus the first pickup-to-pickup
    leg of the chosen path. ``uniform-random`` draws one distance per
    first-picked rider from ``U(0, parameter)``, seeded by ``(seed, rider id)``.
    """

    mode: AccessMode = AccessMode.ZERO
    parameter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", AccessMode(self.mode))
        if self.parameter < 0:
            raise ConfigError("vehicle access parameter must be non-negative")

    def base_distance(self, rider_id: int) -> float:
        if self.mode is AccessMode.ZERO:
            return 0.0
        if self.mode is AccessMode.CONSTANT:
            return self.parameter
        return float(np.random.default_rng([self.seed, rider_id]).random() * self.parameter)

    def base_distances(self, rider_ids: Sequence[int]) -> np.ndarray:
        if self.mode is AccessMode.ZERO:
            return np.zeros(len(rider_ids))
        if self.mode is AccessMode.CONSTANT:
            return np.full(len(rider_ids), self.parameter)
        return np.array([self.base_distance(r) for r in rider_ids])


@dataclass(frozen=True)
class SharedPath:
    sequence: int
    total_distance: float
    leg_distances: tuple[float, float, float]
    in_trip: tuple[float, float]  # (rider i, rider j)

    @property
    def label(self) -> str:
        return SEQUENCE_LABELS[self.sequence]

    @property
    def first_pickup(self) -> int:
        """Slot (0 for i, 1 for j) of the rider picked up first."""
        return SEQUENCES[self.sequence][0][0]


@dataclass
class SharedTripCandidate:
    rider_i: int
    rider_j: int
    platforms: tuple[int, int]
    request_times: tuple[float, float]
    direct: tuple[float, float]
    path: SharedPath
    fares: tuple[float, float]
    joint_profit: float
    standalone_profits: tuple[float, float]
    allocation: AllocationSplit | None = None

    @property
    def surplus(self) -> float:
        return self.joint_profit - self.standalone_profits[0] - self.standalone_profits[1]

    @property
    def inter_platform(self) -> bool:
        return self.platforms[0] != self.platforms[1]


def _distance_fn(dist: RoadNetwork | DistanceMatrix | Callable) -> Callable[[int, int], float | None]:
    if isinstance(dist, RoadNetwork):
        return lambda a, b: shortest_distance(dist, a, b)
    if isinstance(dist, DistanceMatrix):
        return dist.get
    return dist


def sequence_distances(
    r_i: RiderRequest, r_j: RiderRequest, dist: RoadNetwork | DistanceMatrix | Callable
) -> list[SharedPath | None]:
    """All four stop orders with their leg and in-trip distances (``None`` if any leg is unreachable)."""
    d = _distance_fn(dist)
    ends = ((r_i.origin, r_i.dest), (r_j.origin, r_j.dest))
    out: list[SharedPath | None] = []
    for k, stops in enumerate(SEQUENCES):
        nodes = [ends[slot][drop] for slot, drop in stops]
        legs = [d(a, b) for a, b in zip(nodes, nodes[1:])]
        if any(leg is None for leg in legs):
            out.append(None)
            continue
        total = legs[0] + legs[1] + legs[2]
        in_trip = []
        for slot in (0, 1):
            start = stops.index((slot, False))
            stop = stops.index((slot, True))
            in_trip.append(sum(legs[start:stop]))
        out.append(SharedPath(k, total, (legs[0], legs[1], legs[2]), (in_trip[0], in_trip[1])))
    return out


def best_shared_path(
    r_i: RiderRequest, r_j: RiderRequest, net: RoadNetwork | DistanceMatrix | Callable
) -> SharedPath:
    """Minimum-total-distance stop order; ties go to the earlier sequence."""
    best = None
    for path in sequence_distances(r_i, r_j, net):
        if path is not None and (best is None or path.total_distance < best.total_distance):
            best = path
    if best is None:
        raise ValueError(f"riders {r_i.id} and {r_j.id} cannot be served on one route")
    return best


def make_candidate(
    r_i: RiderRequest,
    r_j: RiderRequest,
    net: RoadNetwork | DistanceMatrix | Callable,
    pricing: PricingParams,
    path: SharedPath | None = None,
) -> SharedTripCandidate:
    path = path or best_shared_path(r_i, r_j, net)
    joint = shared_profit(r_i.fare_shared, r_j.fare_shared, path.total_distance, pricing)
    return SharedTripCandidate(
        rider_i=r_i.id,
        rider_j=r_j.id,
        platforms=(r_i.platform, r_j.platform),
        request_times=(r_i.request_time, r_j.request_time),
        direct=(r_i.direct_distance, r_j.direct_distance),
        path=path,
        fares=(r_i.fare_shared, r_j.fare_shared),
        joint_profit=joint,
        standalone_profits=(
            single_profit(r_i.fare_single, pricing),
            single_profit(r_j.fare_single, pricing),
        ),
    )


def active_riders(queue: Sequence[RiderRequest], t: float, cfg: WindowConfig) -> list[RiderRequest]:
    """Unmatched riders that belong to the window ending at ``t``.

    A rider is active if it arrived inside ``[t - length, t]`` or, having
    arrived earlier, has waited no longer than ``max_wait``.
    """
    out = []
    for r in queue:
        if not r.open or r.request_time > t:
            continue
        in_window = r.request_time >= t - cfg.length
        carried = t - r.request_time <= cfg.max_wait
        if in_window or carried:
            out.append(r)
    return out


def access_distances(candidate: SharedTripCandidate, access: VehicleAccessModel) -> tuple[float, float]:
    """Vehicle-to-pickup distance for riders (i, j) along the chosen path."""
    first = candidate.path.first_pickup
    first_id = candidate.rider_i if first == 0 else candidate.rider_j
    base = access.base_distance(first_id)
    second = base + candidate.path.leg_distances[0]
    return (base, second) if first == 0 else (second, base)


def check_wait(
    candidate: SharedTripCandidate,
    t: float,
    cfg: WindowConfig,
    access: VehicleAccessModel,
    speed: float,
) -> bool:
    for l_vo, t_x in zip(access_distances(candidate, access), candidate.request_times):
        if l_vo / speed + t - t_x > cfg.max_wait + TIME_TOL:
            return False
    return True


def check_detour(candidate: SharedTripCandidate, cfg: WindowConfig) -> bool:
    for in_trip, direct in zip(candidate.path.in_trip, candidate.direct):
        if not direct > 0:
            return False
        if (in_trip - direct) / direct > cfg.max_detour + RATIO_TOL:
            return False
    return True


def check_profit(candidate: SharedTripCandidate) -> bool:
    p_i, p_j = candidate.standalone_profits
    return p_i + p_j <= candidate.joint_profit + MONEY_TOL


@dataclass
class FeasibilityMatrix:
    window_time: float
    rider_ids: list[int]
    platforms: np.ndarray
    entries: np.ndarray
    candidates: dict[tuple[int, int], SharedTripCandidate] = field(default_factory=dict)

    def __post_init__(self):
        self.position = {rid: k for k, rid in enumerate(self.rider_ids)}

    def __len__(self) -> int:
        return len(self.rider_ids)

    def pairs(self) -> Iterator[tuple[int, int]]:
        """True entries as (rider id, rider id) with the earlier-listed rider first."""
        iu, ju = np.nonzero(np.triu(self.entries, 1))
        for a, b in zip(iu.tolist(), ju.tolist()):
            yield self.rider_ids[a], self.rider_ids[b]

    def candidate(self, a: int, b: int) -> SharedTripCandidate:
        if self.position[a] > self.position[b]:
            a, b = b, a
        return self.candidates[(a, b)]

    def is_inter(self, a: int, b: int) -> bool:
        return bool(self.platforms[self.position[a]] != self.platforms[self.position[b]])

    def masked(self, keep: np.ndarray) -> FeasibilityMatrix:
        entries = self.entries & keep
        cands = {k: v for k, v in self.candidates.items()
                 if entries[self.position[k[0]], self.position[k[1]]]}
        return FeasibilityMatrix(self.window_time, list(self.rider_ids), self.platforms.copy(), entries, cands)


def _pair_arrays(riders, dm, access):
    o = np.array([dm.index[r.origin] for r in riders], dtype=np.intp)
    d = np.array([dm.index[r.dest] for r in riders], dtype=np.intp)
    return o, d, access.base_distances([r.id for r in riders])


def feasibility_matrix(
    riders: Sequence[RiderRequest],
    t: float,
    net: RoadNetwork | DistanceMatrix,
    cfg: WindowConfig,
    pricing: PricingParams,
    access: VehicleAccessModel = VehicleAccessModel(),
    cache: dict[tuple[int, int], SharedTripCandidate] | None = None,
) -> FeasibilityMatrix:
    """Evaluate C1, C2 and C3 on every pair of ``riders`` at window time ``t``.

    ``net`` may be a precomputed :class:`DistanceMatrix` covering every
    rider endpoint (the fast path used by the simulator). ``cache`` maps
    rider-id pairs to previously built candidates; endpoints are static, so
    a candidate stays valid for the whole day.
    """
    riders = list(riders)
    n = len(riders)
    ids = [r.id for r in riders]
    platforms = np.array([r.platform for r in riders], dtype=int)
    entries = np.zeros((n, n), dtype=bool)
    if n < 2:
        return FeasibilityMatrix(t, ids, platforms, entries)

    if isinstance(net, DistanceMatrix):
        dm = net
    else:
        dm = precompute_distance_matrix(net, [x for r in riders for x in (r.origin, r.dest)])
    D = dm.values
    o, d, base = _pair_arrays(riders, dm, access)
    direct = np.array([r.direct_distance for r in riders])
    req_t = np.array([r.request_time for r in riders])
    f_sh = np.array([r.fare_shared for r in riders])
    p_solo = np.array([single_profit(r.fare_single, pricing) for r in riders])

    iu, ju = np.triu_indices(n, 1)
    oi, oj, di, dj = o[iu], o[ju], d[iu], d[ju]
    # legs per sequence, same order as SEQUENCES
    legs = np.stack([
        np.stack([D[oi, oj], D[oj, dj], D[dj, di]]),
        np.stack([D[oj, oi], D[oi, di], D[di, dj]]),
        np.stack([D[oi, oj], D[oj, di], D[di, dj]]),
        np.stack([D[oj, oi], D[oi, dj], D[dj, di]]),
    ])  # (4, 3, P)
    totals = (legs[:, 0] + legs[:, 1]) + legs[:, 2]
    best = np.argmin(totals, axis=0)
    cols = np.arange(len(iu))
    total = totals[best, cols]
    L = legs[best, :, cols]  # (P, 3)
    in_i = np.select(
        [best == 0, best == 1, best == 2, best == 3],
        [(L[:, 0] + L[:, 1]) + L[:, 2], L[:, 1], L[:, 0] + L[:, 1], L[:, 1] + L[:, 2]],
    )
    in_j = np.select(
        [best == 0, best == 1, best == 2, best == 3],
        [L[:, 1], (L[:, 0] + L[:, 1]) + L[:, 2], L[:, 1] + L[:, 2], L[:, 0] + L[:, 1]],
    )
    reachable = np.isfinite(total)

    # C1: the first-picked rider sees the base access distance, the other adds the first leg
    i_first = (best == 0) | (best == 2)
    a_first = np.where(i_first, base[iu], base[ju])
    vo_i = np.where(i_first, a_first, a_first + L[:, 0])
    vo_j = np.where(i_first, a_first + L[:, 0], a_first)
    speed = pricing.mean_speed
    c1 = ((vo_i / speed + t - req_t[iu]) <= cfg.max_wait + TIME_TOL) & (
        (vo_j / speed + t - req_t[ju]) <= cfg.max_wait + TIME_TOL
    )

    # C2
    li, lj = direct[iu], direct[ju]
    with np.errstate(divide="ignore", invalid="ignore"):
        c2 = (li > 0) & (lj > 0)
        c2 &= (in_i - li) / np.where(li > 0, li, 1.0) <= cfg.max_detour + RATIO_TOL
        c2 &= (in_j - lj) / np.where(lj > 0, lj, 1.0) <= cfg.max_detour + RATIO_TOL

    # C3
    with np.errstate(invalid="ignore"):
        joint = f_sh[iu] + f_sh[ju] - total * pricing.cost_per_mile * pricing.commission
        c3 = p_solo[iu] + p_solo[ju] <= joint + MONEY_TOL

    ok = reachable & c1 & c2 & c3
    fi, fj = iu[ok], ju[ok]
    entries[fi, fj] = True
    entries[fj, fi] = True

    candidates = {}
    for a, b in zip(fi.tolist(), fj.tolist()):
        key = (ids[a], ids[b])
        cand = cache.get(key) if cache is not None else None
        if cand is None:
            cand = make_candidate(riders[a], riders[b], dm, pricing)
            if cache is not None:
                cache[key] = cand
        candidates[key] = cand
    return FeasibilityMatrix(t, ids, platforms, entries, candidates)


class InnerBenchmark(str, enum.Enum):
    """What an inter-platform pairing is compared against on the intra side.

    ``pair``: the whole profit of the rider's best feasible intra-platform
    pairing (the platform keeps all of it). ``rider``: that pairing's profit
    split between its two riders with the same allocation mechanism.
    """

    PAIR = "pair"
    RIDER = "rider"


def split_pair(
    cand: SharedTripCandidate,
    mechanism: Mechanism,
    shares: MarketShares,
) -> tuple[float, float]:
    """Allocated profit for rider i's platform and rider j's platform."""
    a, b = cand.platforms
    if a == b:
        # riders of one platform play a symmetric two-player game
        split = allocate(mechanism, cand.joint_profit, cand.standalone_profits, MarketShares((0.5, 0.5)))
        return split[0], split[1]
    if len(shares) == 2 and (a, b) in ((0, 1), (1, 0)):
        pair_shares = MarketShares((shares[a], shares[b]))
    else:
        m_a, m_b = shares[a], shares[b]
        pair_shares = MarketShares((m_a / (m_a + m_b), 1.0 - m_a / (m_a + m_b)))
    split = allocate(mechanism, cand.joint_profit, cand.standalone_profits, pair_shares)
    return split[0], split[1]


def inner_benchmarks(
    matrix: FeasibilityMatrix,
    mechanism: Mechanism,
    benchmark: InnerBenchmark = InnerBenchmark.PAIR,
) -> dict[int, float | None]:
    """Best intra-platform alternative per rider, ``None`` when there is none."""
    best: dict[int, float | None] = dict.fromkeys(matrix.rider_ids)
    for a, b in matrix.pairs():
        if matrix.is_inter(a, b):
            continue
        cand = matrix.candidate(a, b)
        if benchmark is InnerBenchmark.PAIR:
            values = (cand.joint_profit, cand.joint_profit)
        else:
            values = split_pair(cand, mechanism, MarketShares((0.5, 0.5)))
        for rid, v in zip((cand.rider_i, cand.rider_j), values):
            if best[rid] is None or v > best[rid]:
                best[rid] = v
    return best


def profit_aware_filter(
    matrix: FeasibilityMatrix,
    mechanism: Mechanism | str,
    shares: MarketShares,
    benchmark: InnerBenchmark | str = InnerBenchmark.PAIR,
) -> FeasibilityMatrix:
    """Drop inter-platform pairs that either platform would not accept.

    Each platform must receive, under ``mechanism``, at least its rider's
    solo profit and at least its rider's best intra-platform alternative
    (the solo profit when no alternative exists). Intra-platform entries are
    kept unchanged.
    """
    mechanism = Mechanism.parse(mechanism)
    benchmark = InnerBenchmark(benchmark)
    inner = inner_benchmarks(matrix, mechanism, benchmark)
    keep = np.ones_like(matrix.entries)
    for a, b in matrix.pairs():
        if not matrix.is_inter(a, b):
            continue
        cand = matrix.candidate(a, b)
        phi = split_pair(cand, mechanism, shares)
        accept = True
        for rid, phi_x, p_x in zip((cand.rider_i, cand.rider_j), phi, cand.standalone_profits):
            bench = inner[rid] if inner[rid] is not None else p_x
            if phi_x < p_x - MONEY_TOL or phi_x < bench - MONEY_TOL:
                accept = False
                break
        if not accept:
            pa, pb = matrix.position[a], matrix.position[b]
            keep[pa, pb] = keep[pb, pa] = False
    return matrix.masked(keep)


def verify_match(
    cand: SharedTripCandidate,
    t: float,
    cfg: WindowConfig,
    access: VehicleAccessModel,
    pricing: PricingParams,
) -> list[str]:
    """Names of the constraints a committed pair violates (empty when sound)."""
    failed = []
    if not check_wait(cand, t, cfg, access, pricing.mean_speed):
        failed.append("C1-wait")
    if not check_detour(cand, cfg):
        failed.append("C2-detour")
    if not check_profit(cand):
        failed.append("C3-profit")
    expected = shared_profit(cand.fares[0], cand.fares[1], cand.path.total_distance, pricing)
    if not math.isclose(expected, cand.joint_profit, abs_tol=MONEY_TOL):
        failed.append("joint-profit")
    return failed
