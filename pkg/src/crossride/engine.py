"""Day-long sliding-window simulation: queue, graphs, matching, profit commits."""
from __future__ import annotations

import enum
import math
import time
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

from crossride.economics import (
    AllocationSplit,
    MarketShares,
    Mechanism,
    PricingParams,
    single_profit,
)
from crossride.errors import ConfigError
from crossride.geo import DistanceMatrix, RoadNetwork, precompute_distance_matrix
from crossride.graphs import (
    EdgeWeightParams,
    RiderGraph,
    Variant,
    build_competition,
    build_full,
    build_profit_aware,
    combined_stats,
    graph_stats,
)
from crossride.matching import Matching, max_weight_matching
from crossride.requests import RiderRequest, RiderState
from crossride.shareability import (
    FeasibilityMatrix,
    InnerBenchmark,
    SharedTripCandidate,
    VehicleAccessModel,
    WindowConfig,
    active_riders,
    feasibility_matrix,
    profit_aware_filter,
    split_pair,
)


class ScenarioChoice(str, enum.Enum):
    COMPETITION = "competition"
    FULL = "full"
    PROFIT_AWARE = "profit-aware"
    ALL = "all"


@dataclass(frozen=True)
class Scenario:
    variant: Variant
    mechanism: Mechanism = Mechanism.SHAPLEY

    @property
    def label(self) -> str:
        if self.variant is Variant.PROFIT_AWARE:
            return f"profit-aware-{self.mechanism.value}"
        return self.variant.value

    @classmethod
    def parse(cls, label: str) -> Scenario:
        if label.startswith("profit-aware-"):
            return cls(Variant.PROFIT_AWARE, Mechanism.parse(label.removeprefix("profit-aware-")))
        try:
            return cls(Variant(label))
        except ValueError:
            raise ConfigError(f"unknown scenario {label!r}") from None


ALL_SCENARIOS = (
    Scenario(Variant.COMPETITION),
    Scenario(Variant.FULL),
    Scenario(Variant.PROFIT_AWARE, Mechanism.EQUAL),
    Scenario(Variant.PROFIT_AWARE, Mechanism.MARKET),
    Scenario(Variant.PROFIT_AWARE, Mechanism.SHAPLEY),
)


@dataclass(frozen=True)
class SimConfig:
    horizon: float = 1440.0
    window: WindowConfig = field(default_factory=WindowConfig)
    pricing: PricingParams = field(default_factory=PricingParams)
    psi: float = 0.5
    mechanism: Mechanism = Mechanism.SHAPLEY
    scenario: ScenarioChoice = ScenarioChoice.PROFIT_AWARE
    market_shares: MarketShares = field(default_factory=MarketShares)
    replications: int = 5
    seed: int = 0
    collaboration_willingness: float = 1.0  # carried for completeness; no rule consumes it
    access: VehicleAccessModel = field(default_factory=VehicleAccessModel)
    inner_benchmark: InnerBenchmark = InnerBenchmark.PAIR
    reassign_platforms: bool = True
    audit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mechanism", Mechanism.parse(self.mechanism))
        object.__setattr__(self, "scenario", ScenarioChoice(self.scenario))
        object.__setattr__(self, "inner_benchmark", InnerBenchmark(self.inner_benchmark))
        if not self.horizon > 0:
            raise ConfigError("horizon must be positive")
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not 0.0 <= self.collaboration_willingness <= 1.0:
            raise ConfigError("collaboration willingness must lie in [0, 1]")
        EdgeWeightParams(self.psi, self.pricing.alpha_t)

    @property
    def weights(self) -> EdgeWeightParams:
        return EdgeWeightParams(self.psi, self.pricing.alpha_t)

    def scenarios(self) -> list[Scenario]:
        if self.scenario is ScenarioChoice.ALL:
            return list(ALL_SCENARIOS)
        return [Scenario(Variant(self.scenario.value), self.mechanism)]

    def window_times(self) -> list[float]:
        """Window end times ``length, length + step, ...`` until the horizon is covered."""
        w = self.window
        count = max(1, math.ceil((self.horizon - w.length) / w.step - 1e-9) + 1)
        return [w.length + k * w.step for k in range(count)]

    def with_overrides(self, **kwargs) -> SimConfig:
        return replace(self, **kwargs)


@dataclass
class CommittedMatch:
    t: float
    candidate: SharedTripCandidate
    allocation: AllocationSplit


@dataclass
class AuditRecord:
    """All graph variants built from one window's feasibility matrix."""

    edges: dict[str, set[tuple[int, int]]]
    weight: dict[str, float]
    pair_profit: dict[str, float]
    stats: dict[str, tuple[int, int, float]]


@dataclass
class WindowRecord:
    t: float
    arrivals: int
    active: int
    vertices: int
    edges: int
    avg_degree: float
    matched_pairs: int
    matching_weight: float
    pair_profit: float
    platform_profit: dict[int, float]
    creation_s: float = field(default=0.0, compare=False)
    matching_s: float = field(default=0.0, compare=False)
    audit: AuditRecord | None = field(default=None, compare=False)


@dataclass
class SimulationResult:
    scenario: str
    replication: int
    windows: list[WindowRecord]
    riders: list[RiderRequest]
    matches: list[CommittedMatch]
    pricing: PricingParams
    platforms: tuple[int, ...] = (0, 1)

    def solo_profit(self) -> dict[int, float]:
        out = dict.fromkeys(self.platforms, 0.0)
        for r in self.riders:
            if r.state is RiderState.EXPIRED_SOLO:
                out[r.platform] = out.get(r.platform, 0.0) + single_profit(r.fare_single, self.pricing)
        return out

    def platform_profit(self) -> dict[int, float]:
        out = self.solo_profit()
        for m in self.matches:
            for k, v in m.allocation.platform_profits.items():
                out[k] = out.get(k, 0.0) + v
        return out

    def baseline_profit(self) -> dict[int, float]:
        """Profit if every request had been served alone at the undiscounted fare."""
        out = dict.fromkeys(self.platforms, 0.0)
        for r in self.riders:
            out[r.platform] = out.get(r.platform, 0.0) + single_profit(r.fare_single, self.pricing)
        return out


def _match_graphs(graphs: Sequence[RiderGraph]) -> tuple[list[tuple[int, int]], float]:
    pairs: list[tuple[int, int]] = []
    total = 0.0
    for g in graphs:
        m: Matching = max_weight_matching(g)
        pairs.extend(m.pairs)
        total += m.total_weight
    return pairs, total


class Simulator:
    """Stateful replay of one scenario over a request list.

    The request objects handed in are copied; the simulator owns and
    mutates its copies.
    """

    def __init__(
        self,
        requests: Sequence[RiderRequest],
        cfg: SimConfig,
        distances: DistanceMatrix,
        scenario: Scenario,
        replication: int = 0,
    ):
        self.cfg = cfg
        self.scenario = scenario
        self.replication = replication
        self.distances = distances
        self.riders = sorted((r.fresh_copy() for r in requests), key=lambda r: (r.request_time, r.id))
        for r in self.riders:
            if r.platform < 0:
                raise ConfigError(f"request {r.id} has no platform; assign platforms first")
            if r.origin not in distances or r.dest not in distances:
                raise ConfigError(f"request {r.id} endpoints missing from the distance table")
            r.price(cfg.pricing)
        self.platforms = tuple(sorted({r.platform for r in self.riders} | set(range(len(cfg.market_shares)))))
        self.windows: list[WindowRecord] = []
        self.matches: list[CommittedMatch] = []
        self._cache: dict[tuple[int, int], SharedTripCandidate] = {}
        self._next = 0  # first rider not yet arrived
        self._open: list[RiderRequest] = []
        self._last_t: float | None = None

    # -- queue ---------------------------------------------------------
    def _admit(self, t: float) -> int:
        arrived = 0
        while self._next < len(self.riders) and self.riders[self._next].request_time <= t:
            r = self.riders[self._next]
            self._next += 1
            arrived += 1
            if not r.poolable:
                r.move_to(RiderState.EXPIRED_SOLO)
                continue
            self._open.append(r)
        return arrived

    def _expire_stale(self, t: float, active: list[RiderRequest]) -> None:
        ids = {r.id for r in active}
        for r in self._open:
            if r.id not in ids:
                r.move_to(RiderState.EXPIRED_SOLO)
        self._open = [r for r in self._open if r.open]

    def _expire_after(self, t: float) -> None:
        """Unmatched riders that cannot be active in the next window leave as solo trips."""
        w = self.cfg.window
        nxt = t + w.step
        for r in self._open:
            if r.state is RiderState.ACTIVE and nxt - r.request_time > w.max_wait and r.request_time < nxt - w.length:
                r.move_to(RiderState.EXPIRED_SOLO)
        self._open = [r for r in self._open if r.open]

    # -- graphs --------------------------------------------------------
    def _graphs(self, matrix: FeasibilityMatrix, waits: dict[int, float], scenario: Scenario) -> list[RiderGraph]:
        weights = self.cfg.weights
        if scenario.variant is Variant.COMPETITION:
            return build_competition(matrix, weights, waits, self.platforms)
        if scenario.variant is Variant.FULL:
            return [build_full(matrix, weights, waits)]
        filtered = profit_aware_filter(matrix, scenario.mechanism, self.cfg.market_shares, self.cfg.inner_benchmark)
        return [build_profit_aware(matrix, filtered, weights, waits)]

    def _audit(self, matrix: FeasibilityMatrix, waits: dict[int, float]) -> AuditRecord:
        edges, weight, profit, stats = {}, {}, {}, {}
        for sc in ALL_SCENARIOS:
            graphs = self._graphs(matrix, waits, sc)
            pairs, total = _match_graphs(graphs)
            edges[sc.label] = set().union(*(g.edge_set() for g in graphs))
            weight[sc.label] = total
            profit[sc.label] = math.fsum(matrix.candidate(a, b).joint_profit for a, b in pairs)
            stats[sc.label] = combined_stats(graphs)
        return AuditRecord(edges, weight, profit, stats)

    def _allocation(self, cand: SharedTripCandidate) -> AllocationSplit:
        a, b = cand.platforms
        if a == b:
            return AllocationSplit({a: cand.joint_profit}, self.scenario.mechanism)
        phi_a, phi_b = split_pair(cand, self.scenario.mechanism, self.cfg.market_shares)
        return AllocationSplit({a: phi_a, b: phi_b}, self.scenario.mechanism)

    # -- one window ----------------------------------------------------
    def step(self, t: float) -> WindowRecord:
        cfg = self.cfg
        arrivals = self._admit(t)
        active = active_riders(self._open, t, cfg.window)
        self._expire_stale(t, active)
        for r in active:
            r.move_to(RiderState.ACTIVE)
            r.wait_accrued = t - r.request_time
        waits = {r.id: r.wait_accrued for r in active}

        t0 = time.perf_counter()
        matrix = feasibility_matrix(active, t, self.distances, cfg.window, cfg.pricing, cfg.access, self._cache)
        graphs = self._graphs(matrix, waits, self.scenario)
        t1 = time.perf_counter()
        pairs, total = _match_graphs(graphs)
        t2 = time.perf_counter()
        audit = self._audit(matrix, waits) if cfg.audit else None

        if self.scenario.variant is Variant.COMPETITION:
            n_v, n_e, deg = combined_stats(graphs)
        else:
            n_v, n_e, deg = graph_stats(graphs[0])

        by_id = {r.id: r for r in active}
        window_profit = dict.fromkeys(self.platforms, 0.0)
        pair_profit = []
        for a, b in sorted(pairs):
            cand = matrix.candidate(a, b)
            alloc = self._allocation(cand)
            cand.allocation = alloc
            self.matches.append(CommittedMatch(t, cand, alloc))
            pair_profit.append(cand.joint_profit)
            for k, v in alloc.platform_profits.items():
                window_profit[k] += v
            for slot, rid in enumerate((cand.rider_i, cand.rider_j)):
                r = by_id[rid]
                r.move_to(RiderState.MATCHED)
                r.match_time = t
                r.wait_accrued = t - r.request_time
                r.partner = cand.rider_j if slot == 0 else cand.rider_i
                r.in_trip_distance = cand.path.in_trip[slot]
                r.shared_distance = cand.path.total_distance
                r.sequence = cand.path.sequence
                r.profit_share = alloc[r.platform] if cand.inter_platform else cand.joint_profit / 2.0
        self._open = [r for r in self._open if r.open]
        self._expire_after(t)
        self._last_t = t

        rec = WindowRecord(
            t=t, arrivals=arrivals, active=len(active), vertices=n_v, edges=n_e, avg_degree=deg,
            matched_pairs=len(pairs), matching_weight=total, pair_profit=math.fsum(pair_profit),
            platform_profit=window_profit, creation_s=t1 - t0, matching_s=t2 - t1, audit=audit,
        )
        self.windows.append(rec)
        return rec

    def finish(self) -> SimulationResult:
        for r in self.riders:
            if r.open:
                r.move_to(RiderState.EXPIRED_SOLO)
        pricing = self.cfg.pricing
        for r in self.riders:
            if r.state is RiderState.EXPIRED_SOLO:
                r.profit_share = single_profit(r.fare_single, pricing)
        return SimulationResult(
            self.scenario.label, self.replication, self.windows, self.riders, self.matches,
            pricing, self.platforms,
        )

    def run(self) -> SimulationResult:
        for t in self.cfg.window_times():
            self.step(t)
        return self.finish()


def endpoint_distances(requests: Sequence[RiderRequest], net: RoadNetwork) -> DistanceMatrix:
    return precompute_distance_matrix(net, sorted({x for r in requests for x in (r.origin, r.dest)}))


def run(
    requests: Sequence[RiderRequest],
    cfg: SimConfig,
    net: RoadNetwork | DistanceMatrix,
    scenario: Scenario | None = None,
    replication: int = 0,
) -> SimulationResult:
    """Simulate one scenario (default: the configured one) over the horizon."""
    if scenario is None:
        options = cfg.scenarios()
        if len(options) != 1:
            raise ConfigError("scenario 'all' yields several results; use run_all")
        scenario = options[0]
    dm = net if isinstance(net, DistanceMatrix) else endpoint_distances(requests, net)
    return Simulator(requests, cfg, dm, scenario, replication).run()


def run_all(
    requests: Sequence[RiderRequest],
    cfg: SimConfig,
    net: RoadNetwork | DistanceMatrix,
    replication: int = 0,
) -> list[SimulationResult]:
    """One result per configured scenario, all from the same request list."""
    dm = net if isinstance(net, DistanceMatrix) else endpoint_distances(requests, net)
    return [Simulator(requests, cfg, dm, sc, replication).run() for sc in cfg.scenarios()]
