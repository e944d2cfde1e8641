"""Rider requests: the trip record, CSV ingestion, platform draws and synthetic demand."""
from __future__ import annotations

import csv
import enum
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from crossride.economics import MarketShares, PricingParams, fare
from crossride.errors import DataError
from crossride.geo import RoadNetwork, assign_endpoint, shortest_distance


class RiderState(str, enum.Enum):
    PENDING = "pending"
    ACTIVE = "active"
    MATCHED = "matched"
    EXPIRED_SOLO = "expired-solo"


_ALLOWED = {
    RiderState.PENDING: {RiderState.ACTIVE, RiderState.EXPIRED_SOLO},
    RiderState.ACTIVE: {RiderState.MATCHED, RiderState.EXPIRED_SOLO},
    RiderState.MATCHED: set(),
    RiderState.EXPIRED_SOLO: set(),
}


@dataclass
class RiderRequest:
    id: int
    platform: int
    request_time: float
    origin: int
    dest: int
    direct_distance: float
    fare_shared: float = 0.0
    fare_single: float = 0.0
    state: RiderState = RiderState.PENDING
    wait_accrued: float = 0.0
    match_time: float | None = None
    partner: int | None = None
    in_trip_distance: float | None = None
    shared_distance: float | None = None
    sequence: int | None = None
    profit_share: float = 0.0

    def move_to(self, new: RiderState) -> None:
        if new is self.state:
            return
        if new not in _ALLOWED[self.state]:
            raise RuntimeError(f"rider {self.id}: illegal transition {self.state.value} -> {new.value}")
        self.state = new

    @property
    def open(self) -> bool:
        return self.state in (RiderState.PENDING, RiderState.ACTIVE)

    @property
    def poolable(self) -> bool:
        # zero-length trips make the detour ratio undefined; they always ride solo
        return self.direct_distance > 0

    def price(self, pricing: PricingParams) -> None:
        self.fare_single = fare(self.direct_distance, pricing, discounted=False)
        self.fare_shared = fare(self.direct_distance, pricing, discounted=True)

    def fresh_copy(self) -> RiderRequest:
        """Copy with lifecycle fields reset to a newly loaded request."""
        return RiderRequest(
            self.id, self.platform, self.request_time, self.origin, self.dest,
            self.direct_distance, self.fare_shared, self.fare_single,
        )


TRIP_COLUMNS = (
    "id", "request_time_min", "platform", "origin_node", "dest_node",
    "origin_zone", "dest_zone", "reported_length_miles",
)


def _blank(value: str | None) -> bool:
    return value is None or value.strip() == ""


def load_trips(
    path: str | Path,
    net: RoadNetwork,
    seed: int = 0,
    pricing: PricingParams | None = None,
    candidates: int = 50,
) -> list[RiderRequest]:
    """Read a trips CSV and resolve every endpoint to a network node.

    Each row gives either ``origin_node``/``dest_node`` directly, or
    ``origin_zone``/``dest_zone`` plus ``reported_length_miles``, in which case
    the node pair is chosen with :func:`assign_endpoint` seeded by
    ``seed`` and the row position. A missing ``platform`` is stored as -1 and
    must be filled by :func:`assign_platforms` before simulating.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    pricing = pricing or PricingParams()
    out: list[RiderRequest] = []
    seen: set[int] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        if "id" not in header or "request_time_min" not in header:
            raise DataError(f"{path}:1: trips file needs 'id' and 'request_time_min' columns")
        has_nodes = "origin_node" in header and "dest_node" in header
        has_zones = "origin_zone" in header and "dest_zone" in header
        if not (has_nodes or has_zones):
            raise DataError(f"{path}:1: trips file needs origin/dest node or zone columns")
        for row_no, row in enumerate(reader):
            where = f"{path}:{reader.line_num}"
            try:
                rid = int(row["id"])
                t = float(row["request_time_min"])
                platform = -1 if _blank(row.get("platform")) else int(row["platform"])
            except (TypeError, ValueError) as exc:
                raise DataError(f"{where}: {exc}") from None
            if rid in seen:
                raise DataError(f"{where}: duplicate request id {rid}")
            seen.add(rid)
            if t < 0:
                raise DataError(f"{where}: negative request time {t}")

            if has_nodes and not _blank(row.get("origin_node")) and not _blank(row.get("dest_node")):
                try:
                    o, d = int(row["origin_node"]), int(row["dest_node"])
                except ValueError as exc:
                    raise DataError(f"{where}: {exc}") from None
                if o not in net.nodes or d not in net.nodes:
                    raise DataError(f"{where}: endpoint node not in network")
            elif has_zones and not _blank(row.get("origin_zone")) and not _blank(row.get("dest_zone")):
                if _blank(row.get("reported_length_miles")):
                    raise DataError(f"{where}: zone endpoints need reported_length_miles")
                try:
                    length = float(row["reported_length_miles"])
                    o, d = assign_endpoint(
                        net, row["origin_zone"].strip(), row["dest_zone"].strip(), length,
                        rng_seed=seed * 1_000_003 + row_no, k=candidates,
                    )
                except (ValueError, DataError) as exc:
                    raise DataError(f"{where}: {exc}") from None
            else:
                raise DataError(f"{where}: unresolvable endpoint")

            direct = shortest_distance(net, o, d)
            if direct is None:
                raise DataError(f"{where}: destination unreachable from origin")
            req = RiderRequest(rid, platform, t, o, d, direct)
            req.price(pricing)
            out.append(req)
    out.sort(key=lambda r: (r.request_time, r.id))
    return out


def write_trips(requests: Sequence[RiderRequest], path: str | Path, with_platform: bool = True) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        cols = ["id", "request_time_min", "origin_node", "dest_node"]
        if with_platform:
            cols.insert(2, "platform")
        w.writerow(cols)
        for r in requests:
            row = [r.id, repr(r.request_time), r.origin, r.dest]
            if with_platform:
                row.insert(2, r.platform)
            w.writerow(row)


def assign_platforms(
    requests: Sequence[RiderRequest],
    shares: MarketShares,
    seed: int | Sequence[int],
) -> list[RiderRequest]:
    """Draw each request's platform independently with probabilities ``shares``."""
    rng = np.random.default_rng(seed)
    draws = rng.choice(len(shares), size=len(requests), p=np.asarray(shares.weights))
    for r, k in zip(requests, draws):
        r.platform = int(k)
    return list(requests)


@dataclass(frozen=True)
class SpatialProfile:
    """Where trips start and end.

    ``kind="uniform"`` draws origins and destinations uniformly over nodes.
    ``kind="hotspot"`` draws origins from zones with the given weights,
    destinations stay uniform.
    """

    kind: str = "uniform"
    hotspots: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("uniform", "hotspot"):
            raise DataError(f"unknown spatial profile {self.kind!r}")
        if self.kind == "hotspot":
            if not self.hotspots:
                raise DataError("hotspot profile needs at least one (zone, weight)")
            if any(w < 0 for _, w in self.hotspots) or sum(w for _, w in self.hotspots) <= 0:
                raise DataError("hotspot weights must be non-negative with positive sum")


@dataclass(frozen=True)
class TemporalProfile:
    """When trips are requested, over ``[0, horizon)`` minutes.

    ``kind="peaked"`` is a mixture of a uniform background and Gaussian
    bumps at ``peaks`` (minutes) with standard deviation ``spread``.
    """

    kind: str = "uniform"
    horizon: float = 1440.0
    peaks: tuple[float, ...] = (480.0, 1080.0)
    spread: float = 60.0
    background: float = 0.3

    def __post_init__(self):
        if self.kind not in ("uniform", "peaked"):
            raise DataError(f"unknown temporal profile {self.kind!r}")
        if not self.horizon > 0:
            raise DataError("temporal horizon must be positive")
        if not 0 <= self.background <= 1:
            raise DataError("background fraction must lie in [0, 1]")


def gen_synthetic_demand(
    n_requests: int,
    net: RoadNetwork,
    spatial: SpatialProfile = SpatialProfile(),
    temporal: TemporalProfile = TemporalProfile(),
    seed: int = 0,
    shares: MarketShares | None = None,
    pricing: PricingParams | None = None,
) -> list[RiderRequest]:
    """Reproducible synthetic requests with strictly positive trip lengths."""
    rng = np.random.default_rng(seed)
    pricing = pricing or PricingParams()
    shares = shares or MarketShares()
    nodes = np.array(sorted(net.nodes))
    if len(nodes) < 2 and n_requests > 0:
        raise DataError("network needs at least two nodes for synthetic trips")

    if temporal.kind == "uniform":
        times = rng.uniform(0.0, temporal.horizon, size=n_requests)
    else:
        times = np.empty(n_requests)
        for k in range(n_requests):
            while True:
                if rng.random() < temporal.background or not temporal.peaks:
                    t = rng.uniform(0.0, temporal.horizon)
                else:
                    t = rng.normal(temporal.peaks[rng.integers(len(temporal.peaks))], temporal.spread)
                if 0.0 <= t < temporal.horizon:
                    break
            times[k] = t

    if spatial.kind == "hotspot":
        zone_ids = [z for z, _ in spatial.hotspots]
        for z in zone_ids:
            if not net.zones.get(z):
                raise DataError(f"hotspot zone {z!r} is empty or unknown")
        w = np.array([wt for _, wt in spatial.hotspots], dtype=float)
        w /= w.sum()

    out = []
    for k in range(n_requests):
        while True:
            if spatial.kind == "uniform":
                o = int(nodes[rng.integers(len(nodes))])
            else:
                members = net.zones[zone_ids[rng.choice(len(zone_ids), p=w)]]
                o = int(members[rng.integers(len(members))])
            d = int(nodes[rng.integers(len(nodes))])
            if d == o:
                continue
            direct = shortest_distance(net, o, d)
            if direct is not None and direct > 0:
                break
        platform = int(rng.choice(len(shares), p=np.asarray(shares.weights)))
        req = RiderRequest(k, platform, float(round(times[k], 6)), o, d, direct)
        req.price(pricing)
        out.append(req)
    out.sort(key=lambda r: (r.request_time, r.id))
    return out
