"""Fares, trip profits and the three cross-platform profit allocation rules."""
from __future__ import annotations

import enum
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from itertools import combinations

from crossride.errors import ConfigError

MONEY_TOL = 1e-9
MAX_SHAPLEY_PLAYERS = 12


def mph_to_miles_per_minute(mph: float) -> float:
    return mph / 60.0


class Mechanism(str, enum.Enum):
    EQUAL = "equal"
    MARKET = "market"
    SHAPLEY = "shapley"

    @classmethod
    def parse(cls, value: str | Mechanism) -> Mechanism:
        try:
            return cls(value)
        except ValueError:
            raise ConfigError(
                f"unknown allocation mechanism {value!r}; expected one of "
                + ", ".join(m.value for m in cls)
            ) from None


@dataclass(frozen=True)
class PricingParams:
    alpha_d: float = 2.0  # $/mile
    alpha_t: float = 0.5  # $/minute
    mean_speed: float = 0.25  # miles/minute
    base_fare: float = 2.0
    discount: float = 0.1
    commission: float = 0.5  # driver payout rate

    def __post_init__(self):
        if self.alpha_d < 0 or self.alpha_t < 0:
            raise ConfigError("alpha_d and alpha_t must be non-negative")
        if not self.mean_speed > 0:
            raise ConfigError("mean_speed must be positive")
        if self.base_fare < 0:
            raise ConfigError("base_fare must be non-negative")
        if not 0 <= self.discount <= 1:
            raise ConfigError("discount must lie in [0, 1]")
        if not 0 <= self.commission <= 1:
            raise ConfigError("commission must lie in [0, 1]")

    @classmethod
    def from_mph(cls, speed_mph: float = 15.0, **kwargs) -> PricingParams:
        if not speed_mph > 0:
            raise ConfigError("speed_mph must be positive")
        return cls(mean_speed=mph_to_miles_per_minute(speed_mph), **kwargs)

    @property
    def cost_per_mile(self) -> float:
        """Distance plus time value of one mile, in $/mile."""
        return self.alpha_d + self.alpha_t / self.mean_speed


def fare(direct_distance: float, params: PricingParams, discounted: bool) -> float:
    """Upfront fare for a trip of ``direct_distance`` miles.

    The sharing discount is applied only when ``discounted`` is true; solo
    trips are priced at the undiscounted rate.
    """
    if direct_distance < 0:
        raise ValueError(f"negative trip distance {direct_distance}")
    factor = (1.0 - params.discount) if discounted else 1.0
    return direct_distance * params.cost_per_mile * factor + params.base_fare


def single_profit(fare_paid: float, params: PricingParams) -> float:
    return fare_paid * (1.0 - params.commission)


def shared_profit(fare_i: float, fare_j: float, shared_distance: float, params: PricingParams) -> float:
    if shared_distance < 0:
        raise ValueError(f"negative shared distance {shared_distance}")
    return fare_i + fare_j - shared_distance * params.cost_per_mile * params.commission


@dataclass(frozen=True)
class MarketShares:
    weights: tuple[float, ...] = (0.58, 0.42)

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        object.__setattr__(self, "weights", w)
        if len(w) < 1:
            raise ConfigError("market shares must name at least one platform")
        if any(not (0.0 <= x <= 1.0) for x in w):
            raise ConfigError(f"market shares must lie in [0, 1], got {w}")
        if abs(sum(w) - 1.0) > 1e-9:
            raise ConfigError(f"market shares must sum to 1, got {sum(w)}")

    def __getitem__(self, platform: int) -> float:
        return self.weights[platform]

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class AllocationSplit:
    platform_profits: dict[int, float] = field(default_factory=dict)
    mechanism: Mechanism = Mechanism.SHAPLEY

    def __getitem__(self, platform: int) -> float:
        return self.platform_profits[platform]

    @property
    def total(self) -> float:
        return math.fsum(self.platform_profits.values())

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(self.platform_profits[k] for k in sorted(self.platform_profits))


def allocate_equal(joint_profit: float) -> AllocationSplit:
    half = joint_profit / 2.0
    return AllocationSplit({0: half, 1: half}, Mechanism.EQUAL)


def allocate_market(joint_profit: float, shares: MarketShares) -> AllocationSplit:
    if len(shares) != 2:
        raise ValueError("pairwise allocation needs exactly two market shares")
    phi0 = shares[0] * joint_profit
    # remainder keeps the split exactly efficient under rounding
    return AllocationSplit({0: phi0, 1: joint_profit - phi0}, Mechanism.MARKET)


def shapley_two(p0: float, p1: float, p_joint: float) -> AllocationSplit:
    surplus = p_joint - p0 - p1
    return AllocationSplit({0: p0 + surplus / 2.0, 1: p1 + surplus / 2.0}, Mechanism.SHAPLEY)


def shapley_general(
    coalition_value: Callable[[frozenset[int]], float],
    n_platforms: int,
) -> AllocationSplit:
    """Exact Shapley values by enumerating every coalition.

    ``coalition_value`` receives a frozenset of platform ids drawn from
    ``range(n_platforms)`` and must return a finite number; the empty
    coalition must be worth zero.
    """
    if n_platforms < 1:
        raise ValueError("need at least one platform")
    if n_platforms > MAX_SHAPLEY_PLAYERS:
        raise ValueError(
            f"exact Shapley enumeration limited to {MAX_SHAPLEY_PLAYERS} players, got {n_platforms}"
        )
    players = range(n_platforms)
    values: dict[frozenset[int], float] = {}
    for size in range(n_platforms + 1):
        for subset in combinations(players, size):
            key = frozenset(subset)
            try:
                v = coalition_value(key)
            except (KeyError, IndexError) as exc:
                raise ValueError(f"coalition value undefined for {set(key)}") from exc
            if v is None or not math.isfinite(v):
                raise ValueError(f"coalition value undefined for {set(key)}")
            values[key] = float(v)
    if abs(values[frozenset()]) > MONEY_TOL:
        raise ValueError("the empty coalition must have value 0")

    n = n_platforms
    weight = [math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n) for s in range(n)]
    phi = {}
    for i in players:
        others = [p for p in players if p != i]
        terms = []
        for size in range(n):
            for subset in combinations(others, size):
                s = frozenset(subset)
                terms.append(weight[size] * (values[s | {i}] - values[s]))
        phi[i] = math.fsum(terms)
    return AllocationSplit(phi, Mechanism.SHAPLEY)


def allocate(
    mechanism: Mechanism,
    joint_profit: float,
    standalone: Sequence[float],
    shares: MarketShares,
) -> AllocationSplit:
    """Split a two-platform joint profit; ``standalone[k]`` is platform k's solo profit."""
    mechanism = Mechanism.parse(mechanism)
    if mechanism is Mechanism.EQUAL:
        return allocate_equal(joint_profit)
    if mechanism is Mechanism.MARKET:
        return allocate_market(joint_profit, shares)
    return shapley_two(standalone[0], standalone[1], joint_profit)
