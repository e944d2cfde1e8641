"""Replications, the synthetic demand ramp and one-at-a-time parameter sweeps."""
from __future__ import annotations

from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field, replace

from crossride.analysis import MetricsReport, compute_metrics
from crossride.engine import Scenario, SimConfig, SimulationResult, Simulator, endpoint_distances, run_all
from crossride.errors import ConfigError
from crossride.geo import DistanceMatrix, RoadNetwork, grid_network
from crossride.requests import RiderRequest, TemporalProfile, assign_platforms, gen_synthetic_demand


def replicate(requests: Sequence[RiderRequest], cfg: SimConfig, replication: int) -> list[RiderRequest]:
    """Request copies for one replication, with platforms redrawn if configured."""
    copies = [r.fresh_copy() for r in requests]
    if cfg.reassign_platforms:
        assign_platforms(copies, cfg.market_shares, seed=[cfg.seed, replication])
    return copies


def run_replications(
    requests: Sequence[RiderRequest],
    cfg: SimConfig,
    net: RoadNetwork | DistanceMatrix,
    on_result: Callable[[SimulationResult], None] | None = None,
) -> list[SimulationResult]:
    """``cfg.replications`` runs of every configured scenario, replication-major."""
    dm = net if isinstance(net, DistanceMatrix) else endpoint_distances(requests, net)
    out = []
    for rep in range(cfg.replications):
        for res in run_all(replicate(requests, cfg, rep), cfg, dm, replication=rep):
            out.append(res)
            if on_result is not None:
                on_result(res)
    return out


# --------------------------------------------------------------------------
# demand ramp


@dataclass(frozen=True)
class RampConfig:
    """Uniform synthetic demand at fixed expected arrivals per window.

    ``levels`` are expected requests per window; each level runs
    ``replications`` fresh demand draws over ``horizon`` minutes on a
    jittered grid.
    """

    levels: tuple[int, ...] = (25, 50, 100, 200)
    horizon: float = 60.0
    replications: int = 3
    grid_rows: int = 40
    grid_cols: int = 40
    grid_spacing: float = 0.25
    grid_jitter: float = 0.3
    grid_seed: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.levels or any(n <= 0 for n in self.levels):
            raise ConfigError("ramp levels must be positive request counts")
        if self.replications < 1:
            raise ConfigError("ramp needs at least one replication")


@dataclass
class RampRun:
    level: int
    replication: int
    result: SimulationResult
    metrics: MetricsReport


@dataclass
class RampResult:
    runs: list[RampRun] = field(default_factory=list)

    def scenarios(self) -> list[str]:
        return sorted({r.result.scenario for r in self.runs})

    def select(self, scenario: str) -> Iterator[RampRun]:
        return (r for r in self.runs if r.result.scenario == scenario)

    def share_rates(self, scenario: str) -> tuple[list[int], list[float]]:
        runs = list(self.select(scenario))
        return [r.level for r in runs], [r.metrics.share_rate for r in runs]

    def mean_share_rate(self, scenario: str, level: int) -> float:
        vals = [r.metrics.share_rate for r in self.select(scenario) if r.level == level]
        return sum(vals) / len(vals)

    def window_stats(self, scenario: str) -> list[tuple[int, int, float]]:
        return [(w.vertices, w.edges, w.avg_degree) for r in self.select(scenario) for w in r.result.windows]

    def window_timings(self, scenario: str) -> list[tuple[int, int, float, float]]:
        return [(w.vertices, w.edges, w.creation_s, w.matching_s)
                for r in self.select(scenario) for w in r.result.windows]

    def mean_degree(self, scenario: str, level: int) -> float:
        ds = [w.avg_degree for r in self.select(scenario) if r.level == level for w in r.result.windows]
        return sum(ds) / len(ds)


def ramp_demand(ramp: RampConfig, net: RoadNetwork, level: int, replication: int,
                cfg: SimConfig) -> list[RiderRequest]:
    n_windows = ramp.horizon / cfg.window.step
    n = int(round(level * n_windows))
    return gen_synthetic_demand(
        n, net, temporal=TemporalProfile(horizon=ramp.horizon),
        seed=[ramp.seed, level, replication], shares=cfg.market_shares, pricing=cfg.pricing,
    )


def run_ramp(
    cfg: SimConfig,
    ramp: RampConfig = RampConfig(),
    net: RoadNetwork | None = None,
    progress: Callable[[str], None] | None = None,
) -> RampResult:
    """Every configured scenario at every level and replication of the ramp."""
    net = net or grid_network(ramp.grid_rows, ramp.grid_cols, ramp.grid_spacing,
                              jitter=ramp.grid_jitter, seed=ramp.grid_seed)
    cfg = cfg.with_overrides(horizon=ramp.horizon)
    out = RampResult()
    for level in ramp.levels:
        for rep in range(ramp.replications):
            reqs = ramp_demand(ramp, net, level, rep, cfg)
            for res in run_all(reqs, cfg, net, replication=rep):
                out.runs.append(RampRun(level, rep, res, compute_metrics(res)))
            if progress is not None:
                progress(f"level {level} replication {rep} done")
    return out


# --------------------------------------------------------------------------
# one-at-a-time sweeps


def _set_window(attr: str) -> Callable[[SimConfig, float], SimConfig]:
    return lambda cfg, v: cfg.with_overrides(window=replace(cfg.window, **{attr: v}))


def _set_pricing(attr: str) -> Callable[[SimConfig, float], SimConfig]:
    return lambda cfg, v: cfg.with_overrides(pricing=replace(cfg.pricing, **{attr: v}))


SWEEPABLE: dict[str, Callable[[SimConfig, float], SimConfig]] = {
    "beta": _set_pricing("discount"),
    "o": _set_pricing("commission"),
    "mu": _set_pricing("base_fare"),
    "alpha_d": _set_pricing("alpha_d"),
    "alpha_t": _set_pricing("alpha_t"),
    "gamma": _set_window("max_detour"),
    "tau": _set_window("max_wait"),
    "epsilon": _set_window("length"),
    "step": _set_window("step"),
    "psi": lambda cfg, v: cfg.with_overrides(psi=v),
}

SWEEP_SCENARIOS = ("competition", "full", "profit-aware-shapley")

METRIC_NAMES = ("share_rate", "vmt_total", "vmt_per_rider", "avg_rider_savings", "avg_detour",
                "avg_wait", "total_profit")


def parse_sweep(spec: dict[str, Sequence[float]]) -> list[tuple[str, list[float]]]:
    if not spec:
        raise ConfigError("sweep needs at least one parameter")
    out = []
    for name, values in spec.items():
        if name not in SWEEPABLE:
            raise ConfigError(f"unknown sweep parameter {name!r}; choose from {sorted(SWEEPABLE)}")
        values = list(values) if isinstance(values, (list, tuple)) else [values]
        if not values:
            raise ConfigError(f"sweep parameter {name!r} has no values")
        out.append((name, [float(v) for v in values]))
    return out


def run_sweep(
    requests: Sequence[RiderRequest],
    cfg: SimConfig,
    net: RoadNetwork | DistanceMatrix,
    spec: dict[str, Sequence[float]],
    scenarios: Sequence[str] = SWEEP_SCENARIOS,
    progress: Callable[[str], None] | None = None,
) -> list[dict]:
    """Vary one parameter at a time; long-format rows, one per metric value.

    Platforms are redrawn per replication with the configured shares, the
    same draws for every cell.
    """
    cells = parse_sweep(spec)
    chosen = [Scenario.parse(s) for s in scenarios]
    dm = net if isinstance(net, DistanceMatrix) else endpoint_distances(requests, net)
    rows = []
    for name, values in cells:
        for value in values:
            try:
                cell_cfg = SWEEPABLE[name](cfg, value)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"sweep {name}={value}: {exc}") from None
            for rep in range(cfg.replications):
                reqs = replicate(requests, cell_cfg, rep)
                for sc in chosen:
                    res = Simulator(reqs, cell_cfg, dm, sc, rep).run()
                    metrics = compute_metrics(res).as_dict()
                    for metric in METRIC_NAMES:
                        rows.append({"parameter": name, "value": value, "scenario": sc.label,
                                     "replication": rep, "metric": metric, "metric_value": metrics[metric]})
            if progress is not None:
                progress(f"{name}={value} done")
    return rows
