"""Flat YAML run configuration.

Every key maps to one simulation parameter; unknown keys are rejected.
Relative file paths resolve against the config file's directory.

Simulation keys (defaults in brackets):

    horizon [1440]        simulated minutes
    epsilon [5]           window length, minutes
    step [5]              window advance, minutes
    tau [10]              maximum wait, minutes
    gamma [0.2]           maximum detour ratio
    beta [0.1]            shared-trip discount
    o [0.5]               driver payout rate
    mu [2]                base fare, $
    alpha_d [2]           $/mile
    alpha_t [0.5]         $/minute
    speed_mph [15]        mean vehicle speed
    psi [0.5]             waiting-time weight in edge weights
    shares [0.58, 0.42]   platform market shares
    mechanism [shapley]   equal | market | shapley
    scenario [profit-aware]  competition | full | profit-aware | all
    replications [5]
    seed [0]
    theta [1.0]           collaboration willingness (recorded only)
    access_mode [zero]    zero | constant | uniform-random
    access_distance [0]   miles; constant value or uniform upper bound
    inner_benchmark [pair]  pair | rider
    reassign_platforms [true]
    audit [false]
    endpoint_candidates [50]

Network keys: ``nodes_file``, ``edges_file``, ``zones_file``, or a generated
grid via ``grid_rows``, ``grid_cols``, ``grid_spacing``, ``grid_jitter``,
``grid_seed``, ``zone_block``. Optional ``trips_file``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from crossride.economics import MarketShares, PricingParams
from crossride.engine import SimConfig
from crossride.errors import ConfigError, DataError
from crossride.geo import RoadNetwork, grid_network, load_network
from crossride.shareability import VehicleAccessModel, WindowConfig

SIM_KEYS = {
    "horizon", "epsilon", "step", "tau", "gamma", "beta", "o", "mu", "alpha_d", "alpha_t",
    "speed_mph", "psi", "shares", "mechanism", "scenario", "replications", "seed", "theta",
    "access_mode", "access_distance", "inner_benchmark", "reassign_platforms", "audit",
    "endpoint_candidates",
}
NETWORK_FILE_KEYS = {"nodes_file", "edges_file", "zones_file"}
GRID_KEYS = {"grid_rows", "grid_cols", "grid_spacing", "grid_jitter", "grid_seed", "zone_block"}
OTHER_KEYS = {"trips_file"}
KNOWN_KEYS = SIM_KEYS | NETWORK_FILE_KEYS | GRID_KEYS | OTHER_KEYS


@dataclass
class RunConfig:
    sim: SimConfig
    raw: dict[str, Any] = field(default_factory=dict)
    base_dir: Path = Path(".")
    endpoint_candidates: int = 50

    def path(self, key: str) -> Path | None:
        value = self.raw.get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def network(self) -> RoadNetwork:
        if NETWORK_FILE_KEYS & self.raw.keys():
            nodes, edges = self.path("nodes_file"), self.path("edges_file")
            if nodes is None or edges is None:
                raise ConfigError("nodes_file and edges_file must be given together")
            return load_network(nodes, edges, self.path("zones_file"))
        r = self.raw
        return grid_network(
            int(r.get("grid_rows", 20)), int(r.get("grid_cols", r.get("grid_rows", 20))),
            float(r.get("grid_spacing", 0.25)), jitter=float(r.get("grid_jitter", 0.0)),
            seed=int(r.get("grid_seed", 0)), zone_block=int(r.get("zone_block", 4)),
        )

    def snapshot(self) -> dict[str, Any]:
        """Resolved parameter values, for the run manifest."""
        s = self.sim
        return {
            "horizon": s.horizon, "epsilon": s.window.length, "step": s.window.step,
            "tau": s.window.max_wait, "gamma": s.window.max_detour, "beta": s.pricing.discount,
            "o": s.pricing.commission, "mu": s.pricing.base_fare, "alpha_d": s.pricing.alpha_d,
            "alpha_t": s.pricing.alpha_t, "speed_mph": s.pricing.mean_speed * 60.0, "psi": s.psi,
            "shares": list(s.market_shares.weights), "mechanism": s.mechanism.value,
            "scenario": s.scenario.value, "replications": s.replications, "seed": s.seed,
            "theta": s.collaboration_willingness, "access_mode": s.access.mode.value,
            "access_distance": s.access.parameter, "inner_benchmark": s.inner_benchmark.value,
            "reassign_platforms": s.reassign_platforms, "audit": s.audit,
            "endpoint_candidates": self.endpoint_candidates,
            **{k: self.raw[k] for k in sorted((NETWORK_FILE_KEYS | GRID_KEYS | OTHER_KEYS) & self.raw.keys())},
        }


def _num(raw: dict, key: str, default: float) -> float:
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    return float(value)


def _int(raw: dict, key: str, default: int) -> int:
    value = raw.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    return value


def _bool(raw: dict, key: str, default: bool) -> bool:
    value = raw.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{key}: expected true or false, got {value!r}")
    return value


def build_config(raw: dict[str, Any] | None, base_dir: str | Path = ".") -> RunConfig:
    raw = dict(raw or {})
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    if NETWORK_FILE_KEYS & raw.keys() and GRID_KEYS & raw.keys():
        raise ConfigError("give either network files or grid_* keys, not both")

    shares = raw.get("shares", [0.58, 0.42])
    if not isinstance(shares, (list, tuple)):
        raise ConfigError(f"shares: expected a list, got {shares!r}")
    try:
        pricing = PricingParams.from_mph(
            _num(raw, "speed_mph", 15.0),
            alpha_d=_num(raw, "alpha_d", 2.0), alpha_t=_num(raw, "alpha_t", 0.5),
            base_fare=_num(raw, "mu", 2.0), discount=_num(raw, "beta", 0.1),
            commission=_num(raw, "o", 0.5),
        )
        window = WindowConfig(
            length=_num(raw, "epsilon", 5.0), step=_num(raw, "step", 5.0),
            max_wait=_num(raw, "tau", 10.0), max_detour=_num(raw, "gamma", 0.2),
        )
        access = VehicleAccessModel(
            str(raw.get("access_mode", "zero")), _num(raw, "access_distance", 0.0), _int(raw, "seed", 0),
        )
        sim = SimConfig(
            horizon=_num(raw, "horizon", 1440.0), window=window, pricing=pricing,
            psi=_num(raw, "psi", 0.5), mechanism=str(raw.get("mechanism", "shapley")),
            scenario=str(raw.get("scenario", "profit-aware")),
            market_shares=MarketShares(tuple(shares)), replications=_int(raw, "replications", 5),
            seed=_int(raw, "seed", 0), collaboration_willingness=_num(raw, "theta", 1.0),
            access=access, inner_benchmark=str(raw.get("inner_benchmark", "pair")),
            reassign_platforms=_bool(raw, "reassign_platforms", True), audit=_bool(raw, "audit", False),
        )
    except ValueError as exc:  # enum lookups and ConfigError alike
        raise ConfigError(str(exc)) from None
    k = _int(raw, "endpoint_candidates", 50)
    if k < 1:
        raise ConfigError("endpoint_candidates must be at least 1")
    return RunConfig(sim, raw, Path(base_dir), k)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return build_config({})
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: config file not found")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping of keys to values")
    try:
        return build_config(raw, path.parent)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None
