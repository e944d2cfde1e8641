"""Command-line entry point.

Exit codes: 0 success, 1 internal error or oracle discrepancy, 2 invalid input.
"""
from __future__ import annotations

import argparse
import logging
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from crossride.analysis import compute_metrics, degree_threshold
from crossride.config import RunConfig, load_config
from crossride.engine import ScenarioChoice, SimConfig, SimulationResult, endpoint_distances, run_all
from crossride.errors import ConfigError, DataError
from crossride.experiments import (
    SWEEP_SCENARIOS,
    RampConfig,
    parse_sweep,
    replicate,
    run_ramp,
    run_sweep,
)
from crossride.matching import brute_force_matching, greedy_matching, max_weight_matching
from crossride.outputs import (
    read_riders,
    read_windows,
    write_manifest,
    write_metrics,
    write_riders,
    write_rows,
    write_windows,
)
from crossride.reporting import analyze, metric_rows, write_analysis
from crossride.requests import (
    SpatialProfile,
    TemporalProfile,
    assign_platforms,
    gen_synthetic_demand,
    load_trips,
    write_trips,
)

log = logging.getLogger("crossride")


def _load_run(args) -> RunConfig:
    rc = load_config(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "scenario", None):
        overrides["scenario"] = args.scenario
    if getattr(args, "mechanism", None):
        overrides["mechanism"] = args.mechanism
    if getattr(args, "replications", None) is not None:
        overrides["replications"] = args.replications
    if overrides:
        try:
            rc.sim = rc.sim.with_overrides(**overrides)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return rc


def _trips_path(args, rc: RunConfig) -> Path:
    path = Path(args.trips) if args.trips else rc.path("trips_file")
    if path is None:
        raise ConfigError("no trips file: pass --trips or set trips_file in the config")
    if not path.exists():
        raise DataError(f"{path}: trips file not found")
    return path


def _load_requests(rc: RunConfig, trips: Path):
    net = rc.network()
    reqs = load_trips(trips, net, seed=rc.sim.seed, pricing=rc.sim.pricing, candidates=rc.endpoint_candidates)
    if any(r.platform < 0 for r in reqs) and not rc.sim.reassign_platforms:
        assign_platforms(reqs, rc.sim.market_shares, seed=rc.sim.seed)
    return net, reqs


def _replication_job(payload) -> list[SimulationResult]:
    requests, cfg, dm, rep = payload
    return run_all(replicate(requests, cfg, rep), cfg, dm, replication=rep)


def _simulate_all(requests, cfg: SimConfig, dm, jobs: int) -> list[SimulationResult]:
    payloads = [(requests, cfg, dm, rep) for rep in range(cfg.replications)]
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_replication_job, payloads))
    else:
        batches = [_replication_job(p) for p in payloads]
    return [res for batch in batches for res in batch]


def cmd_simulate(args) -> int:
    rc = _load_run(args)
    trips = _trips_path(args, rc)
    out = Path(args.out)
    cfg = rc.sim
    write_manifest(out, rc.snapshot(), _inputs(rc, trips), [[cfg.seed, r] for r in range(cfg.replications)],
                   "simulate")
    net, reqs = _load_requests(rc, trips)
    dm = endpoint_distances(reqs, net)
    t0 = time.perf_counter()
    results = _simulate_all(reqs, cfg, dm, args.jobs)
    log.info("simulated %d run(s) in %.1f s", len(results), time.perf_counter() - t0)
    write_riders(out / "riders.csv", results)
    write_windows(out / "windows.csv", results)
    write_metrics(out / "metrics.csv",
                  metric_rows([(r.scenario, r.replication, compute_metrics(r).as_dict()) for r in results]))
    for r in results:
        m = compute_metrics(r)
        print(f"{r.scenario:<22} rep {r.replication}: share rate {m.share_rate:.3f}, "
              f"profit {sum(m.platform_profit.values()):.2f}, VMT {m.vmt_total:.1f}")
    return 0


def _inputs(rc: RunConfig, trips: Path | None) -> dict:
    inputs = {k: rc.path(k) for k in ("nodes_file", "edges_file", "zones_file")}
    inputs["trips_file"] = trips
    return inputs


def _parse_params(items: list[str]) -> dict[str, list[float]]:
    spec: dict[str, list[float]] = {}
    for item in items:
        name, sep, values = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects NAME=v1,v2,..., got {item!r}")
        try:
            spec[name.strip()] = [float(v) for v in values.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--param {item!r}: values must be numbers") from None
    return spec


def cmd_sweep(args) -> int:
    rc = _load_run(args)
    spec = _parse_params(args.param or [])
    if args.spec:
        path = Path(args.spec)
        if not path.exists():
            raise DataError(f"{path}: sweep spec not found")
        loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: expected a mapping of parameter to value list")
        spec.update(loaded)
    parse_sweep(spec)  # validate before any work
    trips = _trips_path(args, rc)
    out = Path(args.out)
    write_manifest(out, {**rc.snapshot(), "sweep": spec, "sweep_scenarios": list(args.scenarios)},
                   _inputs(rc, trips), [[rc.sim.seed, r] for r in range(rc.sim.replications)], "sweep")
    net, reqs = _load_requests(rc, trips)
    rows = run_sweep(reqs, rc.sim, net, spec, args.scenarios, progress=log.info)
    write_rows(out / "sweep.csv", ("parameter", "value", "scenario", "replication", "metric", "metric_value"),
               ([r["parameter"], r["value"], r["scenario"], r["replication"], r["metric"], r["metric_value"]]
                for r in rows))
    print(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return 0


def cmd_gen_demand(args) -> int:
    rc = load_config(args.config)
    if args.n < 0:
        raise ConfigError("--n must be non-negative")
    hotspots = []
    for h in args.hotspot or []:
        zone, _, weight = h.rpartition(":")
        try:
            hotspots.append((zone, float(weight)))
        except ValueError:
            raise ConfigError(f"--hotspot expects ZONE:WEIGHT, got {h!r}") from None
    spatial = SpatialProfile(args.spatial, tuple(hotspots))
    temporal = TemporalProfile(args.temporal, horizon=args.horizon or rc.sim.horizon)
    seed = rc.sim.seed if args.seed is None else args.seed
    reqs = gen_synthetic_demand(args.n, rc.network(), spatial, temporal, seed=seed,
                                shares=rc.sim.market_shares, pricing=rc.sim.pricing)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_trips(reqs, args.out)
    print(f"wrote {len(reqs)} requests to {args.out}")
    return 0


def random_graph(rng: random.Random, n: int, max_weight: int = 100, density: float = 0.5):
    return [(a, b, rng.randint(1, max_weight)) for a in range(n) for b in range(a + 1, n) if rng.random() < density]


def cmd_oracle_check(args) -> int:
    if args.max_nodes > 16:
        raise ConfigError("--max-nodes must be at most 16 for the brute-force oracle")
    if args.max_nodes < 2:
        raise ConfigError("--max-nodes must be at least 2")
    if args.cases == 0:
        print("warning: 0 cases requested, nothing checked", file=sys.stderr)
        return 0
    matcher = greedy_matching if args.greedy else max_weight_matching
    rng = random.Random(args.seed)
    t0 = time.perf_counter()
    for case in range(args.cases):
        n = rng.randint(2, args.max_nodes)
        edges = random_graph(rng, n, args.max_weight, rng.uniform(0.2, 1.0))
        got = matcher(edges).total_weight
        want = brute_force_matching(edges).total_weight
        if got != want:
            print(f"discrepancy in case {case}: matcher {got} vs brute force {want}")
            print(f"graph on {n} vertices, edges (a, b, w): {edges}")
            return 1
    print(f"{args.cases} cases agree ({time.perf_counter() - t0:.2f} s)")
    return 0


def cmd_analyze(args) -> int:
    results = Path(args.results)
    windows = read_windows(results / "windows.csv")
    riders_path = results / "riders.csv"
    riders = read_riders(riders_path) if riders_path.exists() else None
    out = analyze(windows, riders, args.interval)
    paths = write_analysis(args.out or results, out, svg=args.svg)
    for w in out.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for line in out.lines:
        print(line)
    print("wrote " + ", ".join(str(p) for p in paths))
    return 0


def cmd_bench(args) -> int:
    rc = _load_run(args)
    levels = tuple(int(x) for x in args.levels.split(","))
    ramp = RampConfig(levels=levels, horizon=args.horizon, replications=args.ramp_replications,
                      seed=rc.sim.seed)
    cfg = rc.sim if args.scenario else rc.sim.with_overrides(scenario=ScenarioChoice.ALL)
    out = Path(args.out)
    write_manifest(out, {**rc.snapshot(), "ramp": {"levels": list(levels), "horizon": ramp.horizon,
                                                   "replications": ramp.replications}},
                   {}, [[ramp.seed, n, r] for n in levels for r in range(ramp.replications)], "bench")
    t0 = time.perf_counter()
    rr = run_ramp(cfg, ramp, progress=log.info)
    results = [r.result for r in rr.runs]
    write_windows(out / "windows.csv", results)
    write_metrics(out / "metrics.csv", [{"level": r.level, "scenario": r.result.scenario,
                                         "replication": r.replication, **r.metrics.as_dict()} for r in rr.runs])
    analysis = analyze([_window_dict(res, w) for res in results for w in res.windows], None)
    for sc in rr.scenarios():
        degrees = [rr.mean_degree(sc, n) for n in levels]
        rates = [rr.mean_share_rate(sc, n) for n in levels]
        analysis.lines.append(
            f"[{sc}] mean degree by level {dict(zip(levels, (round(d, 3) for d in degrees)))}; "
            f"degree reaches 1 at level {degree_threshold(levels, degrees)}; "
            f"share rate by level {dict(zip(levels, (round(s, 3) for s in rates)))}")
    write_analysis(out, analysis, svg=args.svg)
    for line in analysis.lines:
        print(line)
    print(f"bench finished in {time.perf_counter() - t0:.1f} s")
    return 0


def _window_dict(res: SimulationResult, w) -> dict:
    return {"scenario": res.scenario, "replication": res.replication, "vertices": w.vertices, "edges": w.edges,
            "avg_degree": w.avg_degree, "creation_s": w.creation_s, "matching_s": w.matching_s}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crossride", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, trips: bool = True):
        sp.add_argument("--config", help="YAML config file")
        if trips:
            sp.add_argument("--trips", help="trips CSV (overrides trips_file)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--scenario", choices=[c.value for c in ScenarioChoice])
        sp.add_argument("--mechanism", choices=["equal", "market", "shapley"])
        sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("simulate", help="run replications of the configured scenarios")
    common(sp)
    sp.add_argument("--replications", type=int)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="one-at-a-time parameter sweep")
    common(sp)
    sp.add_argument("--replications", type=int)
    sp.add_argument("--param", action="append", help="NAME=v1,v2,... (repeatable)")
    sp.add_argument("--spec", help="YAML mapping of parameter to values")
    sp.add_argument("--scenarios", nargs="+", default=list(SWEEP_SCENARIOS))
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("gen-demand", help="write a synthetic trips CSV")
    sp.add_argument("--config")
    sp.add_argument("--out", required=True, help="trips CSV path")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--spatial", default="uniform")
    sp.add_argument("--hotspot", action="append", help="ZONE:WEIGHT (repeatable)")
    sp.add_argument("--temporal", default="uniform")
    sp.add_argument("--horizon", type=float)
    sp.set_defaults(func=cmd_gen_demand)

    sp = sub.add_parser("oracle-check", help="compare the matcher with brute force")
    sp.add_argument("--cases", type=int, default=500)
    sp.add_argument("--max-nodes", type=int, default=10)
    sp.add_argument("--max-weight", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--greedy", action="store_true", help="check the greedy matcher instead (should fail)")
    sp.set_defaults(func=cmd_oracle_check)

    sp = sub.add_parser("analyze", help="fits and reports from a results directory")
    sp.add_argument("results")
    sp.add_argument("--out")
    sp.add_argument("--interval", type=float, default=10.0)
    sp.add_argument("--svg", action="store_true")
    sp.set_defaults(func=cmd_analyze)

    sp = sub.add_parser("bench", help="demand ramp with scaling and timing reports")
    common(sp, trips=False)
    sp.add_argument("--levels", default="25,50,100,200")
    sp.add_argument("--horizon", type=float, default=60.0)
    sp.add_argument("--ramp-replications", type=int, default=3)
    sp.add_argument("--svg", action="store_true")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (DataError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
