"""Regenerate the bundled desk scenario under data/desk/."""
import argparse
from pathlib import Path

import yaml

from crossride.geo import grid_network, write_network
from crossride.requests import TemporalProfile, gen_synthetic_demand, write_trips

CONFIG = {
    "horizon": 1440,
    "epsilon": 5,
    "step": 5,
    "tau": 10,
    "gamma": 0.2,
    "beta": 0.1,
    "o": 0.5,
    "mu": 2,
    "alpha_d": 2,
    "alpha_t": 0.5,
    "speed_mph": 15,
    "psi": 0.5,
    "shares": [0.58, 0.42],
    "mechanism": "shapley",
    "scenario": "all",
    "replications": 5,
    "seed": 7,
    "nodes_file": "nodes.csv",
    "edges_file": "edges.csv",
    "zones_file": "zones.csv",
    "trips_file": "trips.csv",
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=Path(__file__).resolve().parents[1] / "data" / "desk", type=Path)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    net = grid_network(20, 20, 0.25, jitter=0.3, seed=args.seed)
    write_network(net, args.out)
    temporal = TemporalProfile("peaked", horizon=1440.0, peaks=(480.0, 1080.0), spread=45.0, background=0.2)
    reqs = gen_synthetic_demand(args.n, net, temporal=temporal, seed=args.seed)
    write_trips(reqs, args.out / "trips.csv")
    with open(args.out / "config.yaml", "w", encoding="utf-8") as fh:
        fh.write("# desk-scale day: 400 synthetic requests on a 20x20 jittered grid\n")
        yaml.safe_dump(CONFIG, fh, sort_keys=False)
    print(f"wrote desk scenario to {args.out}")


if __name__ == "__main__":
    main()
