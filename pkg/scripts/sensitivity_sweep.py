"""One-at-a-time sensitivity sweep over discount, detour and wait limits.

Runs on the bundled desk scenario by default and writes a long-format
sweep.csv plus a per-cell mean table to stdout.
"""
import argparse
import csv
from collections import defaultdict
from pathlib import Path

from crossride.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]
GRID = {
    "beta": "0,0.1,0.2,0.3",
    "gamma": "0.2,0.4,0.6,0.8",
    "tau": "5,10,15,20",
}


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "data" / "desk" / "config.yaml"))
    ap.add_argument("--out", default="results/sweep")
    ap.add_argument("--replications", type=int, default=5)
    ap.add_argument("--metric", default="share_rate")
    args = ap.parse_args()

    argv = ["-v", "sweep", "--config", args.config, "--out", args.out, "--replications", str(args.replications)]
    for name, values in GRID.items():
        argv += ["--param", f"{name}={values}"]
    code = cli_main(argv)
    if code:
        raise SystemExit(code)

    cells = defaultdict(list)
    with open(Path(args.out) / "sweep.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            if row["metric"] == args.metric:
                cells[(row["parameter"], float(row["value"]), row["scenario"])].append(float(row["metric_value"]))
    for (param, value, scenario), vals in sorted(cells.items()):
        print(f"{param:>6} {value:6.2f} {scenario:<22} mean {args.metric} {sum(vals) / len(vals):.4f}")


if __name__ == "__main__":
    main()
