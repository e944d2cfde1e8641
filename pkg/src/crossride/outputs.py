"""CSV and manifest writers/readers for simulation outputs.

Floats are written with ``repr`` so reruns produce byte-identical files.
Every file is written to a temporary name and renamed into place.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
import tempfile
from collections.abc import Iterable, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import Any

from crossride import __version__
from crossride.engine import SimulationResult
from crossride.errors import DataError
from crossride.shareability import SEQUENCE_LABELS

RIDER_COLUMNS = (
    "scenario", "replication", "id", "platform", "request_time", "origin", "dest",
    "direct_distance", "state", "match_time", "wait", "partner", "in_trip_distance",
    "shared_distance", "sequence", "fare_paid", "profit_share",
)
WINDOW_COLUMNS = (
    "scenario", "replication", "t", "arrivals", "active", "vertices", "edges", "avg_degree",
    "matched_pairs", "matching_weight", "pair_profit", "creation_s", "matching_s",
)


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@contextmanager
def atomic_open(path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_rows(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with atomic_open(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def rider_rows(result: SimulationResult) -> Iterable[list[Any]]:
    for r in sorted(result.riders, key=lambda r: r.id):
        matched = r.match_time is not None and r.partner is not None
        yield [
            result.scenario, result.replication, r.id, r.platform, float(r.request_time), r.origin, r.dest,
            float(r.direct_distance), r.state.value, r.match_time,
            (r.match_time - r.request_time) if matched else None, r.partner,
            r.in_trip_distance, r.shared_distance,
            SEQUENCE_LABELS[r.sequence] if r.sequence is not None else None,
            r.fare_shared if matched else r.fare_single, float(r.profit_share),
        ]


def window_rows(result: SimulationResult) -> Iterable[list[Any]]:
    for w in result.windows:
        yield [
            result.scenario, result.replication, float(w.t), w.arrivals, w.active, w.vertices, w.edges,
            float(w.avg_degree), w.matched_pairs, float(w.matching_weight), float(w.pair_profit),
            w.creation_s, w.matching_s,
        ]


def write_riders(path: str | Path, results: Sequence[SimulationResult]) -> None:
    write_rows(path, RIDER_COLUMNS, (row for res in results for row in rider_rows(res)))


def write_windows(path: str | Path, results: Sequence[SimulationResult]) -> None:
    write_rows(path, WINDOW_COLUMNS, (row for res in results for row in window_rows(res)))


def write_metrics(path: str | Path, rows: Sequence[dict[str, Any]]) -> None:
    columns: list[str] = []
    for row in rows:
        columns.extend(k for k in row if k not in columns)
    write_rows(path, columns, ([row.get(c) for c in columns] for row in rows))


# --------------------------------------------------------------------------
# readers


def read_table(path: str | Path, required: Sequence[str], types: dict[str, type]) -> list[dict[str, Any]]:
    """Typed rows of a CSV; any malformed line raises ``DataError`` with file and line."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: file not found")
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise DataError(f"{path}:1: missing column(s) {', '.join(missing)}")
        for row in reader:
            if None in row or any(v is None for v in row.values()):
                raise DataError(f"{path}:{reader.line_num}: wrong number of fields")
            typed = {}
            for k, v in row.items():
                cast = types.get(k, str)
                if v == "" and cast is not str:
                    typed[k] = None
                    continue
                try:
                    typed[k] = cast(v)
                except ValueError:
                    raise DataError(f"{path}:{reader.line_num}: bad value {v!r} in column {k!r}") from None
            out.append(typed)
    return out


WINDOW_TYPES = {
    "replication": int, "t": float, "arrivals": int, "active": int, "vertices": int, "edges": int,
    "avg_degree": float, "matched_pairs": int, "matching_weight": float, "pair_profit": float,
    "creation_s": float, "matching_s": float,
}
RIDER_TYPES = {
    "replication": int, "id": int, "platform": int, "request_time": float, "origin": int, "dest": int,
    "direct_distance": float, "match_time": float, "wait": float, "partner": int,
    "in_trip_distance": float, "shared_distance": float, "fare_paid": float, "profit_share": float,
}


def read_windows(path: str | Path) -> list[dict[str, Any]]:
    return read_table(path, WINDOW_COLUMNS, WINDOW_TYPES)


def read_riders(path: str | Path) -> list[dict[str, Any]]:
    return read_table(path, RIDER_COLUMNS, RIDER_TYPES)


# --------------------------------------------------------------------------
# manifest


def sha256_of(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    out_dir: str | Path,
    config: dict[str, Any],
    inputs: dict[str, str | Path | None],
    seeds: Sequence[Any],
    command: str,
) -> Path:
    out_dir = Path(out_dir)
    manifest = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": {k: {"path": str(p), "sha256": sha256_of(p)} for k, p in sorted(inputs.items()) if p},
        "seeds": list(seeds),
        "output_dir": str(out_dir),
    }
    path = out_dir / "manifest.json"
    with atomic_open(path) as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}: {exc.msg}") from None
