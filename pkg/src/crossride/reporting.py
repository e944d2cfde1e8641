"""Post-hoc analysis of result files: fits.csv, report.txt and optional SVG charts."""
from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from crossride.analysis import (
    InsufficientData,
    RegressionFit,
    densification_report,
    fit_log_linear,
    timing_report,
)
from crossride.outputs import atomic_open, write_metrics

FIT_COLUMNS = ("scenario", "model", "x", "y", "slope", "intercept", "beta2", "r_squared", "p_value",
               "n_points", "note")


@dataclass
class AnalysisOutput:
    fits: list[dict[str, Any]] = field(default_factory=list)
    lines: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    series: dict[str, dict[str, list[tuple[float, float]]]] = field(default_factory=dict)

    def add_fit(self, scenario: str, model: str, x: str, y: str, fit, note: str = "") -> None:
        beta2 = getattr(fit, "beta2", None)
        slope = fit.beta1 if beta2 is not None else fit.slope
        self.fits.append({
            "scenario": scenario, "model": model, "x": x, "y": y, "slope": float(slope),
            "intercept": float(fit.intercept), "beta2": beta2, "r_squared": float(fit.r_squared),
            "p_value": float(fit.p_value), "n_points": fit.n_points, "note": note,
        })


def interval_points(riders: Sequence[dict[str, Any]], interval: float) -> dict[str, list[tuple[int, float]]]:
    """``(requests, share rate)`` per interval, per scenario, pooled over replications."""
    bins: dict[tuple[str, int, int], list[bool]] = defaultdict(list)
    for r in riders:
        key = (r["scenario"], r["replication"], int(r["request_time"] // interval))
        bins[key].append(r["state"] == "matched")
    out: dict[str, list[tuple[int, float]]] = defaultdict(list)
    for (scenario, _, _), flags in sorted(bins.items()):
        out[scenario].append((len(flags), sum(flags) / len(flags)))
    return dict(out)


def _describe(fit: RegressionFit) -> str:
    return f"slope={fit.slope:.4g} intercept={fit.intercept:.4g} R2={fit.r_squared:.4f} p={fit.p_value:.3g} n={fit.n_points}"


def analyze(windows: Sequence[dict[str, Any]], riders: Sequence[dict[str, Any]] | None = None,
            interval: float = 10.0) -> AnalysisOutput:
    out = AnalysisOutput()
    by_scenario: dict[str, list[dict[str, Any]]] = defaultdict(list)
    for w in windows:
        by_scenario[w["scenario"]].append(w)

    for scenario in sorted(by_scenario):
        ws = by_scenario[scenario]
        out.lines.append(f"[{scenario}] {len(ws)} windows")
        out.series.setdefault(scenario, {})["edges"] = [(w["vertices"], w["edges"]) for w in ws]
        try:
            row = densification_report({scenario: [(w["vertices"], w["edges"], w["avg_degree"]) for w in ws]})[0]
        except (InsufficientData, ValueError) as exc:
            out.warnings.append(f"{scenario}: densification skipped: {exc}")
        else:
            note = f"excluded_windows={row.excluded_windows}"
            out.add_fit(scenario, "power-law", "log vertices", "log edges", row.edge_growth, note)
            cross = "" if row.degree_one_at is None else f"degree_one_at={row.degree_one_at:.2f}"
            out.add_fit(scenario, "log-linear", "log vertices", "avg degree", row.degree, cross)
            out.lines.append(f"  edges ~ vertices^a: {_describe(row.edge_growth)} ({note})")
            out.lines.append(f"  degree ~ log vertices: {_describe(row.degree)}"
                             + (f"; degree reaches 1 near {row.degree_one_at:.1f} vertices" if cross else ""))
        try:
            trow = timing_report({scenario: [(w["vertices"], w["edges"], w["creation_s"], w["matching_s"])
                                             for w in ws]})[0]
        except (InsufficientData, ValueError) as exc:
            out.warnings.append(f"{scenario}: timing fit skipped: {exc}")
        else:
            c, m = trow.creation, trow.matching
            out.add_fit(scenario, "quadratic", "vertices", "creation seconds", c)
            out.add_fit(scenario, "linear", "V*E*log V", "matching seconds", m)
            out.lines.append(f"  creation time: b2={c.beta2:.3g} b1={c.beta1:.3g} a={c.intercept:.3g} "
                             f"R2={c.r_squared:.4f} p={c.p_value:.3g}")
            out.lines.append(f"  matching time: {_describe(m)}")

    if riders:
        for scenario, pts in sorted(interval_points(riders, interval).items()):
            out.series.setdefault(scenario, {})["share_rate"] = [(float(n), s) for n, s in pts]
            try:
                fit = fit_log_linear([n for n, _ in pts], [s for _, s in pts])
            except (InsufficientData, ValueError) as exc:
                out.warnings.append(f"{scenario}: share-rate fit skipped: {exc}")
                continue
            out.add_fit(scenario, "log-linear", "log requests per interval", "share rate", fit,
                        f"interval={interval:g}")
            out.lines.append(f"[{scenario}] share rate ~ log requests per {interval:g} min: {_describe(fit)}")
    return out


def write_analysis(out_dir: str | Path, result: AnalysisOutput, svg: bool = False) -> list[Path]:
    out_dir = Path(out_dir)
    fits_path = out_dir / "fits.csv"
    write_metrics(fits_path, result.fits) if result.fits else _empty_fits(fits_path)
    report_path = out_dir / "report.txt"
    with atomic_open(report_path) as fh:
        for line in result.lines:
            fh.write(line + "\n")
        for w in result.warnings:
            fh.write(f"warning: {w}\n")
    paths = [fits_path, report_path]
    if svg:
        paths.extend(write_svgs(out_dir, result))
    return paths


def _empty_fits(path: Path) -> None:
    with atomic_open(path) as fh:
        fh.write(",".join(FIT_COLUMNS) + "\n")


def write_svgs(out_dir: Path, result: AnalysisOutput) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    for kind, xlabel, ylabel, logx in (("edges", "vertices", "edges", True),
                                        ("share_rate", "requests per interval", "share rate", True)):
        fig, ax = plt.subplots(figsize=(6, 4))
        drawn = False
        for scenario, series in sorted(result.series.items()):
            pts = sorted(p for p in series.get(kind, []) if p[0] > 0 and (kind != "edges" or p[1] > 0))
            if pts:
                ax.plot([p[0] for p in pts], [p[1] for p in pts], ".", label=scenario, alpha=0.6)
                drawn = True
        if not drawn:
            plt.close(fig)
            continue
        if logx:
            ax.set_xscale("log")
        if kind == "edges":
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=7)
        path = out_dir / f"{kind}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def metric_rows(results_metrics: Sequence[tuple[str, int, dict[str, float]]]) -> list[dict[str, Any]]:
    rows = []
    for scenario, rep, metrics in results_metrics:
        row: dict[str, Any] = {"scenario": scenario, "replication": rep}
        row.update({k: (v if not isinstance(v, float) or math.isfinite(v) else None) for k, v in metrics.items()})
        rows.append(row)
    return rows
