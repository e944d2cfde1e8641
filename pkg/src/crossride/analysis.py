"""Evaluation metrics, regression fits and the scaling reports."""
from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from crossride.engine import SimulationResult
from crossride.requests import RiderState


class InsufficientData(ValueError):
    pass


@dataclass
class MetricsReport:
    n_requests: int
    n_matched: int
    share_rate: float
    vmt_total: float
    vmt_per_rider: float
    platform_profit: dict[int, float]
    profit_change_pct: dict[int, float]
    avg_rider_savings: float
    savings_by_platform: dict[int, float]
    avg_detour: float
    avg_wait: float
    empty: bool = False

    def as_dict(self) -> dict[str, float]:
        out = {
            "n_requests": self.n_requests,
            "n_matched": self.n_matched,
            "share_rate": self.share_rate,
            "vmt_total": self.vmt_total,
            "vmt_per_rider": self.vmt_per_rider,
            "avg_rider_savings": self.avg_rider_savings,
            "avg_detour": self.avg_detour,
            "avg_wait": self.avg_wait,
            "total_profit": math.fsum(self.platform_profit.values()),
        }
        for k in sorted(self.platform_profit):
            out[f"profit_{k}"] = self.platform_profit[k]
            out[f"profit_change_pct_{k}"] = self.profit_change_pct.get(k, 0.0)
            out[f"savings_{k}"] = self.savings_by_platform.get(k, 0.0)
        return out


def compute_metrics(result: SimulationResult, baseline: SimulationResult | None = None) -> MetricsReport:
    """The six system metrics for one simulated day.

    Profit change is measured against ``baseline`` when given, otherwise
    against every request riding alone at the undiscounted fare.
    Savings are averaged over all requests, counting unmatched ones as zero.
    """
    riders = result.riders
    platforms = sorted(set(result.platforms) | {r.platform for r in riders})
    if not riders:
        zeros = dict.fromkeys(platforms, 0.0)
        return MetricsReport(0, 0, 0.0, 0.0, 0.0, dict(zeros), dict(zeros), 0.0, dict(zeros), 0.0, 0.0, empty=True)

    matched = [r for r in riders if r.state is RiderState.MATCHED]
    solo = [r for r in riders if r.state is RiderState.EXPIRED_SOLO]
    vmt = math.fsum([m.candidate.path.total_distance for m in result.matches]
                    + [r.direct_distance for r in solo])

    profit = result.platform_profit()
    base = baseline.platform_profit() if baseline is not None else result.baseline_profit()
    change = {k: (100.0 * (profit.get(k, 0.0) - base[k]) / base[k] if base.get(k) else 0.0) for k in platforms}

    savings = {r.id: (r.fare_single - r.fare_shared) if r.state is RiderState.MATCHED else 0.0 for r in riders}
    by_platform = {}
    for k in platforms:
        vals = [savings[r.id] for r in riders if r.platform == k]
        by_platform[k] = math.fsum(vals) / len(vals) if vals else 0.0

    detours = [r.in_trip_distance - r.direct_distance for r in matched]
    waits = [r.match_time - r.request_time for r in matched]
    return MetricsReport(
        n_requests=len(riders),
        n_matched=len(matched),
        share_rate=len(matched) / len(riders),
        vmt_total=vmt,
        vmt_per_rider=vmt / len(riders),
        platform_profit={k: profit.get(k, 0.0) for k in platforms},
        profit_change_pct=change,
        avg_rider_savings=math.fsum(savings.values()) / len(riders),
        savings_by_platform=by_platform,
        avg_detour=math.fsum(detours) / len(detours) if detours else 0.0,
        avg_wait=math.fsum(waits) / len(waits) if waits else 0.0,
    )


@dataclass(frozen=True)
class RegressionFit:
    slope: float
    intercept: float
    r_squared: float
    p_value: float
    n_points: int
    # kept for prediction bands
    x_mean: float = field(default=0.0, repr=False)
    sxx: float = field(default=0.0, repr=False)
    resid_var: float = field(default=0.0, repr=False)

    def predict(self, x) -> np.ndarray:
        return self.slope * np.asarray(x, dtype=float) + self.intercept

    def prediction_band(self, x, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
        """OLS prediction interval in the fitted (transformed) coordinates."""
        x = np.asarray(x, dtype=float)
        q = stats.t.ppf(0.5 + level / 2, self.n_points - 2)
        half = q * np.sqrt(self.resid_var * (1 + 1 / self.n_points + (x - self.x_mean) ** 2 / self.sxx))
        y = self.predict(x)
        return y - half, y + half


def _ols(x: np.ndarray, y: np.ndarray) -> RegressionFit:
    n = len(x)
    if n < 3:
        raise InsufficientData(f"need at least 3 points, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("regression inputs must be finite")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx <= 1e-300 * max(1.0, float(np.sum(x * x))):
        raise ValueError("regressor has no variance")
    sxy = float(np.sum((x - xm) * (y - ym)))
    syy = float(np.sum((y - ym) ** 2))
    slope = sxy / sxx
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    sse = float(np.sum(resid**2))
    df = n - 2
    if syy <= 1e-12 * max(1.0, float(np.sum(y * y))):
        # flat response: nothing to explain
        return RegressionFit(0.0 if abs(slope) < 1e-12 else slope, intercept, 0.0, 1.0, n, xm, sxx, sse / df)
    r2 = min(1.0, max(0.0, 1.0 - sse / syy))
    se = math.sqrt(sse / df / sxx)
    if se == 0.0:
        p = 0.0
    else:
        p = float(2 * stats.t.sf(abs(slope / se), df))
    return RegressionFit(slope, intercept, r2, p, n, xm, sxx, sse / df)


def fit_linear(x: Sequence[float], y: Sequence[float]) -> RegressionFit:
    return _ols(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def fit_log_linear(x: Sequence[float], y: Sequence[float]) -> RegressionFit:
    """Least squares of ``y = slope * log(x) + intercept``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("log-linear fit needs strictly positive x")
    return _ols(np.log(x), np.asarray(y, dtype=float))


def fit_power_law(n_vertices: Sequence[float], n_edges: Sequence[float]) -> RegressionFit:
    """Least squares of ``log(edges) = slope * log(vertices) + intercept``."""
    v = np.asarray(n_vertices, dtype=float)
    e = np.asarray(n_edges, dtype=float)
    if np.any(v <= 0) or np.any(e <= 0):
        raise ValueError("power-law fit needs strictly positive counts")
    return _ols(np.log(v), np.log(e))


@dataclass(frozen=True)
class QuadraticFit:
    beta2: float
    beta1: float
    intercept: float
    r_squared: float
    p_value: float
    n_points: int


def fit_quadratic(x: Sequence[float], y: Sequence[float]) -> QuadraticFit:
    """``y = beta2 x^2 + beta1 x + intercept`` with an overall F-test p-value."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    if n < 4:
        raise InsufficientData(f"quadratic fit needs at least 4 points, got {n}")
    X = np.column_stack([x**2, x, np.ones(n)])
    if np.linalg.matrix_rank(X) < 3:
        raise ValueError("quadratic fit needs at least three distinct x values")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    sse = float(resid @ resid)
    syy = float(np.sum((y - y.mean()) ** 2))
    if syy == 0.0:
        return QuadraticFit(*map(float, coef), 0.0, 1.0, n)
    r2 = min(1.0, max(0.0, 1.0 - sse / syy))
    df_model, df_resid = 2, n - 3
    if sse <= 1e-24 * syy:
        p = 0.0
    else:
        f = ((syy - sse) / df_model) / (sse / df_resid)
        p = float(stats.f.sf(f, df_model, df_resid))
    return QuadraticFit(float(coef[0]), float(coef[1]), float(coef[2]), r2, p, n)


# --------------------------------------------------------------------------
# interval aggregation


@dataclass(frozen=True)
class IntervalPoint:
    start: float
    requests: int
    share_rate: float
    vmt_per_rider: float
    avg_wait: float
    avg_detour: float


def interval_series(result: SimulationResult, interval: float = 10.0) -> list[IntervalPoint]:
    """Per-interval request counts and outcomes, keyed by request time."""
    bins: dict[int, list] = defaultdict(list)
    for r in result.riders:
        bins[int(r.request_time // interval)].append(r)
    out = []
    for b in sorted(bins):
        rs = bins[b]
        matched = [r for r in rs if r.state is RiderState.MATCHED]
        # a shared route is split evenly between its two riders
        vmt = math.fsum((r.shared_distance / 2 if r.state is RiderState.MATCHED else r.direct_distance) for r in rs)
        out.append(IntervalPoint(
            start=b * interval,
            requests=len(rs),
            share_rate=len(matched) / len(rs),
            vmt_per_rider=vmt / len(rs),
            avg_wait=math.fsum(r.match_time - r.request_time for r in matched) / len(matched) if matched else 0.0,
            avg_detour=math.fsum(r.in_trip_distance - r.direct_distance for r in matched) / len(matched) if matched else 0.0,
        ))
    return out


# --------------------------------------------------------------------------
# scaling reports


@dataclass
class DensificationRow:
    scenario: str
    edge_growth: RegressionFit
    degree: RegressionFit
    degree_one_at: float | None
    used_windows: int
    excluded_windows: int


def degree_threshold(levels: Sequence[float], mean_degrees: Sequence[float], target: float = 1.0) -> float:
    """First level whose mean average degree reaches ``target`` (``inf`` if none does)."""
    for n, d in sorted(zip(levels, mean_degrees)):
        if d >= target:
            return n
    return math.inf


def densification_report(
    per_scenario: Mapping[str, Iterable[tuple[int, int, float]]],
) -> list[DensificationRow]:
    """Edge-growth and degree fits per scenario from ``(vertices, edges, avg_degree)`` windows.

    Windows without vertices or edges are left out of the log fits and
    counted in ``excluded_windows``. ``degree_one_at`` is the vertex count
    where the fitted degree line reaches 1.
    """
    rows = []
    for scenario, windows in per_scenario.items():
        windows = list(windows)
        usable = [(v, e) for v, e, _ in windows if v > 0 and e > 0]
        if len(usable) < 3:
            raise InsufficientData(f"{scenario}: only {len(usable)} windows with edges")
        growth = fit_power_law([v for v, _ in usable], [e for _, e in usable])
        deg_points = [(v, d) for v, _, d in windows if v > 0]
        degree = fit_log_linear([v for v, _ in deg_points], [d for _, d in deg_points])
        cross = math.exp((1.0 - degree.intercept) / degree.slope) if degree.slope > 0 else None
        rows.append(DensificationRow(scenario, growth, degree, cross, len(usable), len(windows) - len(usable)))
    return rows


@dataclass
class TimingRow:
    scenario: str
    creation: QuadraticFit
    matching: RegressionFit
    n_windows: int


def timing_report(per_scenario: Mapping[str, Iterable[tuple[int, int, float, float]]]) -> list[TimingRow]:
    """Quadratic creation-time fit and linear matching-time fit per scenario.

    Input windows are ``(vertices, edges, creation_seconds, matching_seconds)``.
    Matching time is regressed on ``V * E * log V``.
    """
    rows = []
    for scenario, windows in per_scenario.items():
        windows = [w for w in windows if w[0] > 0]
        if len(windows) < 4:
            raise InsufficientData(f"{scenario}: timing fit needs at least 4 windows, got {len(windows)}")
        v = np.array([w[0] for w in windows], dtype=float)
        e = np.array([w[1] for w in windows], dtype=float)
        creation = fit_quadratic(v, [w[2] for w in windows])
        composite = v * e * np.log(np.maximum(v, 1.0))
        matching = fit_linear(composite, [w[3] for w in windows])
        rows.append(TimingRow(scenario, creation, matching, len(windows)))
    return rows
