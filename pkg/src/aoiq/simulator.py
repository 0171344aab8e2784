"""Discrete-event simulation of the multi-source FCFS M/GI/1 queue.

Departure epochs are computed from the exact single-server FCFS
recursion d_n = max(d_{n-1}, a_n) + s_n, evaluated in vectorized form
via prefix sums and a running maximum; this reproduces the event-driven
sample path exactly (ties between a departure and an arrival resolve as
departure first, which is what max() encodes).  Per-class age sample
paths are piecewise linear, so time averages and fraction-of-time CDFs
are integrated in closed form per segment rather than discretized.

Streams are derived per (replication, class, purpose) from the base seed,
so results are bit-identical for identical inputs and every class keeps
an independent stream per purpose.
"""

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.stats import t as student_t

from .errors import SimulationError
from .model import SystemModel, validate

# Tolerance scale for the per-packet peak = delay + gap bookkeeping check.
_PATH_CHECK_ULPS = 64


class Estimate(NamedTuple):
    """Point estimate with a 95% confidence half-width (NaN for one rep)."""

    value: float
    ci_halfwidth: float


@dataclass(frozen=True)
class SimConfig:
    """Simulation horizon, replication, seeding, and CDF grid options."""

    horizon: float
    replications: int = 10
    warmup_fraction: float = 0.1
    base_seed: int = 12345
    cdf_grids: object = None  # ndarray shared by all classes, or sequence per class
    keep_path: bool = False

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValueError(f"horizon must be > 0, got {self.horizon}")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ValueError(
                f"warmup_fraction must be in [0, 1), got {self.warmup_fraction}"
            )


@dataclass(frozen=True)
class ClassStats:
    """Aggregated per-class estimates across replications."""

    time_avg_aoi: Estimate
    mean_delay: Estimate
    mean_peak_aoi: Estimate
    mean_gap: Estimate
    delivery_rate: Estimate
    updates: int


@dataclass(frozen=True)
class SimulationResult:
    """Per-class statistics, pooled empirical CDFs, and seed provenance."""

    classes: tuple[ClassStats, ...]
    busy_fraction: Estimate
    cdf_grids: tuple
    cdf_values: tuple
    base_seed: int
    replications: int
    horizon: float
    warmup_fraction: float
    observed_time: float
    paths: tuple = field(default=None, repr=False)


def _stream(base_seed: int, rep: int, cls: int, purpose: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(rep, cls, purpose))
    return np.random.default_rng(seq)


def _poisson_arrivals(rng: np.random.Generator, rate: float, horizon: float) -> np.ndarray:
    approx = rate * horizon
    count = int(approx + 10.0 * math.sqrt(approx) + 16.0)
    times = np.cumsum(rng.exponential(1.0 / rate, count))
    while times[-1] < horizon:
        extra = np.cumsum(rng.exponential(1.0 / rate, max(1024, count // 10)))
        times = np.concatenate([times, times[-1] + extra])
    return times[times < horizon]


def _occupation(starts: np.ndarray, lengths: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Total time a piecewise-linear unit-slope path spends at or below x.

    Each segment rises from value starts[i] for lengths[i] time units; its
    time at or below x is clip(x - starts[i], 0, lengths[i]), summed here
    with sorted prefix sums instead of a segments-by-grid product.
    """
    ends = starts + lengths
    sort_s = np.sort(starts)
    cum_s = np.concatenate([[0.0], np.cumsum(sort_s)])
    order_e = np.argsort(ends, kind="stable")
    sort_e = ends[order_e]
    cum_len_e = np.concatenate([[0.0], np.cumsum(lengths[order_e])])
    cum_s_e = np.concatenate([[0.0], np.cumsum(starts[order_e])])
    n_started = np.searchsorted(sort_s, x, side="right")
    n_ended = np.searchsorted(sort_e, x, side="right")
    return (
        cum_len_e[n_ended]
        + x * (n_started - n_ended)
        - (cum_s[n_started] - cum_s_e[n_ended])
    )


def _replication(model: SystemModel, cfg: SimConfig, rep: int, grids):
    horizon = cfg.horizon
    t0 = cfg.warmup_fraction * horizon
    k_count = model.num_classes

    arrivals = []
    for k, cls in enumerate(model.classes):
        arrivals.append(
            _poisson_arrivals(_stream(cfg.base_seed, rep, k, 0), cls.arrival_rate, horizon)
        )

    t_all = np.concatenate(arrivals)
    c_all = np.concatenate(
        [np.full(a.size, k, dtype=np.int32) for k, a in enumerate(arrivals)]
    )
    order = np.lexsort((c_all, t_all))  # time first; class index breaks exact ties
    t_all = t_all[order]
    c_all = c_all[order]

    services = np.empty(t_all.size, dtype=float)
    for k, cls in enumerate(model.classes):
        mask = c_all == k
        services[mask] = cls.service.sample(_stream(cfg.base_seed, rep, k, 1), int(mask.sum()))

    served_prefix = np.cumsum(services)
    departures = served_prefix + np.maximum.accumulate(t_all - (served_prefix - services))
    # FCFS: delivery order equals arrival order.
    assert np.all(np.diff(departures) >= 0.0)

    window = horizon - t0
    service_starts = departures - services
    busy = float(
        np.clip(np.minimum(departures, horizon) - np.maximum(service_starts, t0), 0.0, None).sum()
    )

    path_tol = _PATH_CHECK_ULPS * np.finfo(float).eps * max(horizon, 1.0)
    per_class = []
    occupations = []
    segments = []
    for k in range(k_count):
        alpha = arrivals[k]
        beta = departures[c_all == k]
        delivered = np.flatnonzero(beta <= horizon)
        in_window = delivered[beta[delivered] > t0]
        if in_window.size == 0:
            raise SimulationError(
                f"horizon too short: class {k} delivered no packets after warmup "
                f"in replication {rep}"
            )
        first = in_window[0]
        prior = delivered[delivered < first]
        eta0 = alpha[prior[-1]] if prior.size else 0.0

        updates = beta[in_window]
        delays = updates - alpha[in_window]
        prev_gen = np.where(in_window > 0, alpha[np.maximum(in_window - 1, 0)], 0.0)
        peaks = updates - prev_gen
        gaps = alpha[in_window] - prev_gen
        # Per-packet bookkeeping self-check: age just before an update must
        # equal that packet's delay plus its generation gap.
        assert float(np.max(np.abs(peaks - (delays + gaps)))) <= path_tol

        starts = np.concatenate([[t0 - eta0], delays])
        bounds = np.concatenate([[t0], updates, [horizon]])
        lengths = np.diff(bounds)
        time_avg = float((lengths * starts + 0.5 * lengths**2).sum() / window)

        per_class.append(
            {
                "time_avg_aoi": time_avg,
                "mean_delay": float(delays.mean()),
                "mean_peak_aoi": float(peaks.mean()),
                "mean_gap": float(gaps.mean()),
                "delivery_rate": in_window.size / window,
                "updates": int(in_window.size),
            }
        )
        occupations.append(
            _occupation(starts, lengths, grids[k]) if grids[k] is not None else None
        )
        segments.append((starts, lengths) if cfg.keep_path else None)

    return per_class, busy / window, occupations, segments, window


def _estimate(values: list[float]) -> Estimate:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return Estimate(mean, float("nan"))
    halfwidth = float(
        student_t.ppf(0.975, arr.size - 1) * arr.std(ddof=1) / math.sqrt(arr.size)
    )
    return Estimate(mean, halfwidth)


def _normalize_grids(cfg: SimConfig, k_count: int) -> list:
    raw = cfg.cdf_grids
    if raw is None:
        return [None] * k_count
    if isinstance(raw, np.ndarray):
        return [np.asarray(raw, dtype=float)] * k_count
    grids = list(raw)
    if len(grids) != k_count:
        raise ValueError(f"expected {k_count} CDF grids, got {len(grids)}")
    return [None if g is None else np.asarray(g, dtype=float) for g in grids]


def simulate(model: SystemModel, cfg: SimConfig) -> SimulationResult:
    """Run independent replications and aggregate with Student-t intervals.

    Raises SimulationError when some class delivers nothing after warmup.
    """
    model = validate(model)
    k_count = model.num_classes
    grids = _normalize_grids(cfg, k_count)

    metrics = [
        {m: [] for m in ("time_avg_aoi", "mean_delay", "mean_peak_aoi", "mean_gap", "delivery_rate")}
        for _ in range(k_count)
    ]
    update_totals = [0] * k_count
    busy_values = []
    occ_totals = [None if g is None else np.zeros_like(g) for g in grids]
    path_starts = [[] for _ in range(k_count)]
    path_lengths = [[] for _ in range(k_count)]
    observed = 0.0

    for rep in range(cfg.replications):
        per_class, busy, occupations, segments, window = _replication(model, cfg, rep, grids)
        busy_values.append(busy)
        observed += window
        for k in range(k_count):
            for m in metrics[k]:
                metrics[k][m].append(per_class[k][m])
            update_totals[k] += per_class[k]["updates"]
            if occupations[k] is not None:
                occ_totals[k] += occupations[k]
            if segments[k] is not None:
                path_starts[k].append(segments[k][0])
                path_lengths[k].append(segments[k][1])

    classes = tuple(
        ClassStats(
            time_avg_aoi=_estimate(metrics[k]["time_avg_aoi"]),
            mean_delay=_estimate(metrics[k]["mean_delay"]),
            mean_peak_aoi=_estimate(metrics[k]["mean_peak_aoi"]),
            mean_gap=_estimate(metrics[k]["mean_gap"]),
            delivery_rate=_estimate(metrics[k]["delivery_rate"]),
            updates=update_totals[k],
        )
        for k in range(k_count)
    )
    cdf_values = tuple(
        None if occ_totals[k] is None else occ_totals[k] / observed for k in range(k_count)
    )
    paths = None
    if cfg.keep_path:
        paths = tuple(
            (np.concatenate(path_starts[k]), np.concatenate(path_lengths[k]))
            for k in range(k_count)
        )
    return SimulationResult(
        classes=classes,
        busy_fraction=_estimate(busy_values),
        cdf_grids=tuple(grids),
        cdf_values=cdf_values,
        base_seed=cfg.base_seed,
        replications=cfg.replications,
        horizon=cfg.horizon,
        warmup_fraction=cfg.warmup_fraction,
        observed_time=observed,
        paths=paths,
    )


def empirical_aoi_cdf(result: SimulationResult, class_index: int, x) -> np.ndarray:
    """Fraction of observed time the class's age spent at or below each x.

    Requires at least 1000 update epochs for the class.  With keep_path
    the value is computed exactly for arbitrary grids; otherwise the grid
    must consist of points of the configured CDF grid.
    """
    stats = result.classes[class_index]
    if stats.updates < 1000:
        raise SimulationError(
            f"class {class_index} produced {stats.updates} update epochs; "
            "need at least 1000 for a CDF estimate"
        )
    grid = np.asarray(x, dtype=float)
    if np.any(grid < 0):
        raise ValueError("CDF grid values must be >= 0")
    if result.paths is not None:
        starts, lengths = result.paths[class_index]
        return _occupation(starts, lengths, grid) / result.observed_time
    stored = result.cdf_grids[class_index]
    if stored is None:
        raise ValueError(
            f"no CDF data stored for class {class_index}; "
            "configure cdf_grids or keep_path in SimConfig"
        )
    idx = np.searchsorted(stored, grid)
    idx = np.clip(idx, 0, stored.size - 1)
    left = np.clip(idx - 1, 0, stored.size - 1)
    use_left = np.abs(stored[left] - grid) < np.abs(stored[idx] - grid)
    idx = np.where(use_left, left, idx)
    tol = np.maximum(1e-9 * np.abs(grid), 1e-12)
    if np.any(np.abs(stored[idx] - grid) > tol):
        raise ValueError(
            "requested grid points are not part of the stored CDF grid; "
            "re-run with keep_path=True for arbitrary grids"
        )
    return result.cdf_values[class_index][idx]
