"""Forward simulation of activeness as superposed decaying Poisson streams.

Every observed action and every simulated event contributes, per reachable
node, one stream with rate A * exp(-(t - anchor)/tau). A stream's total
remaining mass is finite, so next-event times sample exactly by inverting the
integrated rate, with no thinning and no discretization. A run merges all
live streams through a priority queue holding one pending event per stream.
"""

from __future__ import annotations

import heapq
import io
import math
from dataclasses import dataclass

import numpy as np

from .core import AggregateSeries, IntervalGrid, Trend, longest_run_above
from .proximity import ProximityMap
from .activeness import ActivenessParams

# spawn_key name spaces for derived generators; run streams use 2-tuples
# (run_index, stream_id), so 1-tuples here can never collide with them.
_SEED_PICK_KEY = 2**61

_CSV_HEADER = "interval_index,t_min,t_max,intensity_mean,intensity_cv,coverage_mean,coverage_cv"


class ExplosionError(RuntimeError):
    """A run exceeded the hard event cap; parameters are likely supercritical."""


@dataclass(frozen=True)
class DecayingStream:
    """Poisson stream on ``node`` with rate coefficient * exp(-(t - anchor)/tau)."""

    node: int
    coefficient: float
    anchor: float
    tau: float


@dataclass(frozen=True)
class SimConfig:
    """Horizon, run count, and root seed for Monte Carlo prediction."""

    t_start: float
    t_end: float
    runs: int = 1
    seed: int = 0
    max_events: int = 10_000_000
    mass_floor: float = 1e-12

    def __post_init__(self) -> None:
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.max_events < 1:
            raise ValueError("max_events must be positive")


def sample_next(stream: DecayingStream, after: float, u: float) -> float | None:
    """Next event time strictly from ``after``, or None when the stream is exhausted.

    Inverts the integrated rate: with e = -log(1 - u) an Exp(1) draw, the
    stream fires iff e is below its remaining mass
    coefficient * tau * exp(-(after - anchor)/tau).
    """
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    decay = math.exp(-(after - stream.anchor) / stream.tau)
    mass = stream.coefficient * stream.tau * decay
    e = -math.log1p(-u)
    if e >= mass:
        return None
    inner = decay - e / (stream.coefficient * stream.tau)
    if inner <= 0.0:
        return None
    return stream.anchor - stream.tau * math.log(inner)


def _stream_rng(seed: int, run_index: int, stream_id: int) -> np.random.Generator:
    # Counter-derived generator per stream: a run's realization does not
    # depend on processing order, and parallel runs stay deterministic.
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(run_index, stream_id)))


def derived_rng(seed: int, key: int) -> np.random.Generator:
    """Named auxiliary generator (seed picking, jitter) off the same root seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


def init_streams(
    trend: Trend,
    prox: ProximityMap,
    params: ActivenessParams,
    t_start: float,
    node_count: int,
    mass_floor: float = 1e-12,
) -> list[DecayingStream]:
    """Streams carrying the observed prefix past t_start.

    One stream per (observed action, reachable node) holding the action's
    decayed influence at t_start, plus one residual stream per graph node.
    Streams whose total mass falls below ``mass_floor`` are dropped.
    """
    tau = params.tau
    streams: list[DecayingStream] = []
    for u, t_i in trend.prefix(t_start):
        decay = math.exp(-(t_start - t_i) / tau) if (t_start - t_i) / tau <= 700.0 else 0.0
        scale = params.alpha * decay
        if scale <= 0.0:
            continue
        for v, score in prox.row(u).items():
            coeff = scale * score
            if coeff * tau >= mass_floor:
                streams.append(DecayingStream(v, coeff, t_start, tau))
    residual = params.epsilon * math.exp(-(t_start - params.t0) / tau)
    if residual * tau >= mass_floor:
        for v in range(node_count):
            streams.append(DecayingStream(v, residual, t_start, tau))
    return streams


@dataclass(frozen=True)
class RunStats:
    events: int
    child_events: int

    @property
    def branching_ratio(self) -> float:
        """Fraction of events generated by event-spawned streams."""
        return self.child_events / self.events if self.events else math.nan


def simulate(
    streams: list[DecayingStream],
    prox: ProximityMap,
    params: ActivenessParams,
    config: SimConfig,
    run_index: int = 0,
) -> tuple[Trend, RunStats]:
    """One run: realize all streams on [t_start, t_end), spawning per event.

    Each realized event (v, t) adds, for every node reachable from v, a new
    stream with coefficient alpha * prox(v, .) anchored at t. Runs past
    ``config.max_events`` abort with ExplosionError.
    """
    heap: list[tuple[float, int, DecayingStream, np.random.Generator, bool]] = []
    next_id = 0

    def admit(stream: DecayingStream, after: float, is_child: bool) -> None:
        nonlocal next_id
        rng = _stream_rng(config.seed, run_index, next_id)
        next_id += 1
        t = sample_next(stream, after, rng.random())
        if t is not None and t < config.t_end:
            heapq.heappush(heap, (t, next_id - 1, stream, rng, is_child))

    for stream in streams:
        admit(stream, stream.anchor, False)

    ev_nodes: list[int] = []
    ev_times: list[float] = []
    child_events = 0
    tau = params.tau
    while heap:
        t, sid, stream, rng, is_child = heapq.heappop(heap)
        if len(ev_nodes) >= config.max_events:
            raise ExplosionError(
                f"run {run_index} exceeded {config.max_events} events; "
                "check subcriticality of alpha * tau * row sums"
            )
        ev_nodes.append(stream.node)
        ev_times.append(t)
        child_events += is_child
        for v, score in prox.row(stream.node).items():
            coeff = params.alpha * score
            if coeff * tau >= config.mass_floor:
                admit(DecayingStream(v, coeff, t, tau), t, True)
        t_next = sample_next(stream, t, rng.random())
        if t_next is not None and t_next < config.t_end:
            heapq.heappush(heap, (t_next, sid, stream, rng, is_child))
    trend = Trend(np.asarray(ev_nodes, dtype=np.int64), np.asarray(ev_times, dtype=np.float64))
    return trend, RunStats(len(ev_nodes), child_events)


@dataclass
class PredictionReport:
    """Per-interval Monte Carlo summary plus the duration-coverage vote."""

    grid: IntervalGrid
    runs: int
    theta: float
    measure: str
    intensity_mean: np.ndarray
    intensity_cv: np.ndarray
    coverage_mean: np.ndarray
    coverage_cv: np.ndarray
    duration_covering_fraction: float
    branching_ratio: float = math.nan

    def write_csv(self, out: str | io.TextIOBase) -> None:
        fh = open(out, "w", encoding="utf-8") if isinstance(out, str) else out
        try:
            fh.write(_CSV_HEADER + "\n")
            for i in range(self.grid.count):
                t_min, t_max = self.grid.bounds(i)
                fh.write(
                    f"{i},{t_min:.10g},{t_max:.10g},"
                    f"{_fmt(self.intensity_mean[i])},{_fmt(self.intensity_cv[i])},"
                    f"{_fmt(self.coverage_mean[i])},{_fmt(self.coverage_cv[i])}\n"
                )
            fh.write(
                f"# summary runs={self.runs} theta={self.theta:.10g} measure={self.measure} "
                f"duration_covering_fraction={self.duration_covering_fraction:.10g} "
                f"branching_ratio={_fmt(self.branching_ratio)}\n"
            )
        finally:
            if isinstance(out, str):
                fh.close()

    @classmethod
    def read_csv(cls, path: str) -> PredictionReport:
        rows: list[list[str]] = []
        summary: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if header != _CSV_HEADER:
                raise ValueError(f"{path}: unexpected header {header!r}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("# summary"):
                    for token in line.removeprefix("# summary").split():
                        key, _, val = token.partition("=")
                        summary[key] = val
                    continue
                rows.append(line.split(","))
        if not rows:
            raise ValueError(f"{path}: no interval rows")
        t_min0 = float(rows[0][1])
        length = float(rows[0][2]) - t_min0
        grid = IntervalGrid(t_min0, length, len(rows))

        def column(k: int) -> np.ndarray:
            return np.asarray([float(r[k]) if r[k] else math.nan for r in rows])

        return cls(
            grid=grid,
            runs=int(summary.get("runs", "0")),
            theta=float(summary.get("theta", "nan")),
            measure=summary.get("measure", "coverage"),
            intensity_mean=column(3),
            intensity_cv=column(4),
            coverage_mean=column(5),
            coverage_cv=column(6),
            duration_covering_fraction=float(summary.get("duration_covering_fraction", "nan")),
            branching_ratio=float(summary.get("branching_ratio") or "nan"),
        )


def _fmt(x: float) -> str:
    return "" if math.isnan(x) else f"{x:.10g}"


def _column_cv(matrix: np.ndarray) -> np.ndarray:
    runs = matrix.shape[0]
    means = matrix.mean(axis=0)
    if runs < 2:
        return np.full(matrix.shape[1], math.nan)
    stds = matrix.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cv = np.where(means > 0, stds / means, math.nan)
    return cv


def summarize_runs(
    grid: IntervalGrid,
    intensity_rows: list[np.ndarray],
    coverage_rows: list[np.ndarray],
    theta: float,
    measure: str,
    branching_ratio: float = math.nan,
) -> PredictionReport:
    """Fold per-run interval series into means, CVs, and the duration vote.

    With a single run the CVs are undefined and reported as absent (NaN in
    memory, empty fields in CSV).
    """
    if measure not in ("intensity", "coverage"):
        raise ValueError("measure must be 'intensity' or 'coverage'")
    inten = np.vstack(intensity_rows).astype(np.float64)
    cov = np.vstack(coverage_rows).astype(np.float64)
    chosen = inten if measure == "intensity" else cov
    covering = [longest_run_above(row, theta) == grid.count for row in chosen]
    return PredictionReport(
        grid=grid,
        runs=inten.shape[0],
        theta=theta,
        measure=measure,
        intensity_mean=inten.mean(axis=0),
        intensity_cv=_column_cv(inten),
        coverage_mean=cov.mean(axis=0),
        coverage_cv=_column_cv(cov),
        duration_covering_fraction=float(np.mean(covering)),
        branching_ratio=branching_ratio,
    )


def predict(
    trend: Trend,
    node_count: int,
    prox: ProximityMap,
    params: ActivenessParams,
    config: SimConfig,
    grid: IntervalGrid,
    theta: float = 0.0,
    measure: str = "coverage",
    run_dump: list[Trend] | None = None,
) -> PredictionReport:
    """Monte Carlo forecast of the trend past config.t_start on the grid.

    The observed prefix is folded into initial streams once; each run then
    draws from its own derived generator, so results are independent of
    scheduling and reproducible from config.seed alone.
    """
    if grid.t_start != config.t_start:
        raise ValueError("grid must start at the simulation start time")
    streams = init_streams(
        trend, prox, params, config.t_start, node_count, config.mass_floor
    )
    intensity_rows: list[np.ndarray] = []
    coverage_rows: list[np.ndarray] = []
    total_events = total_children = 0
    from .core import aggregate

    for run_index in range(config.runs):
        run_trend, stats = simulate(streams, prox, params, config, run_index)
        series = aggregate(run_trend, grid)
        intensity_rows.append(series.intensity)
        coverage_rows.append(series.coverage)
        total_events += stats.events
        total_children += stats.child_events
        if run_dump is not None:
            run_dump.append(run_trend)
    ratio = total_children / total_events if total_events else math.nan
    return summarize_runs(grid, intensity_rows, coverage_rows, theta, measure, ratio)


def branching_bound(prox: ProximityMap, params: ActivenessParams, node_count: int) -> float:
    """Worst-case expected offspring per event: alpha * tau * max row sum."""
    max_row = max(prox.row_sum(v) for v in range(node_count))
    return params.alpha * params.tau * max_row


def generate_synthetic(
    graph_node_count: int,
    prox: ProximityMap,
    params: ActivenessParams,
    n_seeds: int,
    horizon: float,
    seed: int,
    allow_supercritical: bool = False,
    max_events: int = 10_000_000,
) -> tuple[Trend, dict]:
    """Plant params, seed a few actions at t0, and simulate forward to ``horizon``.

    Supercritical parameter sets (alpha * tau * max row sum >= 1) are refused
    unless explicitly allowed; the event cap still bounds allowed runs.
    Returns the seeded-plus-generated trend and a manifest dict.
    """
    if not 1 <= n_seeds <= graph_node_count:
        raise ValueError("n_seeds must lie in [1, node_count]")
    if horizon <= params.t0:
        raise ValueError("horizon must exceed t0")
    bound = branching_bound(prox, params, graph_node_count)
    if bound >= 1.0 and not allow_supercritical:
        raise ValueError(
            f"planted parameters are supercritical: alpha * tau * max_row_sum = "
            f"{bound:.6g} >= 1; generation may not terminate"
        )
    pick = derived_rng(seed, _SEED_PICK_KEY)
    seed_nodes = np.sort(pick.choice(graph_node_count, size=n_seeds, replace=False))
    seeds = Trend(seed_nodes, np.full(n_seeds, params.t0))
    config = SimConfig(
        t_start=params.t0, t_end=horizon, runs=1, seed=seed, max_events=max_events
    )
    streams = init_streams(seeds, prox, params, params.t0, graph_node_count, config.mass_floor)
    generated, stats = simulate(streams, prox, params, config, run_index=0)
    trend = Trend(
        np.concatenate([seeds.nodes, generated.nodes]),
        np.concatenate([seeds.times, generated.times]),
    )
    manifest = {
        "alpha": params.alpha,
        "tau": params.tau,
        "epsilon": params.epsilon,
        "t0": params.t0,
        "horizon": horizon,
        "n_seeds": n_seeds,
        "seed_nodes": seed_nodes.tolist(),
        "seed": seed,
        "branching_bound": bound,
        "supercritical": bound >= 1.0,
        "actions": len(trend),
        "generated_events": stats.events,
        "child_events": stats.child_events,
    }
    return trend, manifest
