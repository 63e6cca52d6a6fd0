"""Independent reference implementations used to cross-check the package.

Everything here is deliberately naive: plain loops, no stacking, no shared
code with the library internals beyond data containers.
"""

from __future__ import annotations

import math

import numpy as np

from trendcast.core import Graph, Trend, random_graph
from trendcast.proximity import ProximityConfig, ProximityMap
from trendcast.simulation import DecayingStream


def naive_total_integral(trend: Trend, prox: ProximityMap, tau: float, t_star: float, node_count: int) -> float:
    """All-nodes influence integral by the full node-by-node double loop."""
    prefix = trend.prefix(t_star)
    actions = list(prefix)
    total = 0.0
    for v in range(node_count):
        s = 0.0
        for u, t_i in actions:
            w = prox.row(u).get(v)
            if w:
                s += w * (1.0 - math.exp(-(t_star - t_i) / tau))
        total += tau * s
    return total


def naive_influences(prefix: Trend, prox: ProximityMap, tau: float) -> list[float]:
    """Strict-predecessor influence at each action via the pairwise loop."""
    nodes = prefix.nodes.tolist()
    times = prefix.times.tolist()
    out = []
    for i in range(len(nodes)):
        s = 0.0
        for j in range(i):
            w = prox.row(nodes[j]).get(nodes[i])
            if w:
                s += w * math.exp(-(times[i] - times[j]) / tau)
        out.append(s)
    return out


def naive_log_likelihood(
    trend: Trend,
    prox: ProximityMap,
    tau: float,
    alpha: float,
    t_star: float,
    node_count: int,
    epsilon: float = 1e-9,
) -> float:
    prefix = trend.prefix(t_star)
    n = len(prefix)
    h_total = naive_total_integral(trend, prox, tau, t_star, node_count)
    alpha_closed = n / h_total
    log_h = 0.0
    for h in naive_influences(prefix, prox, tau):
        log_h += math.log(h if h > 0 else epsilon / alpha_closed)
    return n * math.log(alpha) - alpha * h_total + log_h


def decayed_influence_at(prefix_actions: list[tuple[int, float]], prox: ProximityMap, node: int, t: float, tau: float) -> float:
    """Pointwise influence sum, used as a quadrature integrand."""
    s = 0.0
    for u, t_i in prefix_actions:
        if t_i <= t:
            w = prox.row(u).get(node)
            if w:
                s += w * math.exp(-(t - t_i) / tau)
    return s


def thinning_superposed(streams: list[DecayingStream], t_start: float, t_end: float, rng: np.random.Generator) -> list[float]:
    """Direct simulation of the summed rate of decaying streams by thinning.

    The summed rate is non-increasing, so the rate at the current time bounds
    the future and standard thinning applies.
    """

    def rate(t: float) -> float:
        return sum(s.coefficient * math.exp(-(t - s.anchor) / s.tau) for s in streams)

    t = t_start
    events: list[float] = []
    while True:
        lam = rate(t)
        if lam <= 0.0:
            return events
        t = t + rng.exponential(1.0 / lam)
        if t >= t_end:
            return events
        if rng.random() < rate(t) / lam:
            events.append(t)


def time_step_self_excited_counts(
    alpha: float,
    tau: float,
    seed_coefficient: float,
    t_end: float,
    dt: float,
    runs: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Total event counts of a single-node self-exciting process by tiny time steps."""
    rate = np.full(runs, seed_coefficient)
    counts = np.zeros(runs, dtype=np.int64)
    decay = math.exp(-dt / tau)
    for _ in range(int(round(t_end / dt))):
        fired = rng.random(runs) < rate * dt
        counts += fired
        rate = rate * decay + alpha * fired
    return counts


def brute_force_longest_run(values, theta) -> int:
    """Longest all-above-theta window by checking every (start, end) pair."""
    vals = list(values)
    best = 0
    for i in range(len(vals)):
        for j in range(i, len(vals)):
            window = vals[i : j + 1]
            if all(v > theta for v in window):
                best = max(best, len(window))
    return best


def random_instance(
    seed: int,
    max_nodes: int = 500,
    max_actions: int = 200,
    kind: str = "shortest_path",
    b: float = 1.0,
    p: float = 0.4,
) -> tuple[Graph, ProximityMap, Trend]:
    """A random graph, kernel, and sorted action sequence for property tests."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, max_nodes + 1))
    max_edges = n * (n - 1) // 2
    m = int(min(rng.integers(n, 4 * n + 1), max_edges))
    graph = random_graph(n, m, seed=int(rng.integers(2**31)))
    k = int(rng.integers(2, max_actions + 1))
    nodes = rng.integers(0, n, size=k)
    times = np.sort(rng.uniform(0.0, 10.0, size=k))
    config = ProximityConfig(kind=kind, b=b, p=p)
    return graph, ProximityMap(graph, config), Trend(nodes, times)
