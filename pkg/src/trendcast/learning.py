"""Maximum-likelihood fitting of activeness parameters from an action prefix.

For fixed tau the jump scale alpha has a closed form (action count over the
total influence integral), so fitting reduces to a one-dimensional line
search over tau. The search runs on log tau with a golden-section bracket,
restarted over geometric subranges to dodge local maxima.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .core import Trend
from .proximity import ProximityMap


class DegeneratePrefixError(ValueError):
    """Prefix carries no usable signal (empty, or all mass at t_star)."""


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class LearnConfig:
    """Line-search knobs: tau bracket, relative stop width, restart count.

    ``tau_range`` of None derives the bracket from the observation span,
    [1e-3 * span, 1e3 * span].
    """

    tau_range: tuple[float, float] | None = None
    tolerance: float = 1e-6
    multistart: int = 4

    def __post_init__(self) -> None:
        if not 0 < self.tolerance < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        if self.multistart < 1:
            raise ValueError("multistart must be at least 1")
        if self.tau_range is not None:
            lo, hi = self.tau_range
            if not 0 < lo < hi:
                raise ValueError("tau_range must satisfy 0 < lo < hi")


@dataclass(frozen=True)
class LearnResult:
    alpha: float
    tau: float
    log_likelihood: float
    evaluations: int


class _InfluenceTable:
    """Tau-independent precomputation for repeated likelihood evaluations.

    Flattens every (earlier action j, later action i) pair with nonzero
    proximity into parallel arrays, so each tau evaluation is a handful of
    vectorized passes instead of a pairwise loop.
    """

    def __init__(self, prefix: Trend, prox: ProximityMap, t_star: float) -> None:
        nodes = prefix.nodes.tolist()
        times = prefix.times.tolist()
        self.n = len(nodes)
        by_node: dict[int, list[int]] = {}
        for i, u in enumerate(nodes):
            by_node.setdefault(u, []).append(i)
        pair_dt: list[float] = []
        pair_weight: list[float] = []
        pair_target: list[int] = []
        for j, (u, t_j) in enumerate(zip(nodes, times)):
            for v, score in prox.row(u).items():
                targets = by_node.get(v)
                if not targets:
                    continue
                for i in targets[bisect_right(targets, j) :]:
                    pair_dt.append(times[i] - t_j)
                    pair_weight.append(score)
                    pair_target.append(i)
        self.pair_dt = np.asarray(pair_dt, dtype=np.float64)
        self.pair_weight = np.asarray(pair_weight, dtype=np.float64)
        self.pair_target = np.asarray(pair_target, dtype=np.int64)
        self.elapsed = t_star - prefix.times
        self.row_sums = np.asarray([prox.row_sum(u) for u in nodes], dtype=np.float64)

    def total_integral(self, tau: float) -> float:
        """Stacked all-nodes influence integral up to t_star."""
        return tau * float(np.sum(self.row_sums * -np.expm1(-self.elapsed / tau)))

    def influences(self, tau: float) -> np.ndarray:
        """Strict-predecessor influence at each action time.

        Predecessors are actions strictly earlier in the sequence; an action
        never feeds its own influence term, and among equal timestamps only
        earlier list positions count.
        """
        h = np.zeros(self.n)
        if self.pair_dt.size:
            contrib = self.pair_weight * np.exp(-self.pair_dt / tau)
            h = np.bincount(self.pair_target, weights=contrib, minlength=self.n)
        return h

    def evaluate(self, tau: float, alpha: float | None, epsilon: float) -> tuple[float, float]:
        """Log-likelihood at (alpha, tau); alpha of None means the closed-form value.

        Actions with zero influence (no predecessors, or all terms decayed
        away) fall back to the residual rate: their influence is read as
        epsilon / alpha_hat(tau), a constant in the alpha argument, which
        keeps the closed-form alpha the exact maximizer.
        """
        h_total = self.total_integral(tau)
        if h_total <= 0.0:
            raise DegeneratePrefixError(
                "total influence integral is zero; prefix cannot identify alpha"
            )
        alpha_closed = self.n / h_total
        if alpha is None:
            alpha = alpha_closed
        h = self.influences(tau)
        zero = h <= 0.0
        if zero.any():
            floor = epsilon / alpha_closed
            if floor <= 0.0:
                raise DegeneratePrefixError(
                    "action with zero influence and epsilon = 0; likelihood is degenerate"
                )
            h = np.where(zero, floor, h)
        value = self.n * math.log(alpha) - alpha * h_total + float(np.log(h).sum())
        return value, alpha_closed


def _table(trend: Trend, prox: ProximityMap, t_star: float) -> _InfluenceTable:
    prefix = trend.prefix(t_star)
    if len(prefix) == 0:
        raise DegeneratePrefixError("no actions at or before t_star")
    return _InfluenceTable(prefix, prox, t_star)


def log_likelihood(
    trend: Trend,
    prox: ProximityMap,
    tau: float,
    alpha: float,
    t_star: float,
    epsilon: float = 1e-9,
) -> float:
    """Log-likelihood of the prefix under (alpha, tau)."""
    if tau <= 0 or alpha <= 0:
        raise ValueError("alpha and tau must be positive")
    value, _ = _table(trend, prox, t_star).evaluate(tau, alpha, epsilon)
    return value


def estimate_alpha(trend: Trend, prox: ProximityMap, tau: float, t_star: float) -> float:
    """Closed-form maximizer of the likelihood in alpha at fixed tau."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    table = _table(trend, prox, t_star)
    h_total = table.total_integral(tau)
    if h_total <= 0.0:
        raise DegeneratePrefixError(
            "total influence integral is zero (all actions at t_star?)"
        )
    return table.n / h_total


def _golden_max(f, a: float, b: float, tol: float) -> tuple[float, float, int]:
    """Golden-section maximization on [a, b]; ties resolve toward smaller x."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
        evals += 1
    if fc >= fd:
        return c, fc, evals
    return d, fd, evals


def fit(
    trend: Trend,
    prox: ProximityMap,
    t_star: float,
    config: LearnConfig | None = None,
    epsilon: float = 1e-9,
) -> LearnResult:
    """Fit (alpha, tau) to the prefix at t_star by profile likelihood.

    Golden-section search on log tau within each of ``multistart`` geometric
    subranges of the bracket; the best profile value wins, ties going to the
    smaller tau. Deterministic: equal inputs give identical results.
    """
    config = config or LearnConfig()
    prefix = trend.prefix(t_star)
    if len(prefix) < 2:
        raise DegeneratePrefixError("need at least two actions to fit")
    table = _InfluenceTable(prefix, prox, t_star)
    if config.tau_range is not None:
        lo, hi = config.tau_range
    else:
        span = t_star - float(prefix.times[0])
        if span <= 0.0:
            raise DegeneratePrefixError("all actions at t_star; tau bracket is empty")
        lo, hi = 1e-3 * span, 1e3 * span

    evaluations = 0

    def objective(x: float) -> float:
        nonlocal evaluations
        evaluations += 1
        value, _ = table.evaluate(math.exp(x), None, epsilon)
        return value

    cuts = np.linspace(math.log(lo), math.log(hi), config.multistart + 1)
    best_x = best_f = None
    for a, b in zip(cuts[:-1], cuts[1:]):
        x, fx, _ = _golden_max(objective, float(a), float(b), config.tolerance)
        if best_f is None or fx > best_f:
            best_x, best_f = x, fx
    tau_hat = math.exp(best_x)
    value, alpha_hat = table.evaluate(tau_hat, None, epsilon)
    return LearnResult(alpha_hat, tau_hat, value, evaluations)
