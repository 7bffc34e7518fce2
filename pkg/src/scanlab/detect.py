"""Tests: scan and eps-scan statistics, multiscale combination, the average
test, the oracle likelihood-ratio test, Monte Carlo calibration, and the
catalog of closed-form detection thresholds.

Statistic values are maxima of standardized sums over a cluster stream; ties
break to the first cluster in enumeration order, so results are deterministic
under any evaluation order.  Finite-sample decisions come from calibrated
empirical null quantiles; the closed-form rates are reported alongside.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .clusters import Cluster
from .metric import EpsNet
from .models import Field, NoiseModel, sample_null
from .network import NodeSet
from .rng import derive_seed


def log_dagger(x: float) -> float:
    """log x for x >= e, and 1 otherwise."""
    return math.log(x) if x >= math.e else 1.0


@dataclass(frozen=True)
class ScaleDetail:
    scale: int
    statistic: float
    threshold: float
    members: int


@dataclass(frozen=True)
class TestResult:
    """Statistic plus (optionally) the threshold that turns it into a test.

    decision is None until a threshold is attached; reject iff
    statistic > threshold.
    """

    statistic: float
    threshold: float | None = None
    argmax: Cluster | None = None
    argmax_index: int | None = None
    argmax_window: int | None = None
    per_scale: tuple[ScaleDetail, ...] | None = None

    @property
    def decision(self) -> bool | None:
        if self.threshold is None:
            return None
        return self.statistic > self.threshold

    def with_threshold(self, threshold: float) -> "TestResult":
        return replace(self, threshold=threshold)


class ScanTable:
    """Flattened cluster stream for repeated fast scoring.

    Stores the concatenated member ids with offsets so every evaluation is a
    single gather + reduceat; build once, score many fields.
    """

    def __init__(self, members: Sequence[Cluster], model: NoiseModel):
        members = tuple(members)
        if not members:
            raise ValueError("empty cluster stream")
        if any(not c for c in members):
            raise ValueError("clusters must be nonempty")
        self.members = members
        self.model = model
        self.sizes = np.array([c.size for c in members], dtype=np.int64)
        self.concat = np.concatenate([c.idarray for c in members])
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)[:-1]])
        self._denom = model.sigma * np.sqrt(self.sizes)
        self._center = self.sizes * model.null_mean

    def __len__(self) -> int:
        return len(self.members)

    def scores(self, row: np.ndarray) -> np.ndarray:
        sums = np.add.reduceat(row[self.concat], self.offsets)
        return (sums - self._center) / self._denom

    def member_sums_temporal(self, values: np.ndarray) -> np.ndarray:
        """Raw per-member sums for each time row: (T, n_members)."""
        return np.add.reduceat(values[:, self.concat], self.offsets, axis=1)

    def max_score(self, row: np.ndarray) -> tuple[float, int]:
        scores = self.scores(row)
        j = int(np.argmax(scores))  # first max: enumeration-order tie-break
        return float(scores[j]), j


def scan(
    field: Field, clusters: Iterable[Cluster] | ScanTable, model: NoiseModel
) -> TestResult:
    """Maximum standardized sum over the stream, with the first argmax."""
    if not field.static:
        raise ValueError("scan takes a static field; see scan_spacetime_cylinders")
    table = clusters if isinstance(clusters, ScanTable) else ScanTable(list(clusters), model)
    value, j = table.max_score(field.values[0])
    return TestResult(statistic=value, argmax=table.members[j], argmax_index=j)


def eps_scan(field: Field, net: EpsNet, model: NoiseModel) -> TestResult:
    return scan(field, net.members, model)


def average_test(field: Field, model: NoiseModel) -> TestResult:
    """Standardized sum over every (node, time) pair (threshold separate)."""
    n = field.values.size
    total = float(field.values.sum())
    value = (total - n * model.null_mean) / (model.sigma * math.sqrt(n))
    return TestResult(statistic=value)


def oracle_test(field: Field, k: Cluster, lam: float, model: NoiseModel) -> TestResult:
    """Likelihood-ratio cutoff for a known cluster: reject iff S_K > lam/2.

    Risk-minimizing for the gaussian shift; for bernoulli/poisson the same
    cutoff is only a large-cluster approximation.
    """
    from .models import standardized_sum

    value = standardized_sum(field, k, model)
    return TestResult(statistic=value, threshold=lam / 2.0, argmax=k)


def default_scale_thresholds(
    m: int, d: int, scales: Iterable[int], c: float = 1.0
) -> dict[int, float]:
    """Conservative per-scale thresholds: a scale term plus a union-bound term.

    sqrt(2*logdag(m * 2**(-scale*d) * c)) + sqrt(2*log(scale**2 + e)); meant
    for running multiscale tests without calibration, and deliberately slack.
    """
    out = {}
    for scale in scales:
        base = math.sqrt(2.0 * log_dagger(m * 2.0 ** (-scale * d) * c))
        union = math.sqrt(2.0 * math.log(scale * scale + math.e))
        out[scale] = base + union
    return out


def multiscale_test(
    field: Field,
    nets: Mapping[int, EpsNet],
    thresholds: Mapping[int, float] | None,
    model: NoiseModel,
) -> TestResult:
    """Reject iff some scale's eps-scan exceeds its threshold.

    The reported statistic is the maximum threshold excess, so the TestResult
    invariant holds with threshold 0.  Scales with empty nets are skipped.
    """
    active = {s: net for s, net in nets.items() if len(net)}
    if not active:
        raise ValueError("all scale nets are empty")
    if thresholds is None:
        thresholds = default_scale_thresholds(field.net.m, field.net.dim, active)
    best: tuple[float, int, TestResult] | None = None
    details = []
    for scale in sorted(active):
        result = eps_scan(field, active[scale], model)
        tau = thresholds[scale]
        details.append(ScaleDetail(scale, result.statistic, tau, len(active[scale])))
        excess = result.statistic - tau
        if best is None or excess > best[0]:
            best = (excess, scale, result)
    excess, _, inner = best
    return TestResult(
        statistic=excess,
        threshold=0.0,
        argmax=inner.argmax,
        argmax_index=inner.argmax_index,
        per_scale=tuple(details),
    )


@dataclass(frozen=True)
class Calibration:
    """Empirical conservative (1-alpha) null quantile of a statistic."""

    alpha: float
    b: int
    threshold: float
    seed: int
    null_stats: np.ndarray

    def __post_init__(self) -> None:
        stats = np.asarray(self.null_stats, dtype=float)
        stats.flags.writeable = False
        object.__setattr__(self, "null_stats", stats)


def _map_indexed(fn: Callable[[int], float], n: int, threads: int) -> np.ndarray:
    """fn(0..n-1) into an array; thread count never changes the result."""
    out = np.empty(n)
    if threads <= 1:
        for i in range(n):
            out[i] = fn(i)
        return out
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for i, value in enumerate(pool.map(fn, range(n), chunksize=64)):
            out[i] = value
    return out


def calibrate(
    statistic: Callable[[Field], float],
    net: NodeSet,
    model: NoiseModel,
    alpha: float,
    b: int,
    seed: int,
    t_m: int = 0,
    threads: int = 1,
) -> Calibration:
    """Threshold = ceil((1-alpha)(b+1))-th order statistic of b null draws."""
    if b < 99:
        raise ValueError("need b >= 99 null samples")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rank = math.ceil((1 - alpha) * (b + 1))
    if rank > b:
        raise ValueError(f"alpha={alpha} needs more than b={b} null samples")

    def one(i: int) -> float:
        field = sample_null(net, model, t_m, derive_seed(seed, "calib", i))
        return statistic(field)

    stats = _map_indexed(one, b, threads)
    threshold = float(np.sort(stats)[rank - 1])
    return Calibration(alpha=alpha, b=b, threshold=threshold, seed=seed, null_stats=stats)


# ---------------------------------------------------------------------------
# closed-form detection thresholds


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise ValueError(message)


def _rate_thick(m: float, k: float) -> float:
    _check(m > 0 and 0 < k <= m, "need 0 < k <= m")
    return math.sqrt(2.0 * math.log(m / k))


def _rate_ball(d: int, lam: float) -> float:
    _check(d >= 1, "need d >= 1")
    _check(0 < lam < 1, "need lam in (0,1)")
    return math.sqrt(2.0 * d * math.log(1.0 / lam))


def _rate_thin(eps: float, log_n: float, d: int, lam: float) -> float:
    _check(eps > 0, "need eps > 0")
    _check(log_n >= 0, "need log_n >= 0")
    _check(d >= 1 and 0 < lam < 1, "need d >= 1 and lam in (0,1)")
    return (1.0 + eps * eps) * math.sqrt(2.0 * log_n + 2.0 * d * math.log(1.0 / lam))

def _rate_thin_slab(d: int, p: int, r: float, lam: float) -> float:
    _check(1 <= p < d, "need 1 <= p < d")
    _check(0 < r <= lam < 1, "need 0 < r <= lam < 1")
    return math.sqrt(2.0 * (d - p) * math.log(1.0 / r) + 2.0 * p * math.log(1.0 / lam))


def _rate_band_nondecreasing(ell: float, h: float) -> float:
    _check(ell >= h >= 1, "need ell >= h >= 1")
    return math.sqrt(ell / h)


def _rate_band_all(ell: float, h: float, m: float, d: int) -> float:
    _check(ell >= h >= 1, "need ell >= h >= 1")
    _check(m > 0 and d >= 1, "need m > 0, d >= 1")
    return math.sqrt(ell / h + math.log(m / h**d) + log_dagger(math.log(ell)))


def _rate_animal(m: float) -> float:
    _check(m > 1, "need m > 1")
    return math.sqrt(2.0 * math.log(m))


def _rate_bernoulli_p(m: float, k: float) -> float:
    _check(m > 0 and 0 < k <= m, "need 0 < k <= m")
    return 0.5 + math.sqrt(2.0 * math.log(m / k)) / (8.0 * math.sqrt(k))


def _rate_poisson_mu(m: float, k: float) -> float:
    _check(m > 0 and 0 < k <= m, "need 0 < k <= m")
    return 1.0 + math.sqrt(2.0 * math.log(m / k)) / math.sqrt(k)


def _rate_logdag(x: float) -> float:
    return log_dagger(x)


RATE_FORMULAS: dict[str, tuple[Callable, tuple[str, ...]]] = {
    "thick": (_rate_thick, ("m", "k")),
    "ball": (_rate_ball, ("d", "lam")),
    "cylinder": (_rate_ball, ("d", "lam")),
    "thin": (_rate_thin, ("eps", "log_n", "d", "lam")),
    "thin_slab": (_rate_thin_slab, ("d", "p", "r", "lam")),
    "band_nondecreasing": (_rate_band_nondecreasing, ("ell", "h")),
    "band_all": (_rate_band_all, ("ell", "h", "m", "d")),
    "animal": (_rate_animal, ("m",)),
    "bernoulli_p": (_rate_bernoulli_p, ("m", "k")),
    "poisson_mu": (_rate_poisson_mu, ("m", "k")),
    "logdag": (_rate_logdag, ("x",)),
}


def rate(name: str, **params) -> float:
    """Closed-form threshold by formula id; see RATE_FORMULAS for the catalog."""
    if name not in RATE_FORMULAS:
        raise ValueError(
            f"unknown formula {name!r}; known: {sorted(RATE_FORMULAS)}"
        )
    fn, wanted = RATE_FORMULAS[name]
    missing = [p for p in wanted if p not in params]
    extra = [p for p in params if p not in wanted]
    if missing:
        raise ValueError(f"formula {name!r} missing params: {missing}")
    if extra:
        raise ValueError(f"formula {name!r} got unknown params: {extra}")
    return float(fn(**{p: params[p] for p in wanted}))
