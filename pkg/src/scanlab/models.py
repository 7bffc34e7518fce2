"""One-parameter exponential-family noise, signal planting, and estimation.

The three families share the tilt f_theta(x) = exp(theta*x - log phi(theta))
relative to their base law F0: gaussian N(0,1) (theta shifts the mean),
bernoulli(1/2) (theta is the log-odds offset, sigma^2 = 1/4) and poisson(1)
(theta is log mean, sigma^2 = 1).  A planted cluster K at signal strength
lam receives the natural parameter theta_K = sigma * lam / sqrt(|K|), with
|K| counting (node, time) pairs in the spatio-temporal case.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np
from scipy.stats import norm

from .clusters import Cluster
from .network import NodeSet
from .rng import _fast_rng

if TYPE_CHECKING:
    from .growth import ClusterSequence

GAUSSIAN = "gaussian"
BERNOULLI = "bernoulli"
POISSON = "poisson"

_MAD_CONSISTENCY = float(norm.ppf(0.75))  # 0.6744897501960817


@dataclass(frozen=True)
class NoiseModel:
    family: str
    min_cluster_warn: int = 30  # non-gaussian planting below this is suspect

    def __post_init__(self) -> None:
        if self.family not in (GAUSSIAN, BERNOULLI, POISSON):
            raise ValueError(f"unknown family {self.family!r}")

    @property
    def null_mean(self) -> float:
        return {GAUSSIAN: 0.0, BERNOULLI: 0.5, POISSON: 1.0}[self.family]

    @property
    def sigma2(self) -> float:
        return {GAUSSIAN: 1.0, BERNOULLI: 0.25, POISSON: 1.0}[self.family]

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    def sample_null_values(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.family == GAUSSIAN:
            return rng.standard_normal(size)
        if self.family == BERNOULLI:
            return (rng.random(size) < 0.5).astype(float)
        return rng.poisson(1.0, size).astype(float)

    def tilted_mean(self, theta: float) -> float:
        if self.family == GAUSSIAN:
            return theta
        if self.family == BERNOULLI:
            return 1.0 / (1.0 + math.exp(-theta))
        return math.exp(theta)

    def sample_tilted(
        self, rng: np.random.Generator, theta: float, size: int
    ) -> np.ndarray:
        if self.family == GAUSSIAN:
            return rng.standard_normal(size) + theta
        if self.family == BERNOULLI:
            p = self.tilted_mean(theta)
            if p >= 1.0:
                raise ValueError(f"bernoulli tilt saturates: p={p} >= 1")
            return (rng.random(size) < p).astype(float)
        return rng.poisson(self.tilted_mean(theta), size).astype(float)


def noise_model(family: str) -> NoiseModel:
    return NoiseModel(family)


@dataclass(frozen=True)
class Field:
    """Values at every (node, time) pair; shape (t_m + 1, m), immutable."""

    net: NodeSet
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.net.m:
            raise ValueError(f"values must be (t_m+1, {self.net.m})")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def t_m(self) -> int:
        return self.values.shape[0] - 1

    @property
    def static(self) -> bool:
        return self.t_m == 0

    @classmethod
    def _wrap(cls, net: NodeSet, values: np.ndarray) -> "Field":
        """Internal: adopt a known-good (t_m+1, m) array without re-checks."""
        obj = object.__new__(cls)
        values.flags.writeable = False
        object.__setattr__(obj, "net", net)
        object.__setattr__(obj, "values", values)
        return obj


@dataclass(frozen=True)
class SignalSpec:
    """Signal strength lam (>= 0; 0 plants a null-distributed redraw).

    per_node_theta optionally overrides the natural parameter node by node;
    overrides must not fall below the implied theta_K.
    """

    lam: float
    per_node_theta: dict[int, float] | None = None

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise ValueError("lam must be >= 0")

    def theta(self, model: NoiseModel, total_pairs: int) -> float:
        return model.sigma * self.lam / math.sqrt(total_pairs)


def sample_null(net: NodeSet, model: NoiseModel, t_m: int, seed: int) -> Field:
    """i.i.d. F0 draws at every (node, time); t_m = 0 gives a static field."""
    if t_m < 0:
        raise ValueError("t_m must be >= 0")
    rng = _fast_rng(seed)
    values = model.sample_null_values(rng, (t_m + 1) * net.m).reshape(t_m + 1, net.m)
    return Field._wrap(net, values)


def _anomalous_slices(
    target: Union[Cluster, "ClusterSequence"], t_m: int
) -> list[tuple[int, Cluster]]:
    """(time, cluster) pairs carrying signal; validates the time horizon."""
    if isinstance(target, Cluster):
        if not target:
            raise ValueError("cannot plant an empty cluster")
        return [(0, target)]
    slices = [(t, k) for t, k in enumerate(target.slices) if k]
    if not slices:
        raise ValueError("cannot plant an empty cluster sequence")
    if target.t_m > t_m:
        raise ValueError("cluster sequence is longer than the field horizon")
    return slices


def plant(
    field: Field,
    target: Union[Cluster, "ClusterSequence"],
    sig: SignalSpec,
    model: NoiseModel,
    seed: int,
) -> Field:
    """Replace values on the target by F_theta draws; off-target untouched."""
    slices = _anomalous_slices(target, field.t_m)
    total = sum(k.size for _, k in slices)
    theta = sig.theta(model, total)
    if model.family != GAUSSIAN and total < model.min_cluster_warn:
        warnings.warn(
            f"planting {total} anomalous pairs in a {model.family} field; "
            f"normal approximations assume at least {model.min_cluster_warn}",
            stacklevel=2,
        )
    overrides = sig.per_node_theta
    if overrides:
        for node, th in overrides.items():
            if th < theta - 1e-12:
                raise ValueError(
                    f"override theta for node {node} is below the implied {theta:.6g}"
                )
    rng = _fast_rng(seed)
    values = field.values.copy()
    for t, k in slices:
        draws = model.sample_tilted(rng, theta, k.size)
        if overrides:
            for pos, node in enumerate(k.ids):
                if node in overrides:
                    draws[pos] = model.sample_tilted(rng, overrides[node], 1)[0]
        values[t, k.idarray] = draws
    return Field._wrap(field.net, values)


def mad_variance(field: Field) -> float:
    """Robust variance: (MAD / Phi^-1(3/4))**2 over all field values."""
    values = field.values.ravel()
    if values.size < 2:
        raise ValueError("need at least two values")
    med = np.median(values)
    mad = np.median(np.abs(values - med))
    return float((mad / _MAD_CONSISTENCY) ** 2)


def standardized_sum(
    field: Field, target: Union[Cluster, "ClusterSequence"], model: NoiseModel
) -> float:
    """(sum over the target - n*mean0) / (sigma*sqrt(n)): mean 0, var 1 under H0.

    For the gaussian family this is |K|**-0.5 * sum(X).  A Cluster addresses a
    static field; temporal fields take a ClusterSequence and n counts the
    (node, time) pairs.
    """
    if isinstance(target, Cluster):
        if not target:
            raise ValueError("standardized_sum needs a nonempty cluster")
        if not field.static:
            raise ValueError("pass a ClusterSequence for temporal fields")
        total = float(field.values[0].take(target.idarray).sum())
        n = target.size
    else:
        slices = _anomalous_slices(target, field.t_m)
        total = float(sum(field.values[t, k.idarray].sum() for t, k in slices))
        n = sum(k.size for _, k in slices)
    return (total - n * model.null_mean) / (model.sigma * math.sqrt(n))


def save_field(field: Field, path) -> None:
    """CSV `node,t,value`; the t column is present even in static mode."""
    with open(path, "w") as fh:
        fh.write("node,t,value\n")
        for node in range(field.net.m):
            for t in range(field.t_m + 1):
                fh.write(f"{node},{t},{float(field.values[t, node])!r}\n")


def load_field(net: NodeSet, path) -> Field:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "node,t,value":
            raise ValueError("field file must have header node,t,value")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    t_m = max(int(r[1]) for r in rows)
    values = np.full((t_m + 1, net.m), np.nan)
    for node, t, value in rows:
        values[int(t), int(node)] = float(value)
    if np.isnan(values).any():
        raise ValueError("field file is incomplete")
    return Field(net=net, values=values)
