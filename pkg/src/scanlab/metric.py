"""Cluster dissimilarity, greedy epsilon-nets, and covering verification.

The dissimilarity is delta(K, L) = sqrt(2) * (1 - |K∩L| / sqrt(|K||L|))**0.5,
which lives in [0, sqrt(2)]: 0 exactly for equal sets, sqrt(2) for disjoint
ones.  A minimal covering is NP-hard, so nets are built greedily: a cluster
is admitted iff it is more than epsilon away from every member admitted so
far.  The result is an epsilon-packing, hence covers everything it scanned;
verify_cover certifies covering against any stream independently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .clusters import Cluster

SQRT2 = math.sqrt(2.0)


def delta(k: Cluster, l: Cluster) -> float:
    """Dissimilarity in [0, sqrt(2)]; both clusters must be nonempty."""
    if not k or not l:
        raise ValueError("delta is undefined for empty clusters")
    inter = len(k.idset & l.idset)
    return math.sqrt(max(2.0 * (1.0 - inter / math.sqrt(k.size * l.size)), 0.0))


@dataclass(frozen=True)
class EpsNet:
    """Greedy packing at separation epsilon; members keep stream order."""

    epsilon: float
    members: tuple[Cluster, ...]
    family: str = ""

    def __len__(self) -> int:
        return len(self.members)


class _OverlapIndex:
    """node id -> indices of members containing it.

    Disjoint clusters sit at delta = sqrt(2), so only members overlapping a
    candidate can be closer than any epsilon < sqrt(2); the index turns each
    min-distance query into one bincount over the candidate's member lists.
    """

    def __init__(self, members: Iterable[Cluster] = ()):
        self.sizes: list[int] = []
        self.by_node: dict[int, list[int]] = {}
        for member in members:
            self.add(member)

    def add(self, member: Cluster) -> None:
        idx = len(self.sizes)
        self.sizes.append(member.size)
        for v in member.ids:
            self.by_node.setdefault(v, []).append(idx)

    def min_delta(self, cluster: Cluster) -> tuple[float, int]:
        """(min delta over members, argmin index); (sqrt(2), -1) if no overlap."""
        gathered: list[int] = []
        for v in cluster.ids:
            hits = self.by_node.get(v)
            if hits:
                gathered.extend(hits)
        if not gathered:
            return (SQRT2, -1) if self.sizes else (math.inf, -1)
        counts = np.bincount(np.asarray(gathered, dtype=np.int64))
        touched = np.flatnonzero(counts)
        sizes = np.asarray(self.sizes, dtype=float)[touched]
        ratio = counts[touched] / np.sqrt(cluster.size * sizes)
        d = np.sqrt(np.maximum(2.0 * (1.0 - ratio), 0.0))
        j = int(np.argmin(d))
        return float(d[j]), int(touched[j])


def build_net(stream: Iterable[Cluster], epsilon: float, family: str = "") -> EpsNet:
    """Greedy epsilon-net in stream order: admit iff min delta > epsilon."""
    if not 0 < epsilon <= SQRT2:
        raise ValueError("epsilon must lie in (0, sqrt(2)]")
    members: list[Cluster] = []
    index = _OverlapIndex()
    for cluster in stream:
        if not cluster:
            continue
        dmin, _ = index.min_delta(cluster)
        if dmin > epsilon:
            index.add(cluster)
            members.append(cluster)
    return EpsNet(epsilon=epsilon, members=tuple(members), family=family)


@dataclass(frozen=True)
class CoverReport:
    epsilon: float
    max_min_dist: float
    worst: Cluster | None
    checked: int

    @property
    def passed(self) -> bool:
        return self.max_min_dist <= self.epsilon + 1e-12


def verify_cover(net: EpsNet, stream: Iterable[Cluster]) -> CoverReport:
    """max over the stream of min member distance, with the worst witness."""
    if not net.members:
        raise ValueError("cannot verify an empty net")
    index = _OverlapIndex(net.members)
    worst: Cluster | None = None
    worst_dist = -1.0
    checked = 0
    for cluster in stream:
        if not cluster:
            continue
        checked += 1
        dmin, _ = index.min_delta(cluster)
        if dmin > worst_dist:
            worst_dist = dmin
            worst = cluster
    return CoverReport(net.epsilon, max(worst_dist, 0.0), worst, checked)
