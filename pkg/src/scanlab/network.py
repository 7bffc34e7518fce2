"""Node sets: lattices and uniform clouds, balls, and the even-spread check.

Two geometries are supported.  Lattice mode places nodes on the integer grid
{0..side-1}^d and measures distance in l1 (the shortest-path metric of the
grid graph).  Euclidean mode places nodes in [0,1]^d and measures distance
in l2.  Balls are open everywhere: a node at distance exactly r is excluded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import CapacityError
from .rng import rng_from_seed

if TYPE_CHECKING:
    from .clusters import Cluster

LATTICE = "lattice-l1"
EUCLIDEAN = "euclidean-l2"

# Hard guard on node count; everything here is desk-scale.
MAX_NODES = 1 << 26


@dataclass(frozen=True)
class NodeSet:
    """An immutable set of m nodes with ids 0..m-1 and coordinates in R^d."""

    mode: str
    dim: int
    coords: np.ndarray  # (m, dim), read-only
    side: int | None = None  # lattice mode only

    def __post_init__(self) -> None:
        coords = np.asarray(self.coords)
        if coords.ndim != 2 or coords.shape[1] != self.dim:
            raise ValueError(f"coords must be (m, {self.dim})")
        if self.mode not in (LATTICE, EUCLIDEAN):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == LATTICE:
            if self.side is None or self.side < 1:
                raise ValueError("lattice mode requires a positive side")
            if coords.min() < 0 or coords.max() > self.side - 1:
                raise ValueError("lattice coordinates out of range")
        else:
            if coords.size and (coords.min() < 0.0 or coords.max() > 1.0):
                raise ValueError("euclidean coordinates must lie in [0,1]^d")
        if len(np.unique(coords, axis=0)) != len(coords):
            raise ValueError("node coordinates must be unique")
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)

    @property
    def m(self) -> int:
        return len(self.coords)

    def distances(self, center) -> np.ndarray:
        """Distance from `center` to every node, in the mode's norm."""
        center = np.asarray(center, dtype=float)
        diff = self.coords - center
        if self.mode == LATTICE:
            return np.abs(diff).sum(axis=1)
        return np.sqrt((diff * diff).sum(axis=1))


def make_lattice(d: int, side: int) -> NodeSet:
    """Regular grid {0..side-1}^d with row-major node ids.

    Node id of coordinate (c_0,...,c_{d-1}) is sum(c_i * side**(d-1-i)).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if side < 2:
        raise ValueError("side must be >= 2")
    m = side**d
    if m > MAX_NODES:
        raise CapacityError(f"lattice of {m} nodes exceeds the {MAX_NODES} node guard")
    coords = np.indices((side,) * d).reshape(d, -1).T.astype(np.int64)
    return NodeSet(mode=LATTICE, dim=d, coords=coords, side=side)


def make_uniform_cloud(d: int, m: int, seed: int) -> NodeSet:
    """m i.i.d. uniform points in [0,1]^d; deterministic given seed."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > MAX_NODES:
        raise CapacityError(f"cloud of {m} nodes exceeds the {MAX_NODES} node guard")
    coords = rng_from_seed(seed).random((m, d))
    return NodeSet(mode=EUCLIDEAN, dim=d, coords=coords)


def rescale_lattice(net: NodeSet) -> NodeSet:
    """The lattice mapped to cell centers (x+1/2)/side in [0,1]^d, l2 metric.

    Euclidean-geometry experiments on grid-shaped node sets run on this view;
    node ids are unchanged.
    """
    if net.mode != LATTICE:
        raise ValueError("rescale_lattice expects a lattice NodeSet")
    coords = (net.coords.astype(float) + 0.5) / float(net.side)
    return NodeSet(mode=EUCLIDEAN, dim=net.dim, coords=coords)


def ball_ids(net: NodeSet, center, r: float) -> np.ndarray:
    """Sorted ids of nodes strictly within distance r of center."""
    if r <= 0:
        raise ValueError("r must be > 0")
    return np.flatnonzero(net.distances(center) < r)


def closed_ball_ids(net: NodeSet, center, r: float) -> np.ndarray:
    """Sorted ids of nodes within distance <= r of center (r >= 0)."""
    if r < 0:
        raise ValueError("r must be >= 0")
    return np.flatnonzero(net.distances(center) <= r)


def ball_nodes(net: NodeSet, center, r: float) -> "Cluster":
    """The open ball around `center` as a Cluster (possibly empty)."""
    from .clusters import Cluster  # import here: clusters builds on network

    return Cluster(tuple(int(i) for i in ball_ids(net, center, r)))


@dataclass(frozen=True)
class SpreadProbe:
    node: int
    r: float
    count: int
    lo: float
    hi: float
    ok: bool


@dataclass(frozen=True)
class SpreadCertificate:
    """Record of a sampled check of the even-spread condition.

    pass_ requires C**-1 * m * r**d <= |B(x,r) ∩ V| <= C * m * r**d for every
    probed (x, r).  Probes, constant and seed are kept for reproducibility;
    the check is sampled, not exhaustive.
    """

    constant: float
    r_star: float
    probes: tuple[SpreadProbe, ...] = field(repr=False)
    pass_: bool

    @property
    def first_violation(self) -> SpreadProbe | None:
        for p in self.probes:
            if not p.ok:
                return p
        return None


def check_spread(
    net: NodeSet, constant: float, r_star: float, probes: int, seed: int
) -> SpreadCertificate:
    """Probe the even-spread condition at random (node, radius) pairs.

    Centers are nodes chosen uniformly; radii are log-uniform in [r_star, 1].
    Failure is reported in the certificate, never raised.
    """
    if constant < 1:
        raise ValueError("constant must be >= 1")
    if not 0 < r_star <= 1:
        raise ValueError("r_star must lie in (0, 1]")
    if probes < 1:
        raise ValueError("probes must be >= 1")
    rng = rng_from_seed(seed)
    nodes = rng.integers(0, net.m, size=probes)
    radii = np.exp(rng.uniform(np.log(r_star), 0.0, size=probes))
    records = []
    ok_all = True
    for node, r in zip(nodes, radii):
        count = int(len(ball_ids(net, net.coords[node], float(r))))
        lo = net.m * float(r) ** net.dim / constant
        hi = constant * net.m * float(r) ** net.dim
        ok = lo <= count <= hi
        ok_all = ok_all and ok
        records.append(SpreadProbe(int(node), float(r), count, lo, hi, ok))
    return SpreadCertificate(constant, r_star, tuple(records), ok_all)


def write_nodeset(net: NodeSet, fh) -> None:
    """CSV with a one-line JSON sidecar comment: # {mode, d, m[, side]}."""
    meta = {"mode": net.mode, "d": net.dim, "m": net.m}
    if net.side is not None:
        meta["side"] = net.side
    fh.write("# " + json.dumps(meta) + "\n")
    fh.write("id," + ",".join(f"x{i}" for i in range(net.dim)) + "\n")
    for i, row in enumerate(net.coords):
        if net.mode == LATTICE:
            vals = ",".join(str(int(v)) for v in row)
        else:
            vals = ",".join(repr(float(v)) for v in row)
        fh.write(f"{i},{vals}\n")


def save_nodeset(net: NodeSet, path) -> None:
    with open(path, "w") as fh:
        write_nodeset(net, fh)


def load_nodeset(path) -> NodeSet:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError("node set file must start with a # metadata line")
        meta = json.loads(header[1:].strip())
        fh.readline()  # column header
        rows = [line.strip().split(",") for line in fh if line.strip()]
    d = int(meta["d"])
    if meta["mode"] == LATTICE:
        coords = np.array([[int(v) for v in row[1:]] for row in rows], dtype=np.int64)
        return NodeSet(mode=LATTICE, dim=d, coords=coords, side=int(meta["side"]))
    coords = np.array([[float(v) for v in row[1:]] for row in rows], dtype=float)
    return NodeSet(mode=EUCLIDEAN, dim=d, coords=coords)
