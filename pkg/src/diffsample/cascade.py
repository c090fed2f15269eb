"""Independent-cascade simulation with exponential waiting times.

A cascade is stored sparsely: only infected nodes, their infection times
and (when known) the arc that infected them. Uninfected nodes have time
``inf``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .graph import Graph, GraphError, induced_subgraph

log = logging.getLogger(__name__)

__all__ = [
    "Cascade",
    "CascadeSet",
    "DiffusionNetwork",
    "DiffusionParams",
    "DiffusionTargetError",
    "simulate_cascade",
    "generate_cascade_set",
    "build_diffusion_network",
    "diffusion_rate",
    "write_cascades",
    "read_cascades",
]

DEFAULT_MAX_CASCADES = 100_000


class DiffusionTargetError(RuntimeError):
    """Raised when the requested diffusion rate cannot be reached."""

    def __init__(self, target, achieved, n_cascades):
        super().__init__(
            f"diffusion rate {target:g} not reached after {n_cascades} cascades "
            f"(achieved {achieved:.4f})"
        )
        self.target = target
        self.achieved = achieved
        self.n_cascades = n_cascades


@dataclass(frozen=True)
class DiffusionParams:
    """Cascade generation settings.

    ``alpha`` is the mean waiting time, ``beta`` the per-arc transmission
    probability and ``delta_target`` the fraction of arcs the union of all
    cascades must cover. ``horizon=None`` means ``10 * alpha * n``.
    """

    alpha: float
    beta: float
    delta_target: float = 0.5
    horizon: Optional[float] = None
    max_cascades: int = DEFAULT_MAX_CASCADES

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not 0.0 < self.delta_target <= 1.0:
            raise ValueError("delta_target must lie in (0, 1]")
        if self.horizon is not None and not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.max_cascades < 1:
            raise ValueError("max_cascades must be at least 1")

    def horizon_for(self, g: Graph) -> float:
        if self.horizon is not None:
            return float(self.horizon)
        return 10.0 * self.alpha * max(g.n, 1)


@dataclass(frozen=True, eq=False)
class Cascade:
    """Infected nodes (ascending), their times and infecting arcs.

    ``parents`` holds edge ids of the underlying graph and ``parent_nodes``
    the matching source nodes, both -1 for the seed. They are ``None`` for
    cascades read from disk, where only times are known.
    """

    n: int
    seed: int
    nodes: np.ndarray
    node_times: np.ndarray
    parents: Optional[np.ndarray] = None
    parent_nodes: Optional[np.ndarray] = None

    @property
    def times(self) -> np.ndarray:
        t = np.full(self.n, np.inf)
        t[self.nodes] = self.node_times
        return t

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def transmissions(self) -> np.ndarray:
        """Edge ids over which the infection passed."""
        if self.parents is None:
            raise ValueError("cascade carries no transmission ground truth")
        return self.parents[self.parents >= 0]

    def time_of(self, u: int) -> float:
        pos = np.searchsorted(self.nodes, u)
        if pos < self.nodes.shape[0] and self.nodes[pos] == u:
            return float(self.node_times[pos])
        return math.inf

    @classmethod
    def from_dense(cls, times, seed=None, g: Optional[Graph] = None, parents=None) -> "Cascade":
        """Build from a dense time vector.

        ``parents`` (edge ids per node, -1 where none) requires ``g``.
        """
        times = np.asarray(times, dtype=float)
        nodes = np.flatnonzero(np.isfinite(times))
        if seed is None:
            seed = int(nodes[np.argmin(times[nodes])]) if nodes.size else -1
        par = pnodes = None
        if parents is not None:
            if g is None:
                raise ValueError("parents need the graph to resolve source nodes")
            par = np.asarray(parents, dtype=np.int64)[nodes]
            pnodes = np.where(par >= 0, g.src[np.maximum(par, 0)], -1)
        return cls(times.shape[0], int(seed), nodes, times[nodes], par, pnodes)


@dataclass(eq=False)
class CascadeSet:
    """Ordered collection of cascades over one graph of ``n`` nodes."""

    n: int
    cascades: List[Cascade]

    def __post_init__(self):
        for c in self.cascades:
            if c.n != self.n:
                raise ValueError("all cascades must share the node count")

    def __len__(self):
        return len(self.cascades)

    def __iter__(self):
        return iter(self.cascades)

    def __getitem__(self, i):
        return self.cascades[i]

    @property
    def seeds(self) -> np.ndarray:
        return np.array([c.seed for c in self.cascades], dtype=np.int64)

    def time_matrix(self) -> np.ndarray:
        """Dense ``(N_c, n)`` matrix of infection times; small sets only."""
        out = np.full((len(self), self.n), np.inf)
        for i, c in enumerate(self.cascades):
            out[i, c.nodes] = c.node_times
        return out

    def node_major(self):
        """Per-node infection records as CSR ``(ptr, cascade ids, times)``.

        Cascade ids within each node are ascending.
        """
        if not self.cascades:
            return (
                np.zeros(self.n + 1, dtype=np.int64),
                np.empty(0, dtype=np.int64),
                np.empty(0),
            )
        nodes = np.concatenate([c.nodes for c in self.cascades])
        times = np.concatenate([c.node_times for c in self.cascades])
        cid = np.repeat(
            np.arange(len(self), dtype=np.int64), [c.size for c in self.cascades]
        )
        order = np.argsort(nodes, kind="stable")
        ptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(nodes, minlength=self.n), out=ptr[1:])
        return ptr, cid[order], times[order]


@dataclass(eq=False)
class DiffusionNetwork:
    """The subgraph of G carried by at least one cascade transmission.

    Per-edge data is indexed by edge ids of the underlying graph ``base``:
    ``attendance[e] == |C_e|`` and the cascade ids of ``C_e`` are
    ``cascade_ids[ptr[e]:ptr[e+1]]`` in ascending order.
    """

    base: Graph
    edge_ids: np.ndarray
    attendance: np.ndarray
    ptr: np.ndarray
    cascade_ids: np.ndarray

    @property
    def m(self) -> int:
        return int(self.edge_ids.shape[0])

    @property
    def graph(self) -> Graph:
        return induced_subgraph(self.base, self.edge_ids)

    def contains(self, eid: int) -> bool:
        return 0 <= eid < self.base.m and self.attendance[eid] > 0

    def cascades_on(self, eid: int) -> np.ndarray:
        return self.cascade_ids[self.ptr[eid] : self.ptr[eid + 1]]


def build_diffusion_network(g: Graph, cascades: Sequence[Cascade]) -> DiffusionNetwork:
    """Assemble G* and its per-edge cascade index from ground-truth cascades."""
    parts = [c.transmissions for c in cascades]
    eids = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    cid = np.repeat(np.arange(len(parts), dtype=np.int64), [p.size for p in parts])
    order = np.lexsort((cid, eids))
    counts = np.bincount(eids, minlength=g.m).astype(np.int64)
    ptr = np.zeros(g.m + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    return DiffusionNetwork(
        base=g,
        edge_ids=np.flatnonzero(counts),
        attendance=counts,
        ptr=ptr,
        cascade_ids=cid[order],
    )


def simulate_cascade(
    g: Graph, seed: int, p: DiffusionParams, rng: np.random.Generator
) -> Cascade:
    """Run one cascade from ``seed``.

    Every arc draws a firing uniform and an exponential waiting time up
    front (``2 m`` draws), so raising ``beta`` with the same generator state
    can only add firing arcs.
    """
    if not 0 <= seed < g.n:
        raise GraphError(f"seed {seed} out of range")
    fires = rng.random(g.m) < p.beta
    wait = rng.exponential(p.alpha, g.m)
    times, parent = _kernels.cascade_times(
        g.indptr, g.dst, int(seed), fires, wait, p.horizon_for(g)
    )
    nodes = np.flatnonzero(np.isfinite(times))
    par = parent[nodes]
    pnodes = np.where(par >= 0, g.src[np.maximum(par, 0)], -1)
    return Cascade(g.n, int(seed), nodes, times[nodes], par, pnodes)


def generate_cascade_set(
    g: Graph,
    p: DiffusionParams,
    rng: np.random.Generator,
    seeds: Optional[Sequence[int]] = None,
):
    """Simulate cascades from random seeds until G* covers ``delta_target``.

    Returns ``(CascadeSet, DiffusionNetwork)``. ``seeds`` optionally fixes the
    seed sequence (cycled); otherwise each seed is uniform over the nodes.
    """
    if g.m == 0:
        raise DiffusionTargetError(p.delta_target, 0.0, 0)
    need = math.ceil(p.delta_target * g.m - 1e-9)
    covered = np.zeros(g.m, dtype=bool)
    n_cov = 0
    out: List[Cascade] = []
    if p.beta == 0.0:
        # no arc can ever fire
        raise DiffusionTargetError(p.delta_target, 0.0, 0)
    for i in range(p.max_cascades):
        s = int(seeds[i % len(seeds)]) if seeds is not None else int(rng.integers(g.n))
        c = simulate_cascade(g, s, p, rng)
        out.append(c)
        tr = c.transmissions
        fresh = tr[~covered[tr]]
        covered[fresh] = True
        n_cov += fresh.size
        if n_cov >= need:
            break
    else:
        raise DiffusionTargetError(p.delta_target, n_cov / g.m, len(out))
    log.debug("%d cascades cover %d/%d arcs", len(out), n_cov, g.m)
    return CascadeSet(g.n, out), build_diffusion_network(g, out)


def diffusion_rate(g: Graph, dn: DiffusionNetwork) -> float:
    if g.m == 0:
        return 0.0
    return dn.m / g.m


def write_cascades(cs: CascadeSet, g: Graph, path: Union[str, Path]) -> None:
    """One ``cascade_id node_label time`` line per infection event."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# cascade_id node_label time\n")
        for i, c in enumerate(cs):
            order = np.argsort(c.node_times, kind="stable")
            for u, t in zip(c.nodes[order].tolist(), c.node_times[order].tolist()):
                fh.write(f"{i} {g.label(u)} {t!r}\n")


def read_cascades(path: Union[str, Path], g: Graph) -> CascadeSet:
    """Parse a cascade file written by :func:`write_cascades`.

    The result holds infection times only; each seed is taken as the
    earliest infected node of its cascade.
    """
    index = g.label_index()
    rows: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'cascade node time'")
            try:
                cid, u, t = int(parts[0]), index[parts[1]], float(parts[2])
            except KeyError:
                raise ValueError(f"{path}:{lineno}: unknown node {parts[1]!r}") from None
            rows.setdefault(cid, {})[u] = t
    cascades = []
    for cid in sorted(rows):
        times = np.full(g.n, np.inf)
        for u, t in rows[cid].items():
            times[u] = t
        cascades.append(Cascade.from_dense(times))
    return CascadeSet(g.n, cascades)
