"""Link-tracing samplers: diffusion-aware (DNS), breadth-first and random walk.

Samplers only see a :class:`LocalView`: the out-neighbour oracle of the
underlying graph plus the infection times of every cascade. Transmission
arcs and the diffusion network are never reachable from it.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from . import _kernels
from .cascade import CascadeSet
from .graph import Graph

__all__ = [
    "LocalView",
    "SamplerConfig",
    "SampleTrace",
    "SamplingError",
    "TeleportPolicy",
    "time_inferred_cascades",
    "transmission_prob",
    "link_infection_prob",
    "dns_sample",
    "bfs_sample",
    "rw_sample",
    "random_walk",
    "SAMPLERS",
]


class SamplingError(RuntimeError):
    pass


class TeleportPolicy(str, Enum):
    RANDOM_NODE = "restart-random-node"
    RANDOM_VISITED = "restart-random-visited"


class LocalView:
    """What a crawler can observe: out-neighbours and infection times."""

    def __init__(self, g: Graph, ptr: np.ndarray, casc: np.ndarray, times: np.ndarray, n_cascades: int):
        if ptr.shape[0] != g.n + 1:
            raise ValueError("time index does not match the graph")
        self._g = g
        self._ptr = ptr
        self._casc = casc
        self._times = times
        self.n_cascades = int(n_cascades)
        self._prob_cache: dict = {}

    @classmethod
    def from_cascades(cls, g: Graph, cs: CascadeSet) -> "LocalView":
        ptr, casc, times = cs.node_major()
        return cls(g, ptr, casc, times, len(cs))

    @property
    def n(self) -> int:
        return self._g.n

    @property
    def m(self) -> int:
        return self._g.m

    @property
    def graph(self) -> Graph:
        return self._g

    def neighbors_out(self, u: int) -> np.ndarray:
        return self._g.neighbors_out(u)

    def infections(self, u: int) -> Tuple[np.ndarray, np.ndarray]:
        """Cascade ids (ascending) that reached ``u`` and the times they did."""
        lo, hi = self._ptr[u], self._ptr[u + 1]
        return self._casc[lo:hi], self._times[lo:hi]

    def time(self, c: int, u: int) -> float:
        ids, ts = self.infections(u)
        pos = np.searchsorted(ids, c)
        if pos < ids.shape[0] and ids[pos] == c:
            return float(ts[pos])
        return math.inf

    def edge_probs(self, alpha: float) -> np.ndarray:
        """``P_e`` for every arc, computed from infection times only."""
        key = float(alpha)
        if key not in self._prob_cache:
            if not key > 0:
                raise ValueError("alpha must be positive")
            prob, _ = _kernels.edge_probabilities(
                self._g.src, self._g.dst, self._ptr, self._casc, self._times, key
            )
            prob.setflags(write=False)
            self._prob_cache[key] = prob
        return self._prob_cache[key]


def _as_pair(view: LocalView, e) -> Tuple[int, int]:
    if isinstance(e, (tuple, list, np.ndarray)) and len(e) == 2:
        return int(e[0]), int(e[1])
    eid = int(e)
    g = view.graph
    return int(g.src[eid]), int(g.dst[eid])


def time_inferred_cascades(view: LocalView, e) -> np.ndarray:
    """Cascades that plausibly crossed arc ``e = (u, v)``: ``t(u) < t(v) < inf``."""
    u, v = _as_pair(view, e)
    cu, tu = view.infections(u)
    cv, tv = view.infections(v)
    common, iu, iv = np.intersect1d(cu, cv, assume_unique=True, return_indices=True)
    return common[tu[iu] < tv[iv]]


def transmission_prob(delta: float, alpha: float) -> float:
    """Likelihood ``exp(-delta / alpha)`` that a cascade crossed an arc in ``delta`` time."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if delta < 0:
        raise ValueError("delay must be non-negative")
    return math.exp(-delta / alpha)


def link_infection_prob(view: LocalView, e, alpha: float) -> float:
    """Average of ``exp(-(t_v - t_u) / alpha)`` over the time-inferred cascades of ``e``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    u, v = _as_pair(view, e)
    cu, tu = view.infections(u)
    cv, tv = view.infections(v)
    _, iu, iv = np.intersect1d(cu, cv, assume_unique=True, return_indices=True)
    delta = tv[iv] - tu[iu]
    delta = delta[delta > 0]
    if delta.size == 0:
        return 0.0
    total = 0.0
    for d in delta.tolist():
        total += transmission_prob(d, alpha)
    return total / delta.size


@dataclass
class SamplerConfig:
    """Budget and knobs shared by all samplers.

    ``stall_limit`` forces a teleport after that many consecutive walk
    steps that add no new arc to the sample (0 disables it).
    ``assumed_edges`` is the edge count behind the random walk's ``1/|E|``
    visiting probability; ``None`` uses the true count.
    """

    budget: int
    alpha: float = 1.0
    start: Union[int, str] = "random"
    teleport_policy: TeleportPolicy = TeleportPolicy.RANDOM_NODE
    stall_limit: int = 100
    max_steps: Optional[int] = None
    assumed_edges: Optional[int] = None

    def __post_init__(self):
        self.teleport_policy = TeleportPolicy(self.teleport_policy)
        if self.budget < 1:
            raise ValueError("budget must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if isinstance(self.start, str) and self.start != "random":
            raise ValueError("start must be a node id or 'random'")

    @classmethod
    def from_rate(cls, mu: float, m: int, **kwargs) -> "SamplerConfig":
        if not 0 < mu <= 1:
            raise ValueError("sampling rate must lie in (0, 1]")
        return cls(budget=max(1, math.ceil(mu * m - 1e-9)), **kwargs)


@dataclass
class SampleTrace:
    """Ordered walk events plus the sampled subgraph.

    Each event is a draw (``edge >= 0``) or a teleport (``edge == -1``).
    ``pi`` is NaN for teleports and for every event of an unweighted trace.
    """

    method: str
    edge: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    pi: np.ndarray
    sampled_edges: np.ndarray
    sampled_nodes: np.ndarray
    weighted: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def is_draw(self) -> np.ndarray:
        return self.edge >= 0

    @property
    def draw_edges(self) -> np.ndarray:
        return self.edge[self.is_draw]

    @property
    def draw_pis(self) -> np.ndarray:
        return self.pi[self.is_draw]

    @property
    def draws(self):
        """``(edge id, pi, step)`` for every draw, pi ``None`` when unweighted."""
        out = []
        for step in np.flatnonzero(self.is_draw).tolist():
            p = None if not self.weighted else float(self.pi[step])
            out.append((int(self.edge[step]), p, step))
        return out

    @property
    def n_draws(self) -> int:
        return int(np.count_nonzero(self.is_draw))

    @property
    def n_teleports(self) -> int:
        return int(self.edge.shape[0] - self.n_draws)

    def write_csv(self, path: Union[str, Path], g: Graph) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "src_label", "dst_label", "pi", "event"])
            for i in range(self.edge.shape[0]):
                draw = self.edge[i] >= 0
                p = repr(float(self.pi[i])) if draw and self.weighted else ""
                w.writerow(
                    [i, g.label(int(self.src[i])), g.label(int(self.dst[i])), p,
                     "draw" if draw else "teleport"]
                )


def _check(view: LocalView, cfg: SamplerConfig):
    if view.m == 0:
        raise SamplingError("graph has no edges")
    if cfg.budget > view.m:
        raise SamplingError(f"budget {cfg.budget} exceeds edge count {view.m}")


def _start_node(view, cfg, rng) -> int:
    if cfg.start == "random":
        return int(rng.integers(view.n))
    s = int(cfg.start)
    if not 0 <= s < view.n:
        raise SamplingError(f"start node {s} out of range")
    return s


def _max_steps(view, cfg):
    if cfg.max_steps is not None:
        return int(cfg.max_steps)
    return max(1_000_000, 200 * view.m)


def _walk(view: LocalView, weights, examine_all, cfg, rng, k=None, n_steps=None):
    """Drive the walk kernel block by block.

    Stops once ``k`` distinct arcs are sampled or after ``n_steps`` steps.
    """
    g = view.graph
    n, m = g.n, g.m
    k = cfg.budget if k is None else k
    limit = n_steps if n_steps is not None else _max_steps(view, cfg)
    start = _start_node(view, cfg, rng)

    seen = np.zeros(m, dtype=np.bool_)
    visited = np.zeros(n, dtype=np.bool_)
    visited_list = np.zeros(n, dtype=np.int64)
    visited[start] = True
    visited_list[0] = start
    state = np.array([start, 0, 0, 1, 1], dtype=np.int64)
    teleport_visited = cfg.teleport_policy is TeleportPolicy.RANDOM_VISITED
    stall = 0 if n_steps is not None else int(cfg.stall_limit)
    weights = np.ascontiguousarray(weights, dtype=np.float64)

    blocks = []
    done = 0
    block = min(max(4096, 4 * k), limit)
    while done < limit and state[2] < k:
        size = min(block, limit - done)
        u = rng.random(size)
        eid = np.empty(size, dtype=np.int64)
        src = np.empty(size, dtype=np.int64)
        dst = np.empty(size, dtype=np.int64)
        steps = _kernels.walk_steps(
            g.indptr, g.dst, weights, examine_all, teleport_visited, u, state,
            seen, visited, visited_list, k, stall, eid, src, dst,
        )
        blocks.append((eid[:steps], src[:steps], dst[:steps]))
        done += steps
    if n_steps is None and state[2] < k:
        raise SamplingError(f"sample stalled at {state[2]}/{k} edges after {done} steps")
    eid, src, dst = (np.concatenate(x) for x in zip(*blocks))
    return eid, src, dst, np.flatnonzero(seen), visited_list[: state[3]].copy()


def dns_sample(view: LocalView, cfg: SamplerConfig, rng: np.random.Generator) -> SampleTrace:
    """Diffusion-aware walk.

    At each node every outgoing arc joins the sample; the next hop is drawn
    with probability proportional to ``P_e`` and recorded with
    ``pi = P_e`` (unnormalised). Nodes whose arcs all have ``P_e = 0``
    trigger a teleport, which records no draw.
    """
    _check(view, cfg)
    prob = view.edge_probs(cfg.alpha)
    eid, src, dst, edges, nodes = _walk(view, prob, True, cfg, rng)
    pi = np.where(eid >= 0, prob[np.maximum(eid, 0)], np.nan)
    return SampleTrace("dns", eid, src, dst, pi, edges, np.sort(nodes))


def rw_sample(view: LocalView, cfg: SamplerConfig, rng: np.random.Generator) -> SampleTrace:
    """Uniform random walk; each traversed arc carries ``pi = 1/|E|``."""
    _check(view, cfg)
    ones = np.ones(view.m)
    eid, src, dst, edges, nodes = _walk(view, ones, False, cfg, rng)
    m_assumed = cfg.assumed_edges or view.m
    pi = np.where(eid >= 0, 1.0 / m_assumed, np.nan)
    return SampleTrace("rw", eid, src, dst, pi, edges, np.sort(nodes))


def random_walk(view: LocalView, n_steps: int, rng: np.random.Generator, start: Union[int, str] = "random"):
    """Fixed-length uniform walk, teleporting only at sinks.

    Returns ``(edge ids, src, dst)`` per step with edge ``-1`` on teleports.
    """
    cfg = SamplerConfig(budget=1, start=start)
    eid, src, dst, _, _ = _walk(
        view, np.ones(view.m), False, cfg, rng, k=np.iinfo(np.int64).max, n_steps=n_steps
    )
    return eid, src, dst


def bfs_sample(view: LocalView, cfg: SamplerConfig, rng: np.random.Generator) -> SampleTrace:
    """FIFO expansion over out-arcs in ascending neighbour order.

    Every newly examined arc is a draw; the trace is unweighted. When the
    frontier empties the crawl restarts according to the teleport policy; a
    restart that yields nothing new is followed by one at a random node.
    """
    _check(view, cfg)
    g = view.graph
    k = cfg.budget
    start = _start_node(view, cfg, rng)
    seen = np.zeros(g.m, dtype=bool)
    found = np.zeros(g.n, dtype=bool)
    order = [start]
    found[start] = True
    queue = deque([start])
    ev_e, ev_s, ev_d = [], [], []
    n_seen = 0
    limit = _max_steps(view, cfg)
    cur = start
    while n_seen < k:
        if len(ev_e) >= limit:
            raise SamplingError(f"sample stalled at {n_seen}/{k} edges")
        if not queue:
            jumped = bool(ev_e) and ev_e[-1] < 0
            if cfg.teleport_policy is TeleportPolicy.RANDOM_VISITED and not jumped:
                nxt = order[int(rng.integers(len(order)))]
            else:
                nxt = int(rng.integers(g.n))
            ev_e.append(-1)
            ev_s.append(cur)
            ev_d.append(nxt)
            cur = nxt
            if not found[nxt]:
                found[nxt] = True
                order.append(nxt)
            # a restart re-expands the node even if it was reached before
            queue.append(nxt)
            continue
        v = queue.popleft()
        cur = v
        for e in range(int(g.indptr[v]), int(g.indptr[v + 1])):
            if seen[e]:
                continue
            seen[e] = True
            n_seen += 1
            w = int(g.dst[e])
            ev_e.append(e)
            ev_s.append(v)
            ev_d.append(w)
            if not found[w]:
                found[w] = True
                order.append(w)
                queue.append(w)
            if n_seen >= k:
                break
    eid = np.array(ev_e, dtype=np.int64)
    return SampleTrace(
        "bfs",
        eid,
        np.array(ev_s, dtype=np.int64),
        np.array(ev_d, dtype=np.int64),
        np.full(eid.shape[0], np.nan),
        np.flatnonzero(seen),
        np.sort(np.array(order, dtype=np.int64)),
        weighted=False,
    )


SAMPLERS = {"dns": dns_sample, "bfs": bfs_sample, "rw": rw_sample}
