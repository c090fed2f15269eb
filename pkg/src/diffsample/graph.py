"""Immutable directed graph in CSR form.

Edges are stored sorted by ``(src, dst)`` so that an edge id is simply its
position in the out-adjacency arrays. Every other module addresses per-edge
data (attendance counts, link probabilities, sampled masks) by that id.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

log = logging.getLogger(__name__)

__all__ = [
    "Graph",
    "GraphError",
    "EdgeListError",
    "from_edges",
    "load_edge_list",
    "write_edge_list",
    "neighbors_out",
    "neighbors_in",
    "induced_subgraph",
]


class GraphError(ValueError):
    pass


class EdgeListError(GraphError):
    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Graph:
    """Directed simple graph over nodes ``0..n-1``.

    Build instances with :func:`from_edges` or :func:`load_edge_list`; the
    constructor trusts its arguments.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    indptr: np.ndarray
    in_indptr: np.ndarray
    in_edges: np.ndarray
    labels: Optional[Tuple[str, ...]] = None
    dropped_self_loops: int = 0
    dropped_duplicates: int = 0

    @property
    def m(self) -> int:
        return int(self.src.shape[0])

    @property
    def indices(self) -> np.ndarray:
        return self.dst

    def out_degree(self) -> np.ndarray:
        return np.diff(self.indptr)

    def in_degree(self) -> np.ndarray:
        return np.diff(self.in_indptr)

    def _check_node(self, u):
        if not 0 <= u < self.n:
            raise GraphError(f"node {u} out of range for graph with n={self.n}")

    def neighbors_out(self, u: int) -> np.ndarray:
        self._check_node(u)
        return self.dst[self.indptr[u] : self.indptr[u + 1]]

    def neighbors_in(self, u: int) -> np.ndarray:
        self._check_node(u)
        return self.src[self.in_edges[self.in_indptr[u] : self.in_indptr[u + 1]]]

    def out_edge_ids(self, u: int) -> np.ndarray:
        self._check_node(u)
        return np.arange(self.indptr[u], self.indptr[u + 1])

    def edge_id(self, u: int, v: int) -> int:
        """Id of edge ``u -> v``, or -1 if absent."""
        if not (0 <= u < self.n and 0 <= v < self.n):
            return -1
        lo, hi = int(self.indptr[u]), int(self.indptr[u + 1])
        pos = lo + int(np.searchsorted(self.dst[lo:hi], v))
        if pos < hi and self.dst[pos] == v:
            return pos
        return -1

    def has_edge(self, u: int, v: int) -> bool:
        return self.edge_id(u, v) >= 0

    def edge_ids(self, pairs) -> np.ndarray:
        """Vectorised :meth:`edge_id` for an ``(k, 2)`` array of pairs."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        out = np.full(pairs.shape[0], -1, dtype=np.int64)
        if pairs.shape[0] == 0 or self.m == 0:
            return out
        inside = np.all((pairs >= 0) & (pairs < self.n), axis=1)
        key = self.src * self.n + self.dst
        q = pairs[inside, 0] * self.n + pairs[inside, 1]
        pos = np.minimum(np.searchsorted(key, q), self.m - 1)
        out[inside] = np.where(key[pos] == q, pos, -1)
        return out

    def edges(self) -> Iterator[Tuple[int, int]]:
        return zip(self.src.tolist(), self.dst.tolist())

    def label(self, u: int) -> str:
        if self.labels is None:
            return str(u)
        return self.labels[u]

    def label_index(self) -> dict:
        """Map from label to node id."""
        if self.labels is None:
            return {str(u): u for u in range(self.n)}
        return {lab: u for u, lab in enumerate(self.labels)}

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m})"


def from_edges(
    n: int,
    pairs: Union[np.ndarray, Iterable[Sequence[int]]],
    labels: Optional[Sequence[str]] = None,
) -> Graph:
    """Build a graph from ``(src, dst)`` pairs.

    Self-loops and repeated pairs are dropped and counted on the result.
    """
    arr = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs)
    arr = arr.astype(np.int64).reshape(-1, 2)
    if n < 0:
        raise GraphError("node count must be non-negative")
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise GraphError(f"edge endpoint out of range for n={n}")
    if labels is not None:
        labels = tuple(str(x) for x in labels)
        if len(labels) != n:
            raise GraphError("labels must have length n")

    loops = arr[:, 0] == arr[:, 1]
    n_loops = int(loops.sum())
    arr = arr[~loops]
    key = arr[:, 0] * max(n, 1) + arr[:, 1]
    ukey = np.unique(key)
    n_dups = int(len(key) - len(ukey))

    src = (ukey // max(n, 1)).astype(np.int64)
    dst = (ukey % max(n, 1)).astype(np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    in_edges = np.lexsort((src, dst)).astype(np.int64)
    in_indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(dst, minlength=n), out=in_indptr[1:])
    for a in (src, dst, indptr, in_edges, in_indptr):
        a.setflags(write=False)
    return Graph(
        n=int(n),
        src=src,
        dst=dst,
        indptr=indptr,
        in_indptr=in_indptr,
        in_edges=in_edges,
        labels=labels,
        dropped_self_loops=n_loops,
        dropped_duplicates=n_dups,
    )


def load_edge_list(path: Union[str, Path], directed: bool = True) -> Graph:
    """Read a whitespace separated edge list.

    Lines starting with ``#`` and blank lines are skipped. Labels are
    remapped to dense ids in order of first appearance. With
    ``directed=False`` every line contributes both arcs.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise GraphError(f"cannot read edge list {path}: {exc}") from exc

    ids: dict = {}
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise EdgeListError(path, lineno, f"expected two labels, got {line!r}")
        a = ids.setdefault(parts[0], len(ids))
        b = ids.setdefault(parts[1], len(ids))
        pairs.append((a, b))
        if not directed:
            pairs.append((b, a))

    labels = list(ids)
    g = from_edges(len(labels), np.array(pairs, dtype=np.int64).reshape(-1, 2), labels)
    # an undirected line contributes both arcs, so its self-loop counts twice
    loops = g.dropped_self_loops if directed else g.dropped_self_loops // 2
    if loops or g.dropped_duplicates:
        log.info(
            "%s: dropped %d self-loops and %d duplicate arcs",
            path,
            loops,
            g.dropped_duplicates,
        )
    if not directed:
        g = replace(g, dropped_self_loops=loops)
    return g


def write_edge_list(g: Graph, path: Union[str, Path]) -> None:
    """Write one ``src<TAB>dst`` line per arc using node labels."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={g.n} m={g.m}\n")
        for u, v in g.edges():
            fh.write(f"{g.label(u)}\t{g.label(v)}\n")


def neighbors_out(g: Graph, u: int) -> np.ndarray:
    return g.neighbors_out(u)


def neighbors_in(g: Graph, u: int) -> np.ndarray:
    return g.neighbors_in(u)


def induced_subgraph(g: Graph, edges) -> Graph:
    """Subgraph holding exactly ``edges`` and their endpoints.

    ``edges`` may be an array of edge ids (1-d) or of ``(src, dst)`` pairs.
    Nodes are relabelled densely in ascending order of their id in ``g``;
    labels are inherited from ``g``.
    """
    arr = np.asarray(edges, dtype=np.int64)
    if arr.ndim == 2 or (arr.ndim == 1 and arr.size == 0):
        eids = g.edge_ids(arr.reshape(-1, 2)) if arr.size else arr.reshape(0)
        if np.any(eids < 0):
            bad = arr.reshape(-1, 2)[np.flatnonzero(eids < 0)[0]]
            raise GraphError(f"edge {tuple(bad)} not present in graph")
    else:
        eids = arr
        if np.any((eids < 0) | (eids >= g.m)):
            raise GraphError("edge id out of range")
    eids = np.unique(eids)
    s, d = g.src[eids], g.dst[eids]
    nodes = np.unique(np.concatenate([s, d]))
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    labels = [g.label(int(u)) for u in nodes]
    return from_edges(len(nodes), np.column_stack([remap[s], remap[d]]), labels)
