"""Synthetic underlying networks: stochastic Kronecker and Forest Fire."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph, from_edges

__all__ = [
    "KroneckerParams",
    "ForestFireParams",
    "GeneratorError",
    "KRONECKER_INITIATORS",
    "gen_kronecker",
    "kronecker_probability_matrix",
    "kronecker_ball_drops",
    "gen_forest_fire",
]

KRONECKER_INITIATORS = {
    "random": ((0.9, 0.1), (0.1, 0.9)),
    "hierarchical": ((0.5, 0.5), (0.5, 0.5)),
    "core-periphery": ((0.9, 0.5), (0.5, 0.3)),
}


class GeneratorError(ValueError):
    pass


@dataclass(frozen=True)
class KroneckerParams:
    initiator: Sequence[Sequence[float]]
    iterations: int
    target_edges: int

    def __post_init__(self):
        a = np.asarray(self.initiator, dtype=float)
        if a.shape != (2, 2):
            raise GeneratorError("initiator must be 2x2")
        if np.any(a < 0) or np.any(a > 1):
            raise GeneratorError("initiator entries must lie in [0, 1]")
        if a.sum() <= 0:
            raise GeneratorError("initiator must have a positive entry")
        if self.iterations < 1:
            raise GeneratorError("iterations must be positive")
        if self.target_edges < 1:
            raise GeneratorError("target_edges must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.initiator, dtype=float)

    @property
    def n(self) -> int:
        return 2**self.iterations


@dataclass(frozen=True)
class ForestFireParams:
    n: int
    starting_nodes: int = 5
    p_fwd: float = 0.12
    p_bwd: float = 0.1
    p_decay: float = 1.0
    p_orphan: float = 0.0

    def __post_init__(self):
        for name in ("p_fwd", "p_bwd", "p_decay", "p_orphan"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise GeneratorError(f"{name} must lie in [0, 1]")
        if self.starting_nodes < 1:
            raise GeneratorError("starting_nodes must be positive")
        if self.starting_nodes > self.n:
            raise GeneratorError("starting_nodes cannot exceed n")


def kronecker_probability_matrix(initiator, k: int) -> np.ndarray:
    """Cell probabilities of the ``k``-th Kronecker power, normalised to 1."""
    a = np.asarray(initiator, dtype=float)
    a = a / a.sum()
    out = a
    for _ in range(k - 1):
        out = np.kron(out, a)
    return out


def kronecker_ball_drops(initiator, k: int, size: int, rng: np.random.Generator):
    """Draw ``size`` raw cells by recursive quadrant descent.

    Returns ``(rows, cols)``; self-loops and repeats are kept.
    """
    a = np.asarray(initiator, dtype=float).ravel()
    quad = rng.choice(4, size=(size, k), p=a / a.sum())
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    rows = (quad // 2) @ weights
    cols = (quad % 2) @ weights
    return rows.astype(np.int64), cols.astype(np.int64)


def _max_simple_edges(initiator, k):
    a = np.asarray(initiator, dtype=float)
    support = int(np.count_nonzero(a))
    diag = int(np.count_nonzero(np.diag(a)))
    return support**k - diag**k


def gen_kronecker(params: KroneckerParams, rng: np.random.Generator) -> Graph:
    """Stochastic Kronecker graph with exactly ``target_edges`` arcs.

    Arcs are placed one ball at a time; self-loops and repeats are redrawn.
    """
    k, m = params.iterations, params.target_edges
    n = params.n
    if m > n * n - n:
        raise GeneratorError(f"{m} edges do not fit in a simple digraph on {n} nodes")
    if m > _max_simple_edges(params.matrix, k):
        raise GeneratorError("initiator support cannot produce that many distinct non-loop edges")

    keys = np.empty(0, dtype=np.int64)
    for _ in range(10_000):
        deficit = m - keys.size
        if deficit <= 0:
            break
        # oversample a little to limit the number of rounds
        r, c = kronecker_ball_drops(params.matrix, k, deficit + deficit // 4 + 8, rng)
        cand = (r * n + c)[r != c]
        merged = np.concatenate([keys, cand])
        _, first = np.unique(merged, return_index=True)
        keys = merged[np.sort(first)][:m]
    else:  # pragma: no cover
        raise GeneratorError("Kronecker sampling failed to converge")
    return from_edges(n, np.column_stack([keys // n, keys % n]))


def _burn_count(rng, p, decay_factor):
    """Geometric fan-out with mean ``p / (1 - p)`` scaled by ``decay_factor``."""
    if p <= 0.0 or decay_factor <= 0.0:
        return 0
    if p >= 1.0:
        return np.iinfo(np.int64).max
    mean = p / (1.0 - p) * decay_factor
    return int(rng.geometric(1.0 / (1.0 + mean))) - 1


def gen_forest_fire(params: ForestFireParams, rng: np.random.Generator) -> Graph:
    """Forest Fire graph; new arcs point from each arriving node to what it burns."""
    n = params.n
    out_adj = [[] for _ in range(n)]
    in_adj = [[] for _ in range(n)]
    edges = []

    for new in range(params.starting_nodes, n):
        if params.p_orphan > 0.0 and rng.random() < params.p_orphan:
            continue
        amb = int(rng.integers(new))
        burned = {amb}
        queue = deque([(amb, 0)])
        while queue:
            v, depth = queue.popleft()
            factor = params.p_decay**depth
            for nbrs, p in ((out_adj[v], params.p_fwd), (in_adj[v], params.p_bwd)):
                x = _burn_count(rng, p, factor)
                if x == 0:
                    continue
                fresh = [w for w in nbrs if w not in burned]
                if not fresh:
                    continue
                if x < len(fresh):
                    pick = rng.choice(len(fresh), size=x, replace=False)
                    fresh = [fresh[i] for i in sorted(pick)]
                for w in fresh:
                    burned.add(w)
                    queue.append((w, depth + 1))
        for w in sorted(burned):
            out_adj[new].append(w)
            in_adj[w].append(new)
            edges.append((new, w))

    return from_edges(n, np.array(edges, dtype=np.int64).reshape(-1, 2))
