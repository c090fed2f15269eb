"""Hansen-Hurwitz ratio estimator and visiting-probability models."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse

from .cascade import Cascade
from .graph import Graph

__all__ = [
    "EstimationError",
    "EstimateResult",
    "hansen_hurwitz",
    "plain_mean",
    "node_visit_prob_oracle",
    "node_visit_prob_raw",
    "cascade_visit_prob",
    "transition_matrix",
]


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class EstimateResult:
    estimate: float
    n_draws: int
    method: str


def hansen_hurwitz(values: Sequence[float], pis: Sequence[float]) -> EstimateResult:
    """Ratio estimate ``sum(f/pi) / sum(1/pi)`` of a population mean.

    Summation runs in draw order.
    """
    f = np.asarray(values, dtype=np.float64)
    p = np.asarray(pis, dtype=np.float64)
    if f.shape != p.shape or f.ndim != 1:
        raise EstimationError("values and pis must be 1-d and of equal length")
    if f.size == 0:
        raise EstimationError("no draws to estimate from")
    if not np.all(p > 0):
        raise EstimationError("visiting probabilities must be positive")
    num = 0.0
    den = 0.0
    for fi, pi in zip(f.tolist(), p.tolist()):
        num += fi / pi
        den += 1.0 / pi
    return EstimateResult(num / den, int(f.size), "hansen-hurwitz")


def plain_mean(values: Sequence[float]) -> EstimateResult:
    f = np.asarray(values, dtype=np.float64)
    if f.size == 0:
        raise EstimationError("no values to average")
    total = 0.0
    for x in f.tolist():
        total += x
    return EstimateResult(total / f.size, int(f.size), "plain-mean")


def transition_matrix(g: Graph, edge_prob: np.ndarray) -> sparse.csr_matrix:
    """Row-normalised ``P_e`` chain; rows with no positive mass teleport uniformly.

    The dense teleport rows are not stored; see :func:`node_visit_prob_oracle`.
    """
    w = np.asarray(edge_prob, dtype=float)
    if w.shape != (g.m,):
        raise EstimationError("need one probability per edge")
    if np.any(w < 0):
        raise EstimationError("edge probabilities must be non-negative")
    row_sum = np.bincount(g.src, weights=w, minlength=g.n)
    scale = np.divide(1.0, row_sum, out=np.zeros_like(row_sum), where=row_sum > 0)
    data = w * scale[g.src]
    return sparse.csr_matrix((data, g.dst, g.indptr), shape=(g.n, g.n))


def node_visit_prob_oracle(
    g: Graph, edge_prob: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000
) -> np.ndarray:
    """Stationary node distribution of the walk that follows arcs by ``P_e``.

    Needs the whole graph, so it is a validation oracle rather than
    something a crawler could compute. Iterates the lazy chain
    ``(I + T) / 2``, which shares the stationary vector of ``T`` but
    converges on periodic chains as well.
    """
    n = g.n
    if n == 0:
        raise EstimationError("empty graph")
    T = transition_matrix(g, edge_prob)
    dead = np.asarray(T.sum(axis=1)).ravel() == 0
    TT = T.T.tocsr()
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        step = TT @ pi + pi[dead].sum() / n
        nxt = 0.5 * (pi + step)
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() <= tol:
            return nxt
        pi = nxt
    raise EstimationError(f"power iteration did not converge in {max_iter} steps")


def node_visit_prob_raw(
    g: Graph, edge_prob: np.ndarray, tol: float = 1e-10, max_iter: int = 100_000
) -> np.ndarray:
    """Fixed point of ``pi(u) = sum_v pi(v) P_{vu}`` with unnormalised ``P_e``.

    Computed as the normalised leading left eigenvector of the raw weight
    matrix (power iteration on the lazy form). Reported for comparison with
    :func:`node_visit_prob_oracle`; it is not a stationary distribution
    unless every row of ``P_e`` already sums to one.
    """
    w = np.asarray(edge_prob, dtype=float)
    A = sparse.csr_matrix((w, g.dst, g.indptr), shape=(g.n, g.n))
    AT = A.T.tocsr()
    pi = np.full(g.n, 1.0 / g.n)
    for _ in range(max_iter):
        nxt = pi + AT @ pi
        s = nxt.sum()
        if s <= 0:
            raise EstimationError("raw chain has no mass")
        nxt /= s
        if np.abs(nxt - pi).sum() <= tol:
            return nxt
        pi = nxt
    raise EstimationError(f"power iteration did not converge in {max_iter} steps")


def cascade_visit_prob(c: Cascade, alpha: float, g: Graph) -> float:
    """Product of ``exp(-delta/alpha)`` over the cascade's transmission arcs."""
    if not alpha > 0:
        raise EstimationError("alpha must be positive")
    tr = c.transmissions
    if tr.size == 0:
        return 1.0
    t = c.times
    delta = t[g.dst[tr]] - t[g.src[tr]]
    return math.exp(-float(delta.sum()) / alpha)
