"""Hot loops, each with a compiled and a fallback implementation.

``*_loop`` functions are written in the numba subset and compiled by
:func:`diffsample._accel.njit`. ``*_numpy`` functions are the fallbacks used
when numba is disabled. The public names at the bottom are bound to one or
the other according to :data:`diffsample._accel.USE_NUMBA`.
"""

import heapq

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from ._accel import njit, pick

# exponential draws of exactly zero would make a zero-weight arc, which the
# sparse fallback cannot store; both paths clamp to the same floor
MIN_WAIT = 1e-300


# --------------------------------------------------------------------------
# cascade propagation: Dijkstra over the arcs that fire


def _cascade_loop(indptr, dst, seed, fires, wait, horizon):
    n = indptr.shape[0] - 1
    times = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.bool_)
    times[seed] = 0.0
    heap = [(0.0, seed)]
    while len(heap) > 0:
        t, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for e in range(indptr[u], indptr[u + 1]):
            if not fires[e]:
                continue
            v = dst[e]
            if done[v]:
                continue
            w = wait[e]
            if w < MIN_WAIT:
                w = MIN_WAIT
            tv = t + w
            if tv > horizon:
                continue
            if tv < times[v]:
                times[v] = tv
                parent[v] = e
                heapq.heappush(heap, (tv, v))
    return times, parent


_cascade_jit = njit(_cascade_loop)


def _cascade_numpy(indptr, dst, seed, fires, wait, horizon):
    n = indptr.shape[0] - 1
    src = np.repeat(np.arange(n), np.diff(indptr))
    eids = np.flatnonzero(fires)
    w = np.maximum(wait[eids], MIN_WAIT)
    mat = sparse.csr_matrix((w, (src[eids], dst[eids])), shape=(n, n))
    limit = horizon if np.isfinite(horizon) else np.inf
    times, pred = csgraph.dijkstra(
        mat, directed=True, indices=int(seed), return_predecessors=True, limit=limit
    )
    parent = np.full(n, -1, dtype=np.int64)
    reached = np.flatnonzero(pred >= 0)
    if reached.size:
        key = src * n + dst
        q = pred[reached].astype(np.int64) * n + reached
        parent[reached] = np.searchsorted(key, q)
    times[times > horizon] = np.inf
    return times, parent


# --------------------------------------------------------------------------
# per-link infection probability from node-major infection times


def _edge_prob_loop(src, dst, node_ptr, node_casc, node_time, alpha):
    m = src.shape[0]
    prob = np.zeros(m)
    count = np.zeros(m, dtype=np.int64)
    for e in range(m):
        u = src[e]
        v = dst[e]
        i = node_ptr[u]
        iend = node_ptr[u + 1]
        j = node_ptr[v]
        jend = node_ptr[v + 1]
        acc = 0.0
        c = 0
        while i < iend and j < jend:
            cu = node_casc[i]
            cv = node_casc[j]
            if cu < cv:
                i += 1
            elif cv < cu:
                j += 1
            else:
                delta = node_time[j] - node_time[i]
                if delta > 0.0:
                    acc += np.exp(-delta / alpha)
                    c += 1
                i += 1
                j += 1
        count[e] = c
        if c > 0:
            prob[e] = acc / c
    return prob, count


_edge_prob_jit = njit(_edge_prob_loop)


def _edge_prob_numpy(src, dst, node_ptr, node_casc, node_time, alpha, chunk=1 << 20):
    n = node_ptr.shape[0] - 1
    m = src.shape[0]
    prob = np.zeros(m)
    count = np.zeros(m, dtype=np.int64)
    if m == 0 or node_casc.size == 0:
        return prob, count
    owner = np.repeat(np.arange(n, dtype=np.int64), np.diff(node_ptr))
    # lookup table keyed by (cascade, node); sorted for searchsorted
    key = node_casc.astype(np.int64) * n + owner
    order = np.argsort(key, kind="stable")
    skey = key[order]
    stime = node_time[order]
    per_src = np.diff(node_ptr)[src]
    acc = np.zeros(m)
    start = 0
    while start < m:
        # grow the edge block until the expansion reaches the chunk size
        stop = start + 1
        total = per_src[start]
        while stop < m and total + per_src[stop] <= chunk:
            total += per_src[stop]
            stop += 1
        block = np.arange(start, stop)
        reps = per_src[block]
        eid = np.repeat(block, reps)
        offs = np.arange(eid.size) - np.repeat(np.cumsum(reps) - reps, reps)
        pos_u = node_ptr[src[eid]] + offs
        casc = node_casc[pos_u].astype(np.int64)
        t_u = node_time[pos_u]
        q = casc * n + dst[eid]
        hit = np.minimum(np.searchsorted(skey, q), skey.size - 1)
        found = skey[hit] == q
        t_v = np.where(found, stime[hit], np.inf)
        delta = t_v - t_u
        ok = found & (delta > 0.0)
        np.add.at(acc, eid[ok], np.exp(-delta[ok] / alpha))
        count += np.bincount(eid[ok], minlength=m)
        start = stop
    nz = count > 0
    prob[nz] = acc[nz] / count[nz]
    return prob, count


# --------------------------------------------------------------------------
# link-tracing walk shared by the DNS and RW samplers
#
# One uniform is consumed per step. A step either follows an arc chosen with
# probability proportional to ``weights`` (a draw) or teleports. ``state``
# holds [current node, steps since E_s last grew, |E_s|, visited count,
# E_s grew since the last teleport] and is updated in place so a walk can
# resume over several uniform blocks. Restarts at visited nodes fall back to
# a uniformly random node when the previous restart added nothing.


def _walk_loop(
    indptr,
    dst,
    weights,
    examine_all,
    teleport_visited,
    uniforms,
    state,
    seen,
    visited,
    visited_list,
    k,
    stall_limit,
    out_eid,
    out_src,
    out_dst,
):
    n = indptr.shape[0] - 1
    cur = state[0]
    stall = state[1]
    n_seen = state[2]
    n_vis = state[3]
    fresh = state[4] != 0
    steps = 0
    for i in range(uniforms.shape[0]):
        u = uniforms[i]
        lo = indptr[cur]
        hi = indptr[cur + 1]
        grew = False
        total = 0.0
        for e in range(lo, hi):
            if examine_all and not seen[e]:
                seen[e] = True
                n_seen += 1
                grew = True
                x = dst[e]
                if not visited[x]:
                    visited[x] = True
                    visited_list[n_vis] = x
                    n_vis += 1
            if weights[e] > 0.0:
                total += weights[e]
        forced = stall_limit > 0 and stall >= stall_limit
        if hi == lo or total <= 0.0 or forced:
            if teleport_visited and n_vis > 0 and fresh:
                nxt = visited_list[min(int(u * n_vis), n_vis - 1)]
            else:
                nxt = min(int(u * n), n - 1)
            out_eid[i] = -1
            out_src[i] = cur
            out_dst[i] = nxt
            if not visited[nxt]:
                visited[nxt] = True
                visited_list[n_vis] = nxt
                n_vis += 1
            cur = nxt
            stall = 0
            fresh = grew
        else:
            r = u * total
            acc = 0.0
            chosen = -1
            for e in range(lo, hi):
                w = weights[e]
                if w > 0.0:
                    chosen = e
                    acc += w
                    if r < acc:
                        break
            if not seen[chosen]:
                seen[chosen] = True
                n_seen += 1
                grew = True
            nxt = dst[chosen]
            if not visited[nxt]:
                visited[nxt] = True
                visited_list[n_vis] = nxt
                n_vis += 1
            out_eid[i] = chosen
            out_src[i] = cur
            out_dst[i] = nxt
            cur = nxt
            if grew:
                stall = 0
                fresh = True
            else:
                stall += 1
        steps = i + 1
        if n_seen >= k:
            break
    state[0] = cur
    state[1] = stall
    state[2] = n_seen
    state[3] = n_vis
    state[4] = 1 if fresh else 0
    return steps


_walk_jit = njit(_walk_loop)


cascade_times = pick(_cascade_jit, _cascade_numpy)
edge_probabilities = pick(_edge_prob_jit, _edge_prob_numpy)
# no vectorised form exists for a sequential walk; the fallback is the
# interpreted loop itself
walk_steps = pick(_walk_jit, _walk_loop)
