import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diffsample.cascade import Cascade, CascadeSet, DiffusionParams, generate_cascade_set
from diffsample.graph import from_edges
from diffsample.netgen import KRONECKER_INITIATORS, KroneckerParams, gen_kronecker
from diffsample.sampling import (
    LocalView,
    SamplerConfig,
    SamplingError,
    bfs_sample,
    dns_sample,
    link_infection_prob,
    random_walk,
    rw_sample,
    time_inferred_cascades,
    transmission_prob,
)

from conftest import ring_with_chords

INF = math.inf


def view_from_times(g, rows):
    cs = CascadeSet(g.n, [Cascade.from_dense(r) for r in rows])
    return LocalView.from_cascades(g, cs)


@pytest.fixture
def edge_uv():
    return from_edges(2, [(0, 1)])


class TestTimeInferred:
    def test_forward(self, edge_uv):
        assert time_inferred_cascades(view_from_times(edge_uv, [[1, 2]]), 0).tolist() == [0]

    def test_wrong_direction(self, edge_uv):
        assert time_inferred_cascades(view_from_times(edge_uv, [[2, 1]]), 0).size == 0

    def test_receiver_never_infected(self, edge_uv):
        assert time_inferred_cascades(view_from_times(edge_uv, [[1, INF]]), (0, 1)).size == 0

    def test_mixed(self, edge_uv):
        rows = [[0, 1], [INF, 3], [2, 5], [4, 4]]
        assert time_inferred_cascades(view_from_times(edge_uv, rows), 0).tolist() == [0, 2]


class TestLinkInfectionProb:
    def test_single_cascade_values(self):
        assert transmission_prob(0.0, 0.4) == 1.0
        assert abs(transmission_prob(0.4, 0.4) - math.exp(-1)) <= 1e-12
        with pytest.raises(ValueError):
            transmission_prob(-1.0, 1.0)

    def test_equal_times_not_inferred(self, edge_uv):
        # t(u) == t(v) is not "u before v", so the arc has no inferred cascade
        assert link_infection_prob(view_from_times(edge_uv, [[1, 1]]), 0, 1.0) == 0.0

    def test_limit_of_small_delay(self, edge_uv):
        p = link_infection_prob(view_from_times(edge_uv, [[1.0, 1.0 + 1e-13]]), 0, 1.0)
        assert abs(p - 1.0) <= 1e-12

    def test_delay_alpha(self, edge_uv):
        p = link_infection_prob(view_from_times(edge_uv, [[0, 0.7]]), 0, 0.7)
        assert abs(p - math.exp(-1)) <= 1e-12
        assert abs(p - 0.36787944117144233) <= 1e-12

    def test_two_cascades(self, edge_uv):
        p = link_infection_prob(view_from_times(edge_uv, [[0, 1], [1, 3], [INF, 2]]), 0, 1.0)
        assert abs(p - (math.exp(-1) + math.exp(-2)) / 2) <= 1e-12
        assert abs(p - 0.2516073622040275) <= 1e-12

    def test_empty(self, edge_uv):
        assert link_infection_prob(view_from_times(edge_uv, [[2, 1]]), 0, 1.0) == 0.0

    def test_kernel_agrees_with_scalar_route(self, strong10):
        cs, _ = generate_cascade_set(strong10, DiffusionParams(0.5, 0.5, 0.9), np.random.default_rng(2))
        view = LocalView.from_cascades(strong10, cs)
        probs = view.edge_probs(0.5)
        for e in range(strong10.m):
            assert abs(probs[e] - link_infection_prob(view, e, 0.5)) <= 1e-12


class TestDNS:
    def test_path_hand_trace(self, path3, path3_view):
        tr = dns_sample(path3_view, SamplerConfig(budget=2, alpha=1.0, start=0), np.random.default_rng(0))
        assert tr.sampled_edges.tolist() == [0, 1]
        assert tr.draw_edges.tolist() == [0, 1]
        np.testing.assert_allclose(tr.draw_pis, [math.exp(-1)] * 2, rtol=0, atol=1e-15)
        assert tr.n_teleports == 0

    def test_zero_weight_teleports_without_draw(self):
        # node 0 has out-arcs but no cascade ever crossed them
        g = from_edges(4, [(0, 1), (0, 2), (3, 0)])
        view = view_from_times(g, [[INF, INF, INF, 0.0]])
        tr = dns_sample(view, SamplerConfig(budget=3, start=0), np.random.default_rng(1))
        assert tr.edge[0] == -1
        assert np.all(tr.draw_pis > 0)

    def test_budget_m_covers_all(self, strong10):
        cs, _ = generate_cascade_set(strong10, DiffusionParams(0.5, 0.5, 0.9), np.random.default_rng(3))
        view = LocalView.from_cascades(strong10, cs)
        cfg = SamplerConfig(budget=strong10.m, max_steps=1_000_000)
        tr = dns_sample(view, cfg, np.random.default_rng(0))
        assert tr.sampled_edges.tolist() == list(range(strong10.m))

    def test_budget_above_m(self, path3_view):
        with pytest.raises(SamplingError):
            dns_sample(path3_view, SamplerConfig(budget=3), np.random.default_rng(0))

    def test_pi_matches_link_probability(self, strong10):
        cs, _ = generate_cascade_set(strong10, DiffusionParams(0.4, 0.4, 0.8), np.random.default_rng(5))
        view = LocalView.from_cascades(strong10, cs)
        tr = dns_sample(view, SamplerConfig(budget=15, alpha=0.4), np.random.default_rng(6))
        for e, p, _ in tr.draws:
            assert p > 0
            assert abs(p - link_infection_prob(view, e, 0.4)) <= 1e-12


def test_bfs_star_first_spokes():
    g = from_edges(6, [(0, i) for i in range(1, 6)])
    view = view_from_times(g, [])
    tr = bfs_sample(view, SamplerConfig(budget=3, start=0), np.random.default_rng(0))
    assert tr.draw_edges.tolist() == [0, 1, 2]
    assert not tr.weighted and all(p is None for _, p, _ in tr.draws)


def test_bfs_path(path3_view):
    tr = bfs_sample(path3_view, SamplerConfig(budget=2, start=0), np.random.default_rng(0))
    assert tr.sampled_edges.tolist() == [0, 1]


def test_bfs_teleports_out_of_small_component():
    g = from_edges(8, [(0, 1), (1, 2), (3, 4), (4, 5), (5, 6), (6, 7), (7, 3)])
    tr = bfs_sample(view_from_times(g, []), SamplerConfig(budget=5, start=0), np.random.default_rng(0))
    assert tr.sampled_edges.size == 5
    first_jump = int(np.flatnonzero(tr.edge < 0)[0])
    assert tr.edge[:first_jump].tolist() == [0, 1]


def test_rw_path(path3_view):
    tr = rw_sample(path3_view, SamplerConfig(budget=2, start=0), np.random.default_rng(0))
    assert tr.draw_edges.tolist() == [0, 1]
    assert tr.draw_pis.tolist() == [0.5, 0.5]


def test_rw_node_frequencies_triangle(triangle):
    eid, _, dst = random_walk(view_from_times(triangle, []), 1_000_000, np.random.default_rng(0), start=0)
    assert np.all(eid >= 0)
    freq = np.bincount(dst, minlength=3) / dst.size
    deg = triangle.out_degree()
    assert np.abs(freq - deg / triangle.m).max() <= 0.01


def test_rw_arc_frequencies_cycle(cycle4):
    eid, _, _ = random_walk(view_from_times(cycle4, []), 1_000_000, np.random.default_rng(1), start=0)
    freq = np.bincount(eid, minlength=cycle4.m) / eid.size
    assert cycle4.m == 8
    assert np.abs(freq - 1 / 8).max() <= 0.01


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["dns", "bfs", "rw"]), st.integers(1, 20),
       st.sampled_from(["restart-random-node", "restart-random-visited"]))
def test_trace_invariants(seed, method, k, policy):
    g = ring_with_chords(10)
    cs, _ = generate_cascade_set(g, DiffusionParams(0.5, 0.4, 0.6), np.random.default_rng(seed))
    view = LocalView.from_cascades(g, cs)
    fn = {"dns": dns_sample, "bfs": bfs_sample, "rw": rw_sample}[method]
    cfg = SamplerConfig(budget=min(k, g.m), teleport_policy=policy, stall_limit=10)
    tr = fn(view, cfg, np.random.default_rng(seed))
    assert tr.sampled_edges.size >= cfg.budget
    assert set(tr.draw_edges.tolist()) <= set(tr.sampled_edges.tolist())
    if tr.weighted:
        assert np.all(tr.draw_pis > 0)
    again = fn(view, cfg, np.random.default_rng(seed))
    assert np.array_equal(tr.edge, again.edge)
    assert np.array_equal(tr.sampled_edges, again.sampled_edges)


def test_local_view_never_sees_transmissions(strong10):
    cs, _ = generate_cascade_set(strong10, DiffusionParams(0.5, 0.5, 0.8), np.random.default_rng(9))
    view = LocalView.from_cascades(strong10, cs)
    for value in vars(view).values():
        assert not isinstance(value, (Cascade, CascadeSet, list))
    # stripping the ground truth must not change anything the sampler does
    stripped = CascadeSet(cs.n, [Cascade.from_dense(c.times, seed=c.seed) for c in cs])
    other = LocalView.from_cascades(strong10, stripped)
    cfg = SamplerConfig(budget=12, alpha=0.5)
    a = dns_sample(view, cfg, np.random.default_rng(1))
    b = dns_sample(other, cfg, np.random.default_rng(1))
    assert np.array_equal(a.edge, b.edge) and np.array_equal(a.pi, b.pi, equal_nan=True)


def test_trace_csv(tmp_path, path3, path3_view):
    tr = dns_sample(path3_view, SamplerConfig(budget=2, alpha=1.0, start=0), np.random.default_rng(0))
    out = tmp_path / "trace.csv"
    tr.write_csv(out, path3)
    rows = list(csv.DictReader(open(out, newline="")))
    assert [(r["src_label"], r["dst_label"], r["event"]) for r in rows] == [("A", "B", "draw"), ("B", "C", "draw")]
    assert float(rows[0]["pi"]) == math.exp(-1)


def test_dns_covers_diffusion_network_better_than_rw():
    g = gen_kronecker(KroneckerParams(KRONECKER_INITIATORS["random"], 8, 600), np.random.default_rng(0))
    dns_frac, rw_frac = [], []
    for seed in range(20):
        cs, dn = generate_cascade_set(g, DiffusionParams(0.4, 0.4, 0.3), np.random.default_rng(seed))
        view = LocalView.from_cascades(g, cs)
        cfg = SamplerConfig.from_rate(0.3, g.m, alpha=0.4)
        for fn, acc in ((dns_sample, dns_frac), (rw_sample, rw_frac)):
            tr = fn(view, cfg, np.random.default_rng(1000 + seed))
            acc.append(np.mean(dn.attendance[tr.sampled_edges] > 0))
    assert np.mean(dns_frac) >= np.mean(rw_frac)


def test_config_from_rate():
    assert SamplerConfig.from_rate(0.5, 1875).budget == 938
    assert SamplerConfig.from_rate(1.0, 7).budget == 7
    with pytest.raises(ValueError):
        SamplerConfig.from_rate(0.0, 10)
