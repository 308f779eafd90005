import math

import numpy as np
import pytest

from lmspectra.canonical import ball_signature, canonical_signature
from lmspectra.cells import sample_complex, unrank_cell
from lmspectra.errors import BallCapExceededError, InvalidParameterError, UnknownFunctionError
from lmspectra.graphs import SIDE_CELL, SIDE_RIDGE, RootedGraph
from lmspectra.limits import bipartite_ball, compare_line_graph_to_dgw, empirical_ball_distribution, \
    line_graph_ball, mass_transport_check, phi, root_spectral_moments, sample_dgw, sample_poisson_dtree, \
    survival_fraction, tv_distance
from lmspectra.lm_types import BallSource, GWConfig, OffspringLaw
from lmspectra.words import beta_value


def test_empty_complex_balls():
    sample = sample_complex(10, 2, 0.0)
    assert line_graph_ball(sample, (1, 2), 3).num_vertices == 1
    assert bipartite_ball(sample, (1, 2), 3).num_vertices == 1


def test_single_triangle_balls(single_triangle):
    line = line_graph_ball(single_triangle, (1, 2), 1)
    assert line.num_vertices == 3
    assert sorted(map(len, line.adjacency)) == [2, 2, 2]
    assert set(line.labels) == {(1, 2), (1, 3), (2, 3)}

    star = bipartite_ball(single_triangle, (1, 2), 2)
    assert star.num_vertices == 4
    assert star.sides == (SIDE_RIDGE, SIDE_CELL, SIDE_RIDGE, SIDE_RIDGE)
    assert star.degree(1) == 3
    assert star.labels[1] == (1, 2, 3)


def test_root_degree_counts_cofaces(small_sample):
    n, d = small_sample.n, small_sample.d
    present = {unrank_cell(r, d, n) for r in small_sample.present_ranks().tolist()}
    for root in [(1, 2), (3, 7), (5, 12)]:
        cofaces = sum(1 for tau in present if set(root) <= set(tau))
        assert line_graph_ball(small_sample, root, 1).degree(0) == d * cofaces
        ball = bipartite_ball(small_sample, root, 2)
        assert ball.degree(0) == cofaces
        assert all(ball.degree(u) == d + 1 for u in range(ball.num_vertices) if ball.sides[u] == SIDE_CELL)


@pytest.mark.parametrize("t", [0, 1, 2])
def test_phi_of_bipartite_ball_is_line_graph_ball(small_sample, t):
    for root in [(1, 2), (2, 9), (4, 11)]:
        collapsed = phi(bipartite_ball(small_sample, root, 2 * t + 1))
        assert collapsed.same_labelled(line_graph_ball(small_sample, root, t))


def test_phi_rejects_plain_graphs():
    with pytest.raises(InvalidParameterError):
        phi(RootedGraph([[]]))


def test_invalid_root_cell(small_sample):
    with pytest.raises(InvalidParameterError):
        line_graph_ball(small_sample, (1, 2, 3), 1)
    with pytest.raises(InvalidParameterError):
        bipartite_ball(small_sample, (1, 2), -1)


def test_ball_cap():
    with pytest.raises(BallCapExceededError):
        line_graph_ball(sample_complex(30, 2, 0.8), (1, 2), 2, vertex_cap=20)


@pytest.mark.parametrize("d", [2, 3])
def test_phi_of_poisson_tree_is_dgw(d):
    for seed in range(40):
        tree = sample_poisson_dtree(d, 1.0, 4, seed)
        dgw = sample_dgw(GWConfig(d=d, lam=1.0, depth=2, seed=seed))
        assert ball_signature(phi(tree)) == ball_signature(dgw)


def test_poisson_tree_layers():
    tree = sample_poisson_dtree(3, 2.0, 3, seed=4)
    for v in range(tree.num_vertices):
        depth = tree.depths[v]
        assert tree.sides[v] == (SIDE_RIDGE if depth % 2 == 0 else SIDE_CELL)
        if tree.sides[v] == SIDE_CELL and depth + 1 <= 2:
            assert tree.degree(v) == 4
    assert tree.radius <= 3


def test_fixed_block_dgw_structure():
    g = sample_dgw(GWConfig(d=2, lam=0.0, depth=1, offspring=OffspringLaw.FIXED, fixed_blocks=2))
    assert g.num_vertices == 5
    assert g.degree(0) == 4
    assert sorted(g.edges()) == [(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (3, 4)]
    with pytest.raises(BallCapExceededError):
        sample_dgw(GWConfig(d=2, lam=0.0, depth=5, offspring=OffspringLaw.FIXED, fixed_blocks=3, vertex_cap=10))


def test_root_moments_of_triangle():
    triangle = RootedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)])
    assert root_spectral_moments(triangle, 3) == [0.0, 2.0, 2.0]


def test_mass_transport_holds_for_poisson_blocks():
    for f_id in ("f1", "f2"):
        result = mass_transport_check(2, 1.0, f_id, samples=20_000, seed=3)
        assert result.holds(z=4.0)


def test_mass_transport_fails_for_fixed_blocks():
    result = mass_transport_check(2, 1.0, "f2", samples=200, offspring=OffspringLaw.FIXED, fixed_blocks=2)
    assert (result.lhs, result.rhs, result.stderr) == (0.0, 4.0, 0.0)
    assert not result.holds()


@pytest.mark.parametrize("f_id", ["g1", "f0", "f"])
def test_unknown_transport_function(f_id):
    with pytest.raises(UnknownFunctionError):
        mass_transport_check(2, 1.0, f_id, samples=10)


def test_survival():
    assert survival_fraction(2, 0.0, samples=50) == 1.0
    # dλ = 0.5 is subcritical
    assert survival_fraction(2, 0.25, samples=500, seed=2) > 0.9
    assert survival_fraction(2, 0.4, samples=2000, seed=3) >= 0.98


def test_supercritical_samples_survive():
    # dλ = 4: the extinction probability is about 0.16
    assert survival_fraction(2, 2.0, depth_cap=60, vertex_cap=10_000, samples=300, seed=4) < 0.4


@pytest.mark.slow
def test_subcritical_die_out():
    assert survival_fraction(2, 0.4, depth_cap=60, vertex_cap=100_000, samples=10_000) >= 0.99


def test_poisson_tree_root_offspring():
    degrees = np.array([sample_poisson_dtree(2, 1.5, 1, seed).degree(0) for seed in range(4000)])
    se = degrees.std(ddof=1) / math.sqrt(degrees.size)
    assert abs(degrees.mean() - 1.5) <= 3 * se


@pytest.mark.parametrize("d,lam", [(2, 0.4), (3, 0.7)])
def test_dgw_root_moments_match_beta(d, lam):
    samples = 6000
    moments = np.array([root_spectral_moments(sample_dgw(GWConfig(d=d, lam=lam, depth=2, seed=seed)), 4)
                        for seed in range(samples)])
    assert np.all(moments[:, 0] == 0)
    for k in (2, 3, 4):
        se = moments[:, k - 1].std(ddof=1) / math.sqrt(samples)
        assert abs(moments[:, k - 1].mean() - beta_value(d, k, lam)) <= 4 * se


def test_tv_distance():
    assert tv_distance({"a": 1.0}, {"b": 1.0}) == 1.0
    assert tv_distance({"a": 0.5, "b": 0.5}, {"a": 0.5, "b": 0.5}) == 0.0
    assert tv_distance({"a": 0.75, "b": 0.25}, {"a": 0.25, "b": 0.75}) == pytest.approx(0.5)


def test_ball_distributions_sum_to_one():
    line = empirical_ball_distribution(BallSource(kind="line-graph", d=2, lam=1.0, n=60), 1, 200, seed=5)
    dgw = empirical_ball_distribution(BallSource(kind="dgw", d=2, lam=1.0), 1, 200, seed=5)
    assert math.fsum(line.values()) == pytest.approx(1.0)
    assert math.fsum(dgw.values()) == pytest.approx(1.0)
    assert canonical_signature(RootedGraph([[]])) in dgw


def test_line_graph_source_needs_n():
    with pytest.raises(ValueError):
        BallSource(kind="line-graph", d=2, lam=1.0)


def test_line_graph_balls_approach_dgw():
    report = compare_line_graph_to_dgw(400, 2, 1.0, 1, 400, seed=9)
    assert report.tv <= 0.2
    assert abs(report.root_isolated_line - math.exp(-1)) <= 0.1
    assert report.top_signatures and len(report.top_signatures) <= 10


@pytest.mark.slow
def test_line_graph_balls_match_dgw_at_radius_two():
    report = compare_line_graph_to_dgw(2000, 2, 1.0, 2, 5000)
    assert report.tv <= 0.08
