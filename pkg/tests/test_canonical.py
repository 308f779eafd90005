import random

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from lmspectra.canonical import agreement_radius, ball_signature, canonical_signature, rooted_distance
from lmspectra.errors import SignatureCapError
from lmspectra.graphs import BipartiteRootedGraph, RootedGraph


def _graph(m, edges, root=0):
    return RootedGraph.from_edges(m, edges, root=root)


def _relabel(g, perm):
    edges = [(perm[u], perm[v]) for u, v in g.edges()]
    return _graph(g.num_vertices, edges, root=perm[g.root])


def test_triangle_roots_are_equivalent():
    sigs = {canonical_signature(_graph(3, [(0, 1), (1, 2), (0, 2)], root=r)) for r in range(3)}
    assert len(sigs) == 1


def test_root_position_matters():
    end = canonical_signature(_graph(3, [(0, 1), (1, 2)], root=0))
    other_end = canonical_signature(_graph(3, [(0, 1), (1, 2)], root=2))
    middle = canonical_signature(_graph(3, [(0, 1), (1, 2)], root=1))
    assert end == other_end
    assert end != middle


def test_path_and_star_differ():
    path = _graph(4, [(0, 1), (1, 2), (2, 3)], root=1)
    star = _graph(4, [(0, 1), (1, 2), (1, 3)], root=1)
    assert canonical_signature(path) != canonical_signature(star)


def test_cube_and_mobius_ladder_differ():
    cube = [(u, u ^ (1 << b)) for u in range(8) for b in range(3) if u < u ^ (1 << b)]
    ladder = [(i, (i + 1) % 8) for i in range(8)] + [(i, i + 4) for i in range(4)]
    assert canonical_signature(_graph(8, cube)) != canonical_signature(_graph(8, ladder))


def test_regular_graph_relabelled():
    # Petersen graph: vertex-transitive, so every root gives the same class
    edges = [(i, (i + 1) % 5) for i in range(5)] + [(i, i + 5) for i in range(5)] + \
            [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    sigs = {canonical_signature(_graph(10, edges, root=r)) for r in range(10)}
    assert len(sigs) == 1


@st.composite
def rooted_graphs(draw):
    m = draw(st.integers(min_value=1, max_value=14))
    edges = {(draw(st.integers(min_value=0, max_value=v - 1)), v) for v in range(1, m)}
    extra = draw(st.lists(st.tuples(st.integers(0, m - 1), st.integers(0, m - 1)), max_size=2 * m))
    edges |= {(min(u, v), max(u, v)) for u, v in extra if u != v}
    return _graph(m, sorted(edges), root=draw(st.integers(0, m - 1)))


@given(rooted_graphs(), st.randoms(use_true_random=False))
def test_signature_is_invariant_under_relabeling(g, rnd):
    perm = list(range(g.num_vertices))
    rnd.shuffle(perm)
    assert canonical_signature(_relabel(g, perm)) == canonical_signature(g)


@given(rooted_graphs(), rooted_graphs())
def test_signatures_agree_with_networkx(g, h):
    same = nx.is_isomorphic(g.to_networkx(), h.to_networkx(), node_match=lambda a, b: a["root"] == b["root"])
    assert (canonical_signature(g) == canonical_signature(h)) == same


def test_large_graphs_need_fallback():
    path = _graph(70, [(i, i + 1) for i in range(69)])
    with pytest.raises(SignatureCapError):
        canonical_signature(path)
    sig = ball_signature(path)
    assert not sig.exact
    perm = list(range(70))
    random.Random(3).shuffle(perm)
    assert ball_signature(_relabel(path, perm)) == sig


def test_fallback_hash_sees_root_position():
    end = _graph(70, [(i, i + 1) for i in range(69)], root=0)
    middle = _graph(70, [(i, i + 1) for i in range(69)], root=35)
    cycle = _graph(70, [(i, (i + 1) % 70) for i in range(70)])
    keys = {ball_signature(g).key for g in (end, middle, cycle)}
    assert len(keys) == 3


def test_exact_signature_of_bipartite_and_plain_graphs_differ():
    plain = _graph(3, [(0, 1), (1, 2)])
    bipartite = BipartiteRootedGraph([[1], [0, 2], [1]], root=0, sides=["V", "U", "V"])
    assert canonical_signature(plain) != canonical_signature(bipartite)
    assert canonical_signature(plain).exact


def test_agreement_radius():
    path = _graph(4, [(0, 1), (1, 2), (2, 3)])
    fork = _graph(4, [(0, 1), (1, 2), (1, 3)])
    assert agreement_radius(path, fork, 5) == 1
    assert rooted_distance(path, fork, 5) == pytest.approx(0.5)
    assert agreement_radius(path, path, 5) == 5
