"""
Rooted-isomorphism signatures of finite rooted graphs.

Exact signatures are nauty certificates of the ball under the ordered partition
by (depth, degree); the root is alone at depth 0, so colour-preserving
isomorphisms fix it. Above LM_SPECTRA_SIGNATURE_EXACT_MAX vertices only the
Weisfeiler-Lehman hash of the coloured graph is available.
"""
import logging
from functools import lru_cache

import networkx as nx
import pynauty

from lmspectra import settings
from lmspectra.errors import InvalidParameterError, SignatureCapError
from lmspectra.graphs import BipartiteRootedGraph, RootedGraph
from lmspectra.lm_types import BallSignature

logger = logging.getLogger(__name__)

WL_ITERATIONS = 6


def _initial_colors(g: RootedGraph) -> list[tuple[int, int]]:
    return [(g.depths[v], g.degree(v)) for v in range(g.num_vertices)]


def _tag(g: RootedGraph) -> bytes:
    return b"B" if isinstance(g, BipartiteRootedGraph) else b"E"


@lru_cache(maxsize=100_000)
def _exact_key(tag: bytes, adjacency: tuple[tuple[int, ...], ...], initial: tuple[tuple[int, int], ...]) -> bytes:
    classes: dict[tuple[int, int], set[int]] = {}
    for v, color in enumerate(initial):
        classes.setdefault(color, set()).add(v)
    profile = sorted(classes)
    graph = pynauty.Graph(len(adjacency), directed=False,
                          adjacency_dict={u: [v for v in adjacency[u] if v > u] for u in range(len(adjacency))},
                          vertex_coloring=[classes[color] for color in profile])
    header = repr([(color, len(classes[color])) for color in profile]).encode()
    return tag + header + b"|" + pynauty.certificate(graph)


def _heuristic_key(g: RootedGraph) -> bytes:
    nxg = g.to_networkx()
    for v, (depth, degree) in enumerate(_initial_colors(g)):
        nxg.nodes[v]["color"] = f"{depth}:{degree}"
    digest = nx.weisfeiler_lehman_graph_hash(nxg, node_attr="color", iterations=WL_ITERATIONS)
    return b"H" + _tag(g) + f"{g.num_vertices}:{digest}".encode()


def canonical_signature(g: RootedGraph, heuristic_fallback: bool = False) -> BallSignature:
    """
    Signature equal for two rooted graphs iff they are rooted-isomorphic.

    The root is the only vertex at depth 0, so it is always placed first.
    """
    if g.num_vertices > settings.SIGNATURE_EXACT_MAX:
        if not heuristic_fallback:
            raise SignatureCapError(f"{g.num_vertices} vertices is above the exact signature cap "
                                    f"{settings.SIGNATURE_EXACT_MAX}")
        logger.debug(f"[SIGNATURE] {g.num_vertices}-vertex ball hashed heuristically")
        return BallSignature(key=_heuristic_key(g), exact=False)
    key = _exact_key(_tag(g), g.adjacency, tuple(_initial_colors(g)))
    return BallSignature(key=key, exact=True)


def ball_signature(g: RootedGraph) -> BallSignature:
    """canonical_signature, falling back to the hashed invariant for large balls."""
    return canonical_signature(g, heuristic_fallback=True)


def agreement_radius(g: RootedGraph, h: RootedGraph, t_max: int) -> int:
    """Largest T <= t_max with isomorphic radius-T balls; -1 if even the roots differ."""
    if t_max < 0:
        raise InvalidParameterError(f"t_max must be >= 0, got {t_max}")
    agreed = -1
    for t in range(t_max + 1):
        if ball_signature(g.truncate(t)) != ball_signature(h.truncate(t)):
            break
        agreed = t
    return agreed


def rooted_distance(g: RootedGraph, h: RootedGraph, t_max: int) -> float:
    """1/(1+T), with T capped at t_max."""
    return 1.0 / (1.0 + max(agreement_radius(g, h, t_max), 0))
