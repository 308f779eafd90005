"""
Local weak limits: rooted balls of the line graph and of the cell/ridge bipartite
graph of Y_d(n, p), the collapse map phi, the Poisson d-tree and d-block
Galton-Watson samplers, and Monte Carlo checks built on them.
"""
import logging
import math
import re
from collections import Counter
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from lmspectra import settings
from lmspectra.adjacency import sample_row
from lmspectra.canonical import ball_signature
from lmspectra.cells import ComplexSample, boundary, completions, rank_cell, sample_complex, unrank_cell, \
    validate_cell
from lmspectra.errors import BallCapExceededError, InvalidParameterError, UnknownFunctionError
from lmspectra.graphs import SIDE_CELL, SIDE_RIDGE, BipartiteRootedGraph, RootedGraph, bfs_depths
from lmspectra.lm_types import BallSignature, BallSource, GWConfig, LwcReport, MassTransportResult, \
    OffspringLaw, SampleMode, SignatureShare
from lmspectra.workers import parallel_map, substream

logger = logging.getLogger(__name__)

_F_PATTERN = re.compile(r"^f(\d+)$")


def _check_cap(size: int, cap: int, what: str) -> None:
    if size > cap:
        raise BallCapExceededError(f"{what} reached {size} vertices, above the cap {cap}")


def _root_rank(sample: ComplexSample, root: Sequence[int]) -> int:
    return rank_cell(validate_cell(root, sample.n, sample.d - 1), sample.n)


def line_graph_ball(sample: ComplexSample, root: Sequence[int], t: int,
                    vertex_cap: Optional[int] = None) -> RootedGraph:
    """Induced radius-t ball of the line graph G_n around a (d-1)-cell, grown from the presence oracle."""
    if t < 0:
        raise InvalidParameterError(f"radius must be >= 0, got {t}")
    cap = settings.VERTEX_CAP if vertex_cap is None else vertex_cap
    index = {_root_rank(sample, root): 0}
    ranks, depth, rows = [next(iter(index))], [0], []
    i = 0
    while i < len(ranks):
        neighbors, _ = sample_row(sample, ranks[i])
        rows.append(neighbors.tolist())
        if depth[i] < t:
            for r in rows[-1]:
                if r not in index:
                    index[r] = len(ranks)
                    ranks.append(r)
                    depth.append(depth[i] + 1)
                    _check_cap(len(ranks), cap, "line-graph ball")
        i += 1
    adjacency = [[index[r] for r in row if r in index] for row in rows]
    labels = [unrank_cell(r, sample.d - 1, sample.n) for r in ranks]
    return RootedGraph(adjacency, root=0, labels=labels)


def bipartite_ball(sample: ComplexSample, root: Sequence[int], t: int,
                   vertex_cap: Optional[int] = None) -> BipartiteRootedGraph:
    """Radius-t ball of the bipartite graph (present d-cells U, (d-1)-cells V) around a (d-1)-cell."""
    if t < 0:
        raise InvalidParameterError(f"radius must be >= 0, got {t}")
    cap = settings.VERTEX_CAP if vertex_cap is None else vertex_cap
    n, d = sample.n, sample.d
    root_key = (SIDE_RIDGE, _root_rank(sample, root))
    index = {root_key: 0}
    keys, depth, adjacency = [root_key], [0], [[]]
    i = 0
    while i < len(keys):
        side, rank = keys[i]
        if depth[i] < t:
            if side == SIDE_RIDGE:
                _, cell_ranks, _ = completions(unrank_cell(rank, d - 1, n), n)
                neighbors = [(SIDE_CELL, r) for r in cell_ranks[sample.contains_ranks(cell_ranks)].tolist()]
            else:
                neighbors = [(SIDE_RIDGE, rank_cell(f, n)) for f in boundary(unrank_cell(rank, d, n))]
            for key in neighbors:
                if key not in index:
                    index[key] = len(keys)
                    keys.append(key)
                    depth.append(depth[i] + 1)
                    adjacency.append([])
                    _check_cap(len(keys), cap, "bipartite ball")
                j = index[key]
                if j not in adjacency[i]:
                    adjacency[i].append(j)
                    adjacency[j].append(i)
        i += 1
    labels = [unrank_cell(r, d - 1 if side == SIDE_RIDGE else d, n) for side, r in keys]
    sides = [side for side, _ in keys]
    return BipartiteRootedGraph(adjacency, root=0, labels=labels, sides=sides)


def phi(g: BipartiteRootedGraph) -> RootedGraph:
    """Collapse each U vertex into a clique on its V neighbours; keep the root's component."""
    if not isinstance(g, BipartiteRootedGraph):
        raise InvalidParameterError("phi needs a bipartite rooted graph")
    neighbors: dict[int, set] = {v: set() for v in range(g.num_vertices) if g.sides[v] == SIDE_RIDGE}
    for u in range(g.num_vertices):
        if g.sides[u] == SIDE_CELL:
            for a in g.adjacency[u]:
                neighbors[a].update(b for b in g.adjacency[u] if b != a)
    order = list(bfs_depths({v: sorted(nbrs) for v, nbrs in neighbors.items()}, g.root))
    index = {v: i for i, v in enumerate(order)}
    adjacency = [[index[w] for w in neighbors[v]] for v in order]
    labels = [g.labels[v] for v in order] if g.labels is not None else None
    return RootedGraph(adjacency, root=0, labels=labels)


def _offspring(rng: np.random.Generator, size: int, lam: float, law: OffspringLaw = OffspringLaw.POISSON,
               fixed_blocks: int = 2) -> np.ndarray:
    """Block counts for one generation, drawn in vertex order."""
    if law == OffspringLaw.FIXED:
        return np.full(size, fixed_blocks, dtype=np.int64)
    return rng.poisson(lam, size=size)


def sample_poisson_dtree(d: int, lam: float, t: int, seed: int = settings.DEFAULT_SEED,
                         vertex_cap: Optional[int] = None) -> BipartiteRootedGraph:
    """
    Poisson d-tree truncated at depth t: even-depth vertices get Poi(λ) children,
    odd-depth vertices exactly d.
    """
    cfg = GWConfig(d=d, lam=lam, depth=t, seed=seed,
                   vertex_cap=settings.VERTEX_CAP if vertex_cap is None else vertex_cap)
    rng = substream(cfg.seed, "branching")
    adjacency, sides, level = [[]], [SIDE_RIDGE], [0]
    for top in range(0, t, 2):
        blocks = _offspring(rng, len(level), lam)
        next_level = []
        for parent, count in zip(level, blocks.tolist()):
            for _ in range(count):
                u = len(adjacency)
                adjacency.append([parent])
                adjacency[parent].append(u)
                sides.append(SIDE_CELL)
                if top + 2 <= t:
                    for _ in range(d):
                        v = len(adjacency)
                        adjacency.append([u])
                        adjacency[u].append(v)
                        sides.append(SIDE_RIDGE)
                        next_level.append(v)
                _check_cap(len(adjacency), cfg.vertex_cap, "Poisson d-tree")
        level = next_level
    return BipartiteRootedGraph(adjacency, root=0, sides=sides)


def _grow_dgw(cfg: GWConfig, rng: np.random.Generator) -> RootedGraph:
    adjacency, level = [[]], [0]
    for _ in range(cfg.depth):
        blocks = _offspring(rng, len(level), cfg.lam, cfg.offspring, cfg.fixed_blocks)
        next_level = []
        for parent, count in zip(level, blocks.tolist()):
            for _ in range(count):
                block = list(range(len(adjacency), len(adjacency) + cfg.d))
                for v in block:
                    adjacency.append([parent] + [w for w in block if w != v])
                    adjacency[parent].append(v)
                next_level.extend(block)
                _check_cap(len(adjacency), cfg.vertex_cap, "d-block Galton-Watson graph")
        level = next_level
    return RootedGraph(adjacency, root=0)


def sample_dgw(cfg: GWConfig) -> RootedGraph:
    """
    d-block Galton-Watson graph truncated at generation cfg.depth.

    Every vertex draws a block count (Poi(λ) by default) and gets d children per
    block; the children of one block form a clique with their parent. Draws are
    taken in the same order as sample_poisson_dtree, so phi of the tree with the
    same seed is this graph.
    """
    return _grow_dgw(cfg, substream(cfg.seed, "branching"))


def grow_dgw_generations(cfg: GWConfig, rng: np.random.Generator) -> tuple[list[int], bool]:
    """Generation sizes only; returns (sizes, extinct). Stops at cfg.depth or cfg.vertex_cap."""
    sizes, total = [1], 1
    while sizes[-1] and len(sizes) <= cfg.depth and total <= cfg.vertex_cap:
        if cfg.offspring == OffspringLaw.FIXED:
            blocks = cfg.fixed_blocks * sizes[-1]
        else:
            blocks = int(rng.poisson(cfg.lam * sizes[-1]))
        sizes.append(cfg.d * blocks)
        total += sizes[-1]
    return sizes, sizes[-1] == 0


def survival_fraction(d: int, lam: float, depth_cap: int = 60, vertex_cap: int = 100_000,
                      samples: int = 10_000, seed: int = settings.DEFAULT_SEED) -> float:
    """
    Fraction of dGW samples that die out before either cap.

    Samples stopped by a cap count as surviving.
    """
    if samples < 1:
        raise InvalidParameterError(f"samples must be >= 1, got {samples}")
    cfg = GWConfig(d=d, lam=lam, depth=depth_cap, vertex_cap=vertex_cap, seed=seed)
    extinct = sum(grow_dgw_generations(cfg, substream(seed, "survival", i))[1] for i in range(samples))
    logger.info(f"[LIMITS] d={d} λ={lam}: {extinct}/{samples} samples died out")
    return extinct / samples


def _adjacency_matrix(g: RootedGraph) -> sp.csr_matrix:
    edges = np.asarray(g.edges(), dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    return sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(g.num_vertices, g.num_vertices))


def root_spectral_moments(g: RootedGraph, k_max: int) -> list[float]:
    """(A^j)_oo for j = 1..k_max."""
    if k_max < 1:
        raise InvalidParameterError(f"k_max must be >= 1, got {k_max}")
    a = _adjacency_matrix(g)
    x = np.zeros(g.num_vertices)
    x[g.root] = 1.0
    walk, out = x, []
    for _ in range(k_max):
        walk = a @ walk
        out.append(float(walk[g.root]))
    return out


def _parse_f_id(f_id: str) -> int:
    match = _F_PATTERN.match(f_id)
    if match is None or int(match.group(1)) < 1:
        raise UnknownFunctionError(f"unknown transport function {f_id!r}; expected f1, f2, ...")
    return int(match.group(1))


def mass_transport_check(d: int, lam: float, f_id: str = "f1", samples: int = 100_000,
                         seed: int = settings.DEFAULT_SEED, offspring: OffspringLaw = OffspringLaw.POISSON,
                         fixed_blocks: int = 2, threads: Optional[int] = None) -> MassTransportResult:
    """
    Both sides of E Σ_v f(G, o, v) = E Σ_v f(G, v, o) for f_k(G, u, v) = 1{u ~ v}·1{deg v = kd}.

    The outgoing side counts root neighbours of degree kd; the incoming side is
    deg(o)·1{deg o = kd}. Depth-2 balls determine both.
    """
    k = _parse_f_id(f_id)
    if samples < 2:
        raise InvalidParameterError(f"samples must be >= 2, got {samples}")
    target = k * d
    cfg = GWConfig(d=d, lam=lam, depth=2, seed=seed, offspring=offspring, fixed_blocks=fixed_blocks)

    def one(i: int) -> tuple[int, int]:
        g = _grow_dgw(cfg, substream(seed, "mass-transport", i))
        root_degree = g.degree(g.root)
        outgoing = sum(1 for v in g.adjacency[g.root] if g.degree(v) == target)
        return outgoing, root_degree if root_degree == target else 0

    pairs = np.asarray(parallel_map(one, range(samples), threads), dtype=float)
    lhs, rhs = pairs[:, 0].mean(), pairs[:, 1].mean()
    stderr = float(np.std(pairs[:, 0] - pairs[:, 1], ddof=1) / math.sqrt(samples))
    logger.info(f"[LIMITS] mass transport {f_id} d={d} λ={lam} {offspring}: {lhs:.4f} vs {rhs:.4f} ± {stderr:.4f}")
    return MassTransportResult(f_id=f_id, lhs=float(lhs), rhs=float(rhs), stderr=stderr, samples=samples)


def _tally(signatures: list[BallSignature]) -> dict[BallSignature, float]:
    counts = Counter(signatures)
    total = len(signatures)
    return {sig: counts[sig] / total for sig in sorted(counts, key=lambda s: s.key)}


def empirical_ball_distribution(source: BallSource, t: int, samples: int, seed: int = settings.DEFAULT_SEED,
                                threads: Optional[int] = None,
                                vertex_cap: Optional[int] = None) -> dict[BallSignature, float]:
    """Frequencies of radius-t ball signatures, roots uniform over (d-1)-cells for line graphs."""
    if samples < 1:
        raise InvalidParameterError(f"samples must be >= 1, got {samples}")
    if t < 0:
        raise InvalidParameterError(f"radius must be >= 0, got {t}")
    cap = settings.VERTEX_CAP if vertex_cap is None else vertex_cap
    if source.kind == "line-graph":
        sample = sample_complex(source.n, source.d, min(source.lam / source.n, 1.0), seed, mode=SampleMode.LAZY)
        roots = substream(seed, "roots").integers(0, sample.num_ridges, size=samples)

        def one(root: int) -> BallSignature:
            cell = unrank_cell(int(root), source.d - 1, source.n)
            return ball_signature(line_graph_ball(sample, cell, t, vertex_cap=cap))

        signatures = parallel_map(one, roots, threads)
    else:
        cfg = GWConfig(d=source.d, lam=source.lam, depth=t, vertex_cap=cap, seed=seed)
        signatures = parallel_map(lambda i: ball_signature(_grow_dgw(cfg, substream(seed, "dgw", i))),
                                  range(samples), threads)
    return _tally(signatures)


def tv_distance(a: dict, b: dict) -> float:
    return 0.5 * math.fsum(abs(a.get(key, 0.0) - b.get(key, 0.0)) for key in set(a) | set(b))


def compare_line_graph_to_dgw(n: int, d: int, lam: float, t: int, samples: int,
                              seed: int = settings.DEFAULT_SEED, threads: Optional[int] = None,
                              top: int = 10) -> LwcReport:
    """Line-graph balls of Y_d(n, λ/n) against dGW balls at radius t."""
    line = empirical_ball_distribution(BallSource(kind="line-graph", d=d, lam=lam, n=n), t, samples, seed, threads)
    dgw = empirical_ball_distribution(BallSource(kind="dgw", d=d, lam=lam), t, samples, seed, threads)
    isolated = ball_signature(RootedGraph([[]]))
    keys = sorted(set(line) | set(dgw), key=lambda s: (-(line.get(s, 0.0) + dgw.get(s, 0.0)), s.key))
    shares = [SignatureShare(sig=s.hex, exact=s.exact, p_line=line.get(s, 0.0), p_dgw=dgw.get(s, 0.0))
              for s in keys[:top]]
    tv = tv_distance(line, dgw)
    logger.info(f"[LIMITS] n={n} d={d} λ={lam} t={t}: TV = {tv:.4f} over {samples} samples per side")
    return LwcReport(t=t, samples=samples, tv=tv, root_isolated_line=line.get(isolated, 0.0), top_signatures=shares)
