import logging
from collections import deque
from typing import Hashable, Iterable, Optional, Sequence

import networkx as nx

from lmspectra.errors import InvalidParameterError

logger = logging.getLogger(__name__)

SIDE_CELL = "U"   # d-cells / blocks
SIDE_RIDGE = "V"  # (d-1)-cells / vertices of the line graph


class RootedGraph:
    """
    Finite connected rooted graph on vertices 0..m-1.

    Labels are optional payloads (cells, for balls cut from a complex) and take no
    part in isomorphism; they are used for cell-by-cell comparisons.
    """

    def __init__(self, adjacency: Sequence[Iterable[int]], root: int = 0,
                 labels: Optional[Sequence[Hashable]] = None):
        self.adjacency = tuple(tuple(sorted(set(nbrs))) for nbrs in adjacency)
        self.root = root
        self.labels = tuple(labels) if labels is not None else None
        self._validate()
        self.depths = bfs_depths(self.adjacency, root)
        if len(self.depths) != len(self.adjacency):
            raise InvalidParameterError(f"rooted graph is not connected: reached {len(self.depths)} "
                                        f"of {len(self.adjacency)} vertices")

    @classmethod
    def from_edges(cls, num_vertices: int, edges: Iterable[tuple[int, int]], root: int = 0,
                   labels: Optional[Sequence[Hashable]] = None, **kwargs):
        adjacency = [[] for _ in range(num_vertices)]
        for u, v in edges:
            adjacency[u].append(v)
            adjacency[v].append(u)
        return cls(adjacency, root=root, labels=labels, **kwargs)

    def _validate(self) -> None:
        m = len(self.adjacency)
        if m == 0:
            raise InvalidParameterError("rooted graph needs at least the root")
        if not 0 <= self.root < m:
            raise InvalidParameterError(f"root {self.root} out of range for {m} vertices")
        if self.labels is not None and len(self.labels) != m:
            raise InvalidParameterError(f"{len(self.labels)} labels for {m} vertices")
        for u, nbrs in enumerate(self.adjacency):
            for v in nbrs:
                if not 0 <= v < m or v == u:
                    raise InvalidParameterError(f"bad edge ({u}, {v})")
                if u not in self.adjacency[v]:
                    raise InvalidParameterError(f"edge ({u}, {v}) is not symmetric")

    @property
    def num_vertices(self) -> int:
        return len(self.adjacency)

    @property
    def radius(self) -> int:
        return max(self.depths.values())

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    def label(self, v: int) -> Hashable:
        return self.labels[v] if self.labels is not None else v

    def labelled_edges(self) -> frozenset:
        return frozenset(frozenset((self.label(u), self.label(v))) for u, v in self.edges())

    def same_labelled(self, other: "RootedGraph") -> bool:
        """Equality as cell-labelled rooted graphs."""
        return (self.label(self.root) == other.label(other.root)
                and {self.label(v) for v in range(self.num_vertices)}
                == {other.label(v) for v in range(other.num_vertices)}
                and self.labelled_edges() == other.labelled_edges())

    def _subgraph_kwargs(self, keep: list[int]) -> dict:
        return {}

    def truncate(self, t: int):
        """Induced ball of radius t around the root, vertices renumbered in BFS order."""
        if t < 0:
            raise InvalidParameterError(f"radius must be >= 0, got {t}")
        keep = [v for v in _bfs_order(self.adjacency, self.root) if self.depths[v] <= t]
        index = {v: i for i, v in enumerate(keep)}
        adjacency = [[index[w] for w in self.adjacency[v] if w in index] for v in keep]
        labels = [self.labels[v] for v in keep] if self.labels is not None else None
        return type(self)(adjacency, root=0, labels=labels, **self._subgraph_kwargs(keep))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for v in range(self.num_vertices):
            g.add_node(v, depth=self.depths[v], root=v == self.root, **self._node_attrs(v))
        g.add_edges_from(self.edges())
        return g

    def _node_attrs(self, v: int) -> dict:
        return {}

    def to_record(self) -> dict:
        vertices = []
        for v in range(self.num_vertices):
            entry = {"id": v, "depth": self.depths[v], "degree": self.degree(v), **self._node_attrs(v)}
            if self.labels is not None:
                entry["label"] = _label_text(self.labels[v])
            vertices.append(entry)
        return {"root": self.root, "vertices": vertices, "edges": [list(e) for e in self.edges()]}


class BipartiteRootedGraph(RootedGraph):
    """Rooted graph with sides U (d-cells) and V ((d-1)-cells); root on V, edges U-V only."""

    def __init__(self, adjacency: Sequence[Iterable[int]], root: int = 0,
                 labels: Optional[Sequence[Hashable]] = None, sides: Sequence[str] = ()):
        self.sides = tuple(sides)
        super().__init__(adjacency, root=root, labels=labels)

    def _validate(self) -> None:
        super()._validate()
        if len(self.sides) != len(self.adjacency) or set(self.sides) - {SIDE_CELL, SIDE_RIDGE}:
            raise InvalidParameterError("every vertex needs a side 'U' or 'V'")
        if self.sides[self.root] != SIDE_RIDGE:
            raise InvalidParameterError("bipartite root must be a (d-1)-cell")
        for u, v in self.edges():
            if self.sides[u] == self.sides[v]:
                raise InvalidParameterError(f"edge ({u}, {v}) joins two vertices of side {self.sides[u]}")

    def _subgraph_kwargs(self, keep: list[int]) -> dict:
        return {"sides": [self.sides[v] for v in keep]}

    def _node_attrs(self, v: int) -> dict:
        return {"side": self.sides[v]}


def bfs_depths(adjacency: Sequence[Sequence[int]], root: int) -> dict[int, int]:
    depths = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if v not in depths:
                depths[v] = depths[u] + 1
                queue.append(v)
    return depths


def _bfs_order(adjacency: Sequence[Sequence[int]], root: int) -> list[int]:
    return list(bfs_depths(adjacency, root))


def _label_text(label: Hashable) -> str:
    if isinstance(label, tuple):
        return "{" + ",".join(str(v) for v in label) + "}"
    return str(label)
