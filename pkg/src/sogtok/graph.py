"""Canonical in-memory graph representation and topology utilities.

Graphs are undirected, simple, and immutable after construction. Node
indices are the canonical identity; node text is payload only. A virtual
global node, when present, sits at the last index and is adjacent to every
other node.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AlreadyAugmented,
    GraphTooLarge,
    InvalidPermutation,
    NodeOutOfRange,
    ValidationError,
)

DEFAULT_SIZE_CAP = 512


@dataclass(frozen=True)
class NodeRecord:
    index: int
    text: str | None = None
    is_global: bool = False


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph with optional text payloads and label.

    Edges are stored normalized as (i, j) with i < j, sorted. Construction
    validates all invariants; instances are safe to share between workers.
    """

    id: str
    nodes: tuple[NodeRecord, ...]
    edges: tuple[tuple[int, int], ...]
    label: int | None = None
    graph_text: str | None = None
    size_cap: int = field(default=DEFAULT_SIZE_CAP, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.nodes)
        if n < 1:
            raise ValidationError(f"graph {self.id!r}: node set must be non-empty")
        if n > self.size_cap:
            raise GraphTooLarge(
                f"graph {self.id!r} has {n} nodes, exceeding the size cap of {self.size_cap}"
            )
        for pos, node in enumerate(self.nodes):
            if node.index != pos:
                raise ValidationError(
                    f"graph {self.id!r}: node at position {pos} carries index {node.index}"
                )
        normalized = []
        for i, j in self.edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError(f"graph {self.id!r}: edge ({i},{j}) out of range")
            if i == j:
                raise ValidationError(f"graph {self.id!r}: self-loop at node {i}")
            normalized.append((i, j) if i < j else (j, i))
        deduped = sorted(set(normalized))
        if len(deduped) != len(normalized):
            raise ValidationError(f"graph {self.id!r}: duplicate edges")
        object.__setattr__(self, "edges", tuple(deduped))
        globals_ = [node.index for node in self.nodes if node.is_global]
        if len(globals_) > 1:
            raise ValidationError(f"graph {self.id!r}: more than one global node")
        if globals_:
            g = globals_[0]
            incident = {j if i == g else i for i, j in self.edges if g in (i, j)}
            if incident != set(range(n)) - {g}:
                raise ValidationError(
                    f"graph {self.id!r}: global node {g} is not adjacent to every other node"
                )

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def has_global(self) -> bool:
        return any(node.is_global for node in self.nodes)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return adj

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg


def build_adjacency(g: Graph) -> np.ndarray:
    """Dense symmetric 0/1 adjacency matrix with zero diagonal."""
    a = np.zeros((g.n, g.n), dtype=np.float64)
    for i, j in g.edges:
        a[i, j] = 1.0
        a[j, i] = 1.0
    return a


def augment_with_global_node(g: Graph) -> Graph:
    """Add a virtual global node at index |V|, connected to every node."""
    if g.has_global:
        raise AlreadyAugmented(f"graph {g.id!r} already has a global node")
    n = g.n
    nodes = g.nodes + (NodeRecord(index=n, text=None, is_global=True),)
    edges = g.edges + tuple((i, n) for i in range(n))
    return Graph(
        id=g.id,
        nodes=nodes,
        edges=edges,
        label=g.label,
        graph_text=g.graph_text,
        size_cap=g.size_cap + 1,
    )


def permute(g: Graph, perm: list[int] | tuple[int, ...]) -> Graph:
    """Relabel nodes: old index i becomes perm[i]. Edge set follows."""
    if sorted(perm) != list(range(g.n)):
        raise InvalidPermutation(f"not a bijection on [0, {g.n})")
    nodes = [None] * g.n
    for old, node in enumerate(g.nodes):
        new = perm[old]
        nodes[new] = NodeRecord(index=new, text=node.text, is_global=node.is_global)
    edges = tuple((perm[i], perm[j]) for i, j in g.edges)
    return Graph(
        id=g.id,
        nodes=tuple(nodes),
        edges=edges,
        label=g.label,
        graph_text=g.graph_text,
        size_cap=g.size_cap,
    )


def bfs_hops(g: Graph, source: int) -> list[int | None]:
    """Hop distance from source per node; None for unreachable nodes."""
    if not (0 <= source < g.n):
        raise NodeOutOfRange(f"node {source} out of range for graph with {g.n} nodes")
    adj = g.neighbors()
    hops: list[int | None] = [None] * g.n
    hops[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if hops[v] is None:
                hops[v] = hops[u] + 1
                queue.append(v)
    return hops


def ego_graph(g: Graph, center: int, hops: int) -> tuple[Graph, dict[int, int]]:
    """Induced subgraph on nodes within `hops` of center.

    The center becomes index 0; remaining kept nodes follow in original
    index order. Returns the subgraph and the old->new index mapping.
    """
    if g.has_global:
        raise ValidationError("ego_graph expects a graph without a global node")
    if not (0 <= center < g.n):
        raise NodeOutOfRange(f"center {center} out of range for graph with {g.n} nodes")
    if hops < 0:
        raise ValidationError("hops must be >= 0")
    dist = bfs_hops(g, center)
    kept = [center] + [
        v for v in range(g.n) if v != center and dist[v] is not None and dist[v] <= hops
    ]
    mapping = {old: new for new, old in enumerate(kept)}
    nodes = tuple(
        NodeRecord(index=new, text=g.nodes[old].text, is_global=False)
        for old, new in sorted(mapping.items(), key=lambda kv: kv[1])
    )
    edges = tuple(
        (mapping[i], mapping[j]) for i, j in g.edges if i in mapping and j in mapping
    )
    sub = Graph(
        id=f"{g.id}#ego{center}h{hops}",
        nodes=nodes,
        edges=edges,
        label=g.label,
        graph_text=g.graph_text,
        size_cap=g.size_cap,
    )
    return sub, mapping
