"""Developer interaction graph and the six owner collaboration metrics.

The graph is undirected: one edge (owner, participant) per distinct non-owner,
non-bot message author on each prior in-window change, with the weight counting
how many changes the pair interacted on.  All centralities are computed on the
unweighted simple graph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConvergenceFailureError
from .gerrit import ChangeRecord

DEFAULT_WINDOW_DAYS = 365

EIGENVECTOR_TOL = 1e-10
EIGENVECTOR_MAX_ITER = 1000


@dataclass(frozen=True)
class InteractionGraph:
    nodes: frozenset[int]
    edges: dict[tuple[int, int], int]  # key is the sorted node pair
    as_of: datetime | None = None
    window_days: int = DEFAULT_WINDOW_DAYS

    def __post_init__(self):
        for (u, v), w in self.edges.items():
            if u == v:
                raise ValueError("self-loops are not allowed")
            if u > v:
                raise ValueError("edge keys must be sorted pairs")
            if w < 1:
                raise ValueError("edge weights must be >= 1")
            if u not in self.nodes or v not in self.nodes:
                raise ValueError("edge endpoint missing from node set")

    def adjacency(self) -> dict[int, set[int]]:
        adj: dict[int, set[int]] = {v: set() for v in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


@dataclass(frozen=True)
class CollabFeatures:
    degree_centrality: float = 0.0
    closeness_centrality: float = 0.0
    betweenness_centrality: float = 0.0
    eigenvector_centrality: float = 0.0
    clustering_coefficient: float = 0.0
    core_number: int = 0


def graph_from_edges(edges: Iterable[tuple[int, int]],
                     extra_nodes: Iterable[int] = ()) -> InteractionGraph:
    """Build a graph from unweighted edge pairs (test/debug convenience)."""
    weights: dict[tuple[int, int], int] = {}
    nodes = set(extra_nodes)
    for u, v in edges:
        key = (u, v) if u < v else (v, u)
        weights[key] = weights.get(key, 0) + 1
        nodes.update(key)
    return InteractionGraph(nodes=frozenset(nodes), edges=weights)


def build_graph(history: Sequence[ChangeRecord], as_of: datetime,
                window_days: int = DEFAULT_WINDOW_DAYS) -> InteractionGraph:
    """Accumulate owner-participant interactions over the window before as_of."""
    window_start = as_of - timedelta(days=window_days)
    weights: dict[tuple[int, int], int] = {}
    nodes: set[int] = set()
    for change in history:
        if not (window_start <= change.created_at < as_of):
            continue
        owner = change.owner_id
        participants = {
            m.author_id
            for m in change.messages
            if m.author_id != owner and not m.from_bot
        }
        for participant in participants:
            key = (owner, participant) if owner < participant else (participant, owner)
            weights[key] = weights.get(key, 0) + 1
            nodes.update(key)
    return InteractionGraph(
        nodes=frozenset(nodes),
        edges=weights,
        as_of=as_of,
        window_days=window_days,
    )


def _bfs_distances(adj: dict[int, set[int]], source: int) -> dict[int, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def _component_of(adj: dict[int, set[int]], v: int) -> list[int]:
    return sorted(_bfs_distances(adj, v))


def degree_centrality(graph: InteractionGraph, v: int) -> float:
    if v not in graph.nodes:
        return 0.0
    n = len(graph.nodes)
    if n <= 1:
        return 0.0
    adj = graph.adjacency()
    return len(adj[v]) / (n - 1)


def closeness_centrality(graph: InteractionGraph, v: int) -> float:
    """Component-scaled closeness over unweighted shortest paths.

    Within v's component C the raw closeness is (|C|-1) / sum of distances;
    the value is scaled by (|C|-1)/(n-1) so disconnected graphs stay
    comparable.  Isolated vertices score 0.
    """
    if v not in graph.nodes:
        return 0.0
    n = len(graph.nodes)
    if n <= 1:
        return 0.0
    adj = graph.adjacency()
    dist = _bfs_distances(adj, v)
    total = sum(dist.values())
    if total == 0:
        return 0.0
    reachable = len(dist) - 1
    return (reachable / total) * (reachable / (n - 1))


def betweenness_centrality(graph: InteractionGraph, v: int) -> float:
    """Normalized shortest-path betweenness (Brandes accumulation).

    Pair dependencies are summed over ordered pairs (s, t) with s, t != v
    and divided by (n-1)(n-2); zero for n < 3.
    """
    if v not in graph.nodes:
        return 0.0
    n = len(graph.nodes)
    if n < 3:
        return 0.0
    adj = graph.adjacency()
    score = 0.0
    for s in graph.nodes:
        # single-source shortest paths with path counts
        dist = {s: 0}
        sigma = {s: 1.0}
        preds: dict[int, list[int]] = {s: []}
        order: list[int] = []
        queue = deque([s])
        while queue:
            u = queue.popleft()
            order.append(u)
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    sigma[w] = 0.0
                    preds[w] = []
                    queue.append(w)
                if dist[w] == dist[u] + 1:
                    sigma[w] += sigma[u]
                    preds[w].append(u)
        delta = {u: 0.0 for u in order}
        for w in reversed(order):
            for u in preds[w]:
                delta[u] += sigma[u] / sigma[w] * (1.0 + delta[w])
            if w != s and w == v:
                score += delta[w]
    return score / ((n - 1) * (n - 2))


def eigenvector_centrality(graph: InteractionGraph, v: int) -> float:
    """Power-iteration eigenvector centrality within v's component.

    The converged vector is rescaled so its largest entry is 1; the iterate is
    damped by 0.5 to suppress oscillation on bipartite components.
    """
    if v not in graph.nodes:
        return 0.0
    adj = graph.adjacency()
    if not adj[v]:
        return 0.0
    component = _component_of(adj, v)
    index = {u: i for i, u in enumerate(component)}
    m = len(component)
    a = np.zeros((m, m))
    for u in component:
        for w in adj[u]:
            a[index[u], index[w]] = 1.0
    x = np.full(m, 1.0 / np.sqrt(m))
    for _ in range(EIGENVECTOR_MAX_ITER):
        y = a @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        y /= norm
        x_new = 0.5 * x + 0.5 * y
        x_new /= np.linalg.norm(x_new)
        if np.max(np.abs(x_new - x)) < EIGENVECTOR_TOL:
            x = x_new
            break
        x = x_new
    else:
        raise ConvergenceFailureError(
            f"eigenvector iteration did not converge in {EIGENVECTOR_MAX_ITER} steps"
        )
    x = np.abs(x)
    return float(x[index[v]] / np.max(x))


def clustering_coefficient(graph: InteractionGraph, v: int) -> float:
    if v not in graph.nodes:
        return 0.0
    adj = graph.adjacency()
    neighbors = adj[v]
    k = len(neighbors)
    if k < 2:
        return 0.0
    links = 0
    for u in neighbors:
        links += len(adj[u] & neighbors)
    # each neighbor-neighbor edge counted twice in the loop above
    return links / (k * (k - 1))


def core_number(graph: InteractionGraph, v: int) -> int:
    """Largest k such that v survives iterative removal of degree < k vertices."""
    if v not in graph.nodes:
        return 0
    cores = core_numbers(graph)
    return cores[v]


def core_numbers(graph: InteractionGraph) -> dict[int, int]:
    adj = {u: set(ns) for u, ns in graph.adjacency().items()}
    degrees = {u: len(ns) for u, ns in adj.items()}
    cores: dict[int, int] = {}
    remaining = set(adj)
    k = 0
    while remaining:
        k = max(k, min(degrees[u] for u in remaining))
        peel = [u for u in remaining if degrees[u] <= k]
        while peel:
            u = peel.pop()
            if u not in remaining:
                continue
            cores[u] = k
            remaining.discard(u)
            for w in adj[u]:
                if w in remaining:
                    degrees[w] -= 1
                    if degrees[w] <= k:
                        peel.append(w)
    return cores


def collab_features(graph: InteractionGraph, owner: int) -> CollabFeatures:
    """All six owner metrics; zeros when the owner is absent from the graph."""
    if owner not in graph.nodes:
        return CollabFeatures()
    return CollabFeatures(
        degree_centrality=degree_centrality(graph, owner),
        closeness_centrality=closeness_centrality(graph, owner),
        betweenness_centrality=betweenness_centrality(graph, owner),
        eigenvector_centrality=eigenvector_centrality(graph, owner),
        clustering_coefficient=clustering_coefficient(graph, owner),
        core_number=core_number(graph, owner),
    )


def write_edge_list(graph: InteractionGraph, path: str | Path) -> None:
    """Debug dump as 'u v weight' lines, one edge per line."""
    lines = [f"{u} {v} {w}" for (u, v), w in sorted(graph.edges.items())]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
