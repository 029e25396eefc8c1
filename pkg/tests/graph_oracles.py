"""Independent brute-force oracles for the six graph metrics.

Deliberately different machinery from the production code: Floyd-Warshall
distances, explicit shortest-path enumeration, dense symmetric eigendecomposition
and definition-level k-core survival checks.
"""

from __future__ import annotations

import itertools

import numpy as np

INF = float("inf")


def edges_to_adj(nodes, edges):
    adj = {v: set() for v in nodes}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def floyd_warshall(nodes, adj):
    index = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    dist = np.full((n, n), INF)
    np.fill_diagonal(dist, 0.0)
    for u in nodes:
        for w in adj[u]:
            dist[index[u], index[w]] = 1.0
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if dist[i, k] + dist[k, j] < dist[i, j]:
                    dist[i, j] = dist[i, k] + dist[k, j]
    return dist, index


def oracle_degree(nodes, adj, v):
    n = len(nodes)
    if n <= 1:
        return 0.0
    return len(adj[v]) / (n - 1)


def oracle_closeness(nodes, adj, v):
    n = len(nodes)
    if n <= 1:
        return 0.0
    dist, index = floyd_warshall(nodes, adj)
    row = dist[index[v]]
    reachable = [d for d in row if d not in (0.0, INF)]
    if not reachable:
        return 0.0
    comp_size = len(reachable)  # excludes v itself
    return (comp_size / sum(reachable)) * (comp_size / (n - 1))


def _all_shortest_paths(adj, dist, index, s, t):
    """Every shortest s-t path, enumerated by DFS along decreasing distance."""
    if dist[index[s], index[t]] == INF or s == t:
        return []
    paths = []

    def walk(u, path):
        if u == t:
            paths.append(list(path))
            return
        for w in adj[u]:
            if dist[index[w], index[t]] == dist[index[u], index[t]] - 1:
                path.append(w)
                walk(w, path)
                path.pop()

    walk(s, [s])
    return paths


def oracle_betweenness(nodes, adj, v):
    n = len(nodes)
    if n < 3:
        return 0.0
    dist, index = floyd_warshall(nodes, adj)
    total = 0.0
    for s, t in itertools.permutations(nodes, 2):
        if s == v or t == v:
            continue
        paths = _all_shortest_paths(adj, dist, index, s, t)
        if not paths:
            continue
        through = sum(1 for path in paths if v in path[1:-1])
        total += through / len(paths)
    return total / ((n - 1) * (n - 2))


def oracle_eigenvector(nodes, adj, v):
    if not adj[v]:
        return 0.0
    # restrict to v's component
    component = {v}
    frontier = [v]
    while frontier:
        u = frontier.pop()
        for w in adj[u]:
            if w not in component:
                component.add(w)
                frontier.append(w)
    comp = sorted(component)
    index = {u: i for i, u in enumerate(comp)}
    a = np.zeros((len(comp), len(comp)))
    for u in comp:
        for w in adj[u]:
            a[index[u], index[w]] = 1.0
    eigvals, eigvecs = np.linalg.eigh(a)
    vec = eigvecs[:, -1]
    vec = np.abs(vec)  # Perron vector of a connected component is positive
    return float(vec[index[v]] / vec.max())


def oracle_clustering(nodes, adj, v):
    neighbors = sorted(adj[v])
    k = len(neighbors)
    if k < 2:
        return 0.0
    triangles = sum(
        1 for a, b in itertools.combinations(neighbors, 2) if b in adj[a]
    )
    return 2.0 * triangles / (k * (k - 1))


def oracle_core(nodes, adj, v):
    best = 0
    for k in range(len(nodes) + 1):
        alive = set(nodes)
        changed = True
        while changed:
            changed = False
            for u in list(alive):
                if len(adj[u] & alive) < k:
                    alive.discard(u)
                    changed = True
        if v in alive:
            best = k
    return best


def enumerate_graphs(n):
    """Yield every labeled simple graph on nodes 0..n-1 as an edge tuple."""
    possible = list(itertools.combinations(range(n), 2))
    for mask in range(2 ** len(possible)):
        yield tuple(e for i, e in enumerate(possible) if mask >> i & 1)
