"""Co-editing networks and their window-level measures.

The co-editing network of a window is a directed multigraph: an edge
A -> B records developer B modifying (or deleting) a line last owned by
A; self-edits are self-loops. Density, diameter, clustering, and the
eigengap are computed on the flattened graph (multiplicities collapsed),
the foreign modification ratio on the raw multigraph.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .ownership import ADDITION, EditEvent


@dataclass
class CoEditGraph:
    """Directed multigraph over developers; edges kept as an ordered list."""

    nodes: set[str] = field(default_factory=set)
    edges: list[tuple[str, str]] = field(default_factory=list)  # (owner, editor)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


@dataclass
class FlatGraph:
    """Simple directed view: multiplicities collapsed, self-loops as flags."""

    nodes: set[str] = field(default_factory=set)
    succ: dict[str, set[str]] = field(default_factory=dict)  # loop-free
    self_loops: set[str] = field(default_factory=set)


@dataclass(frozen=True)
class NetworkMetrics:
    """The eight per-window network measures."""

    n: int
    edges: int
    dens: float
    diam: int
    clustc: float
    ind: float
    fmodr: float
    eigg: float


def build_coedit_graph(events: Iterable[EditEvent]) -> CoEditGraph:
    """Build the window's multigraph from its edit events.

    Nodes are all editors and previous owners; every modification or
    deletion with a known previous owner contributes one multi-edge.
    Additions contribute their editor as a node but no edge.
    """
    graph = CoEditGraph()
    for ev in events:
        graph.nodes.add(ev.editor)
        if ev.previous_owner is not None:
            graph.nodes.add(ev.previous_owner)
            if ev.kind != ADDITION:
                graph.edges.append((ev.previous_owner, ev.editor))
    return graph


def flatten(g: CoEditGraph) -> FlatGraph:
    """Collapse multi-edges to single directed edges; keep self-loop flags."""
    flat = FlatGraph(nodes=set(g.nodes))
    flat.succ = {node: set() for node in g.nodes}
    for src, dst in g.edges:
        if src == dst:
            flat.self_loops.add(src)
        else:
            flat.succ[src].add(dst)
    return flat


def _undirected(flat: FlatGraph) -> dict[str, set[str]]:
    adj: dict[str, set[str]] = {node: set() for node in flat.nodes}
    for src, targets in flat.succ.items():
        for dst in targets:
            adj[src].add(dst)
            adj[dst].add(src)
    return adj


def _components(adj: dict[str, set[str]]) -> list[set[str]]:
    seen: set[str] = set()
    comps = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp = {start}
        queue = deque([start])
        while queue:
            node = queue.popleft()
            for nxt in adj[node]:
                if nxt not in comp:
                    comp.add(nxt)
                    queue.append(nxt)
        seen |= comp
        comps.append(comp)
    return comps


def largest_component(adj: dict[str, set[str]]) -> set[str]:
    """Largest connected component; ties resolved by smallest member node."""
    comps = _components(adj)
    if not comps:
        return set()
    return min(comps, key=lambda c: (-len(c), min(c)))


def _bfs_eccentricity(adj, start, members) -> int:
    dist = {start: 0}
    queue = deque([start])
    far = 0
    while queue:
        node = queue.popleft()
        for nxt in adj[node]:
            if nxt in members and nxt not in dist:
                dist[nxt] = dist[node] + 1
                far = max(far, dist[nxt])
                queue.append(nxt)
    return far


def diameter(adj: dict[str, set[str]]) -> int:
    """Longest shortest path within the largest connected component."""
    comp = largest_component(adj)
    if len(comp) <= 1:
        return 0
    return max(_bfs_eccentricity(adj, node, comp) for node in comp)


def mean_clustering(adj: dict[str, set[str]]) -> float:
    """Average local clustering; nodes of degree < 2 contribute 0."""
    if not adj:
        return 0.0
    total = 0.0
    for node, neigh in adj.items():
        k = len(neigh)
        if k < 2:
            continue
        ordered = sorted(neigh)
        links = sum(
            1
            for i in range(k)
            for j in range(i + 1, k)
            if ordered[j] in adj[ordered[i]]
        )
        total += 2.0 * links / (k * (k - 1))
    return total / len(adj)


def adjacency_eigengap(adj: dict[str, set[str]]) -> float:
    """lambda_1 - lambda_2 of the largest component's adjacency matrix."""
    comp = sorted(largest_component(adj))
    if len(comp) <= 1:
        return 0.0
    index = {node: i for i, node in enumerate(comp)}
    mat = np.zeros((len(comp), len(comp)))
    for node in comp:
        for nxt in adj[node]:
            if nxt in index:
                mat[index[node], index[nxt]] = 1.0
    eigvals = np.linalg.eigvalsh(mat)
    return float(eigvals[-1] - eigvals[-2])


def laplacian_gap(adj: dict[str, set[str]]) -> float:
    """Normalized-Laplacian spectral gap (lambda_2) of the largest component."""
    comp = sorted(largest_component(adj))
    if len(comp) <= 1:
        return 0.0
    index = {node: i for i, node in enumerate(comp)}
    a = np.zeros((len(comp), len(comp)))
    for node in comp:
        for nxt in adj[node]:
            if nxt in index:
                a[index[node], index[nxt]] = 1.0
    deg = a.sum(axis=1)
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.maximum(deg, 1e-300)), 0.0)
    lap = np.eye(len(comp)) - (inv_sqrt[:, None] * a * inv_sqrt[None, :])
    eigvals = np.linalg.eigvalsh(lap)
    return float(eigvals[1] - eigvals[0])


def network_metrics(
    g: CoEditGraph, team_size: int, eigengap_kind: str = "adjacency"
) -> NetworkMetrics:
    """Compute the eight measures for one window's co-editing graph.

    Conventions on degenerate graphs: density needs n >= 2 (else 0);
    diameter and eigengap are 0 for components of one node; the foreign
    modification ratio averages per-developer ratios over the team, so
    team members without co-edits contribute 0.

    Density excludes self-loops from both numerator and denominator. The
    mean indegree counts distinct predecessors in the flattened graph,
    including the node itself when it has a self-loop: a developer editing
    their own code is a developer whose code was edited.
    """
    flat = flatten(g)
    n = len(flat.nodes)
    simple_edges = sum(len(t) for t in flat.succ.values())

    dens = simple_edges / (n * (n - 1)) if n >= 2 else 0.0

    undirected = _undirected(flat)
    diam = diameter(undirected)
    clustc = mean_clustering(undirected)

    indegree_total = 0
    for node in flat.nodes:
        preds = {src for src, targets in flat.succ.items() if node in targets}
        if node in flat.self_loops:
            preds.add(node)
        indegree_total += len(preds)
    ind = indegree_total / n if n else 0.0

    in_all: dict[str, int] = {}
    in_foreign: dict[str, int] = {}
    for src, dst in g.edges:
        in_all[dst] = in_all.get(dst, 0) + 1
        if src != dst:
            in_foreign[dst] = in_foreign.get(dst, 0) + 1
    ratio_sum = sum(
        in_foreign.get(node, 0) / total for node, total in in_all.items() if total > 0
    )
    fmodr = ratio_sum / team_size if team_size > 0 else 0.0

    if eigengap_kind == "adjacency":
        eigg = adjacency_eigengap(undirected)
    elif eigengap_kind == "normalized_laplacian":
        eigg = laplacian_gap(undirected)
    else:
        raise ValueError(f"unknown eigengap kind {eigengap_kind!r}")

    return NetworkMetrics(
        n=n,
        edges=g.edge_count,
        dens=dens,
        diam=diam,
        clustc=clustc,
        ind=ind,
        fmodr=fmodr,
        eigg=eigg,
    )


def feature_cluster_select(
    corr: np.ndarray,
    features: Sequence[str],
    threshold: float,
    preferred: Sequence[str] | None = None,
) -> list[str]:
    """Pick one representative feature per correlation cluster.

    Features whose |r| meets the threshold are grouped by single linkage
    (connected components of the thresholded correlation graph); each
    group is represented by its first member in ``preferred`` order.
    Returned representatives are in preferred order too.
    """
    corr = np.asarray(corr, dtype=float)
    k = len(features)
    if corr.shape != (k, k):
        raise ValueError("correlation matrix does not match feature list")
    if not np.allclose(corr, corr.T, equal_nan=True):
        raise ValueError("correlation matrix must be symmetric")
    order = list(preferred) if preferred is not None else list(features)
    for name in features:
        if name not in order:
            order.append(name)
    rank = {name: i for i, name in enumerate(order)}

    adj: dict[str, set[str]] = {name: set() for name in features}
    for i in range(k):
        for j in range(i + 1, k):
            if not np.isnan(corr[i, j]) and abs(corr[i, j]) >= threshold:
                adj[features[i]].add(features[j])
                adj[features[j]].add(features[i])
    groups = _components(adj)
    reps = [min(group, key=lambda name: rank[name]) for group in groups]
    return sorted(reps, key=lambda name: rank[name])


def export_edges_csv(g: CoEditGraph, path) -> None:
    """Write the multigraph as ``from,to,multiplicity`` rows."""
    counts: dict[tuple[str, str], int] = {}
    for edge in g.edges:
        counts[edge] = counts.get(edge, 0) + 1
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("from,to,multiplicity\n")
        for (src, dst), mult in sorted(counts.items()):
            fh.write(f"{src},{dst},{mult}\n")
