"""Undirected graphs: generators, edge-list ingestion, subsampling, statistics."""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Graph:
    """Unweighted undirected graph as a dense symmetric 0/1 adjacency matrix."""

    adjacency: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(a != a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        if self.labels is not None and len(self.labels) != a.shape[0]:
            raise ValueError("labels length must match node count")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def edge_count(self):
        return int(round(self.adjacency.sum() / 2))

    def degrees(self):
        return self.adjacency.sum(axis=1)

    def edges(self):
        """Edge list as (u, v) index arrays with u < v."""
        iu, iv = np.nonzero(np.triu(self.adjacency, k=1))
        return iu, iv


@dataclass(frozen=True)
class GraphStats:
    density: float
    edge_count: int
    clustering_coeff: float
    zero_degree_fraction: float


def generate_ba(n, m, seed):
    """Preferential-attachment graph: m-node edgeless core, each of the n-m
    arrivals attaches m distinct edges (the first arrival wires to the whole
    core, which keeps the graph connected and the edge count at m*(n-m))."""
    if m < 1 or m >= n:
        raise ValueError("need 1 <= m < n")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n, n))
    # One entry per edge endpoint; sampling from it is degree-proportional.
    repeated = []
    for v in range(m, n):
        if v == m:
            targets = list(range(m))
        else:
            targets = set()
            while len(targets) < m:
                targets.add(repeated[rng.integers(len(repeated))])
            targets = sorted(targets)
        for t in targets:
            adj[v, t] = adj[t, v] = 1.0
            repeated.append(t)
            repeated.append(v)
    return Graph(adj)


def generate_ws(n, k, p, seed):
    """Ring lattice of even degree k with probability-p rewiring; the rewire
    step moves edges without changing their number."""
    if k % 2 != 0:
        raise ValueError("k must be even")
    if k <= 0 or k >= n:
        raise ValueError("need 0 < k < n")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    rng = np.random.default_rng(seed)
    adj = np.zeros((n, n))
    for i in range(n):
        for j in range(1, k // 2 + 1):
            t = (i + j) % n
            adj[i, t] = adj[t, i] = 1.0
    for i in range(n):
        for j in range(1, k // 2 + 1):
            t = (i + j) % n
            if adj[i, t] == 0:
                continue  # already rewired away
            if rng.random() < p:
                candidates = np.flatnonzero(adj[i] == 0)
                candidates = candidates[candidates != i]
                if candidates.size == 0:
                    continue
                new_t = int(candidates[rng.integers(candidates.size)])
                adj[i, t] = adj[t, i] = 0.0
                adj[i, new_t] = adj[new_t, i] = 1.0
    return Graph(adj)


def load_edge_list(lines):
    """Parse an edge list (two whitespace-separated ids per line, `#` comments).

    Identifiers are mapped densely to 0..n-1 in first-seen order; duplicate
    edges are collapsed and self-loops dropped, with counts logged.
    """
    if isinstance(lines, str):
        lines = lines.splitlines()
    index = {}
    order = []
    pairs = set()
    self_loops = 0
    duplicates = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ValueError(f"line {lineno}: expected two tokens, got {len(tokens)}")
        ids = []
        for tok in tokens:
            if tok not in index:
                index[tok] = len(order)
                order.append(tok)
            ids.append(index[tok])
        u, v = ids
        if u == v:
            self_loops += 1
            continue
        key = (min(u, v), max(u, v))
        if key in pairs:
            duplicates += 1
            continue
        pairs.add(key)
    if self_loops or duplicates:
        logger.info(
            "edge list normalized: %d self-loops dropped, %d duplicates collapsed",
            self_loops,
            duplicates,
        )
    n = len(order)
    adj = np.zeros((n, n))
    for u, v in pairs:
        adj[u, v] = adj[v, u] = 1.0
    return Graph(adj, labels=tuple(order))


def subsample_nodes(g, n_sub, seed):
    """Induced subgraph on a uniformly random node subset (original order kept)."""
    if n_sub > g.n:
        raise ValueError("cannot sample more nodes than the graph has")
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(g.n, size=n_sub, replace=False))
    adj = g.adjacency[np.ix_(chosen, chosen)]
    labels = tuple(g.labels[i] for i in chosen) if g.labels is not None else None
    return Graph(adj, labels=labels)


def greedy_strategic_nodes(g, k):
    """k greedy picks, each maximizing newly covered neighbors; ties go to the
    lowest node index, so the result is deterministic."""
    if k > g.n:
        raise ValueError("cannot pick more nodes than the graph has")
    adj = g.adjacency
    covered = np.zeros(g.n, dtype=bool)
    chosen = []
    available = set(range(g.n))
    for _ in range(k):
        best_node = -1
        best_gain = -1
        for v in sorted(available):
            gain = int(np.sum((adj[v] > 0) & ~covered))
            if gain > best_gain:
                best_gain = gain
                best_node = v
        chosen.append(best_node)
        available.discard(best_node)
        covered |= adj[best_node] > 0
    return chosen


def stats(g):
    """Density, edge count, average local clustering, zero-degree fraction."""
    if g.n < 2:
        raise ValueError("statistics need at least two nodes")
    a = g.adjacency
    n = g.n
    deg = a.sum(axis=1)
    edge_count = g.edge_count
    density = 2.0 * edge_count / (n * (n - 1))
    a3_diag = np.einsum("ij,jk,ki->i", a, a, a)
    denom = deg * (deg - 1)
    local = np.divide(a3_diag, denom, out=np.zeros(n), where=denom > 0)
    return GraphStats(
        density=float(density),
        edge_count=edge_count,
        clustering_coeff=float(local.mean()),
        zero_degree_fraction=float(np.mean(deg == 0)),
    )
