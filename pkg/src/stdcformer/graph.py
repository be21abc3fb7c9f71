"""Region adjacency graph and Laplacian eigenvector embedding."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import FrozenSet, List, Sequence, Tuple

import numpy as np

SIGN_EPS = 1e-8


@dataclass
class AdjacencyGraph:
    """Undirected region graph over indices 0..n-1; no self-loops."""

    n: int
    edges: FrozenSet[Tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        canonical = set()
        for a, b in self.edges:
            if a == b:
                raise ValueError(f"self-loop at node {a}")
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ValueError(f"edge ({a}, {b}) outside 0..{self.n - 1}")
            canonical.add((min(a, b), max(a, b)))
        self.edges = frozenset(canonical)

    def adjacency_matrix(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n), dtype=np.float64)
        for a, b in self.edges:
            adj[a, b] = 1.0
            adj[b, a] = 1.0
        return adj

    def components(self) -> List[List[int]]:
        neighbors = [[] for _ in range(self.n)]
        for a, b in self.edges:
            neighbors[a].append(b)
            neighbors[b].append(a)
        seen = [False] * self.n
        out = []
        for root in range(self.n):
            if seen[root]:
                continue
            stack, comp = [root], []
            seen[root] = True
            while stack:
                node = stack.pop()
                comp.append(node)
                for nbr in neighbors[node]:
                    if not seen[nbr]:
                        seen[nbr] = True
                        stack.append(nbr)
            out.append(sorted(comp))
        return out


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """First entry with magnitude above SIGN_EPS in each column made positive."""
    fixed = vectors.copy()
    for k in range(fixed.shape[1]):
        col = fixed[:, k]
        above = np.nonzero(np.abs(col) > SIGN_EPS)[0]
        if above.size and col[above[0]] < 0:
            fixed[:, k] = -col
    return fixed


def laplacian_embedding(graph: AdjacencyGraph, lap_dim: int) -> np.ndarray:
    """Eigenvectors of the symmetric-normalized Laplacian as region coordinates.

    Returns [n, lap_dim]: the eigenvectors for the lap_dim smallest non-trivial
    eigenvalues (the eigenvalue-0 vector excluded), ascending, unit norm,
    sign-fixed. Ties between repeated eigenvalues are broken lexicographically
    on the sign-fixed vectors (arbitrary but deterministic).
    """
    comps = graph.components()
    if len(comps) > 1:
        raise ValueError(f"graph is disconnected; components: {comps}")
    if lap_dim > graph.n - 1:
        raise ValueError(f"lap_dim {lap_dim} exceeds n - 1 = {graph.n - 1}")
    if lap_dim < 1:
        raise ValueError("lap_dim must be >= 1")

    adj = graph.adjacency_matrix()
    deg = adj.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(deg)
    lap = np.eye(graph.n) - (inv_sqrt[:, None] * adj) * inv_sqrt[None, :]
    eigvals, eigvecs = np.linalg.eigh(lap)

    eigvecs = _fix_signs(eigvecs)
    order = sorted(
        range(graph.n), key=lambda k: (round(eigvals[k] / SIGN_EPS), tuple(eigvecs[:, k]))
    )
    # drop the trivial eigenvalue-0 vector, keep the next lap_dim columns
    keep = order[1:1 + lap_dim]
    return eigvecs[:, keep]


def grid_graph(n: int) -> AdjacencyGraph:
    """Near-square grid over n nodes, row-major, 4-neighborhood."""
    rows = max(1, int(np.floor(np.sqrt(n))))
    cols = int(np.ceil(n / rows))
    edges = set()
    for i in range(n):
        r, c = divmod(i, cols)
        if c + 1 < cols and i + 1 < n and (i + 1) // cols == r:
            edges.add((i, i + 1))
        if (r + 1) * cols + c < n:
            edges.add((i, (r + 1) * cols + c))
    return AdjacencyGraph(n=n, edges=frozenset(edges))


def ring_graph(n: int) -> AdjacencyGraph:
    edges = {(i, (i + 1) % n) for i in range(n)}
    return AdjacencyGraph(n=n, edges=frozenset(edges))


def load_edge_list(path, region_ids: Sequence[str]) -> AdjacencyGraph:
    """Read an undirected `region_id_a,region_id_b` edge-list file."""
    index = {rid: i for i, rid in enumerate(region_ids)}
    edges = set()
    with open(path, newline="") as fh:
        for line_num, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{line_num}: expected two region ids")
            a, b = row[0].strip(), row[1].strip()
            for rid in (a, b):
                if rid not in index:
                    raise ValueError(f"{path}:{line_num}: unknown region id {rid!r}")
            edges.add((index[a], index[b]))
    return AdjacencyGraph(n=len(region_ids), edges=frozenset(edges))


def write_edge_list(path, graph: AdjacencyGraph, region_ids: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for a, b in sorted(graph.edges):
            writer.writerow([region_ids[a], region_ids[b]])


def write_embedding_csv(path, embedding: np.ndarray, region_ids: Sequence[str]) -> None:
    """Dump the embedding rows for inspection."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region_id"] + [f"lap_{k}" for k in range(embedding.shape[1])])
        for rid, row in zip(region_ids, embedding):
            writer.writerow([rid] + [repr(float(v)) for v in row])
