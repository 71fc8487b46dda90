"""Correlation distances, minimal spanning trees and node-degree statistics."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .ingest import PanelError
from .spectrum import CorrelationMatrix

CORRELATION_TOL = 1e-10


@dataclass(frozen=True)
class DistanceMatrix:
    currencies: tuple[str, ...]
    entries: np.ndarray

    def __post_init__(self):
        d = np.array(self.entries, dtype=float)
        n = len(self.currencies)
        if d.shape != (n, n):
            raise PanelError(f"distance matrix shape {d.shape} does not match {n} labels")
        if len(set(self.currencies)) != n:
            raise PanelError("duplicate node labels")
        d.flags.writeable = False
        object.__setattr__(self, "currencies", tuple(self.currencies))
        object.__setattr__(self, "entries", d)


@dataclass(frozen=True)
class SpanningTree:
    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, float], ...]  # (a, b, d) with a < b, sorted

    @property
    def degree(self) -> dict[str, int]:
        deg = Counter({node: 0 for node in self.nodes})
        for a, b, _ in self.edges:
            deg[a] += 1
            deg[b] += 1
        return dict(deg)

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def edge_set(self) -> frozenset[tuple[str, str]]:
        return frozenset((a, b) for a, b, _ in self.edges)


@dataclass(frozen=True)
class DegreeDistribution:
    """``counts[K]`` nodes with exactly K legs; ``cumulative[K]`` = fraction with K or more."""

    counts: dict[int, int]
    cumulative: dict[int, float]
    k_max: int
    n_nodes: int

    def occupied(self) -> tuple[np.ndarray, np.ndarray]:
        """K values with at least one node, and F at those K."""
        ks = np.array(sorted(k for k, c in self.counts.items() if c > 0), dtype=float)
        return ks, np.array([self.cumulative[int(k)] for k in ks])

    @property
    def mean_degree(self) -> float:
        return sum(k * c for k, c in self.counts.items()) / self.n_nodes


def distance_matrix(c: CorrelationMatrix | np.ndarray, currencies: Sequence[str] | None = None) -> DistanceMatrix:
    """``d = sqrt((1 - C) / 2)`` elementwise."""
    if isinstance(c, CorrelationMatrix):
        entries, currencies = c.entries, c.currencies
    else:
        entries = np.asarray(c, dtype=float)
        if currencies is None:
            raise ValueError("currencies are required for a bare array")
    if np.any(np.abs(entries) > 1 + CORRELATION_TOL):
        raise PanelError("correlation entry outside [-1, 1]")
    d = np.sqrt((1.0 - np.clip(entries, -1.0, 1.0)) / 2.0)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(tuple(currencies), d)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def build_mst(dist: DistanceMatrix) -> SpanningTree:
    """Kruskal's algorithm: repeatedly join the closest pair not yet connected.

    Ties in distance are broken by the (first, second) code pair so that
    degenerate inputs still give a reproducible tree.
    """
    codes = dist.currencies
    n = len(codes)
    if n < 2:
        raise PanelError("need at least 2 nodes for a spanning tree")
    d = dist.entries
    iu, ju = np.triu_indices(n, k=1)
    candidates = []
    for i, j in zip(iu.tolist(), ju.tolist()):
        a, b = (codes[i], codes[j]) if codes[i] < codes[j] else (codes[j], codes[i])
        candidates.append((float(d[i, j]), a, b, i, j))
    candidates.sort(key=lambda e: e[:3])

    uf = UnionFind(n)
    edges = []
    for w, a, b, i, j in candidates:
        if uf.union(i, j):
            edges.append((a, b, w))
            if len(edges) == n - 1:
                break
    return SpanningTree(codes, tuple(sorted(edges)))


def degree_distribution(tree: SpanningTree) -> DegreeDistribution:
    return distribution_from_degrees(tree.degree.values())


def distribution_from_degrees(degrees: Iterable[int]) -> DegreeDistribution:
    """Exact and cumulative counts, defined at every K in 1..k_max."""
    degrees = list(degrees)
    if not degrees or min(degrees) < 0:
        raise ValueError("degrees must be a non-empty list of nonnegative integers")
    n = len(degrees)
    hist = Counter(degrees)
    k_max = max(degrees)
    counts = {k: hist.get(k, 0) for k in range(1, k_max + 1)}
    cumulative = {}
    tail = 0
    for k in range(k_max, 0, -1):
        tail += hist.get(k, 0)
        cumulative[k] = tail / n
    return DegreeDistribution(counts, dict(sorted(cumulative.items())), k_max, n)


def export_tree(tree: SpanningTree, fmt: str = "dot", name: str | None = None) -> bytes:
    """Serialize a tree as Graphviz DOT or as ``a,b,distance`` CSV."""
    if fmt == "dot":
        lines = [f'graph "{name or "MST"}" {{']
        lines += [f'  "{node}";' for node in sorted(tree.nodes)]
        lines += [f'  "{a}" -- "{b}" [label="{w:.6f}"];' for a, b, w in tree.edges]
        lines.append("}")
        return ("\n".join(lines) + "\n").encode("utf-8")
    if fmt in ("edge-csv", "csv"):
        out = io.StringIO()
        out.write("a,b,distance\n")
        for a, b, w in tree.edges:
            out.write(f"{a},{b},{w!r}\n")
        return out.getvalue().encode("utf-8")
    raise ValueError(f"unknown tree format {fmt!r}; expected 'dot' or 'edge-csv'")


def parse_edge_csv(data: bytes | str) -> SpanningTree:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["a", "b", "distance"]:
        raise PanelError("edge CSV must start with header 'a,b,distance'")
    edges = []
    nodes: set[str] = set()
    for a, b, w in rows[1:]:
        a, b = min(a, b), max(a, b)
        edges.append((a, b, float(w)))
        nodes.update((a, b))
    return SpanningTree(tuple(sorted(nodes)), tuple(sorted(edges)))


def distribution_to_csv(dist: DegreeDistribution) -> bytes:
    out = io.StringIO()
    out.write("K,N_prime,F\n")
    for k in range(1, dist.k_max + 1):
        out.write(f"{k},{dist.counts[k]},{dist.cumulative[k]:.12g}\n")
    return out.getvalue().encode("utf-8")
