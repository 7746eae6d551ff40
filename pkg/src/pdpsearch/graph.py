"""Immutable undirected graphs, edge-list ingestion and the hidden population split.

Vertices are dense integers ``0..n-1``. Original labels from an input file are
kept in :attr:`Graph.labels` so partitions and reports can be written back in
the caller's vocabulary.
"""

from __future__ import annotations

import io
import threading
from bisect import bisect_left
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import TextIO

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """Malformed edge-list or partition input."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class InvalidSeedError(ValueError):
    """A search was seeded with a vertex that is not targeted."""


Edge = tuple[int, int]


def _norm(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


class Graph:
    """Undirected simple graph with optional positive integer edge weights.

    Instances are immutable; every transformation returns a new graph.
    Neighbor lists are sorted ascending, which fixes the iteration order of
    every algorithm built on top.
    """

    __slots__ = ("_n", "_edges", "_weights", "_adj", "_labels", "_csr", "_lock")

    def __init__(
        self,
        n: int,
        edges: Iterable[Edge],
        weights: Mapping[Edge, int] | None = None,
        labels: Iterable[str] | None = None,
    ):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        adj: list[set[int]] = [set() for _ in range(n)]
        canon: set[Edge] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            e = _norm(u, v)
            canon.add(e)
            adj[u].add(v)
            adj[v].add(u)
        self._n = n
        self._edges = tuple(sorted(canon))
        self._adj = tuple(tuple(sorted(a)) for a in adj)
        if weights is not None:
            w = {}
            for e in self._edges:
                val = int(weights.get(e, weights.get((e[1], e[0]), 1)))
                if val < 1:
                    raise ValueError(f"edge {e} has non-positive weight {val}")
                w[e] = val
            self._weights = w
        else:
            self._weights = None
        self._labels = tuple(labels) if labels is not None else tuple(str(i) for i in range(n))
        if len(self._labels) != n:
            raise ValueError("label count does not match vertex count")
        self._csr = None
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self._n

    @property
    def edges(self) -> tuple[Edge, ...]:
        return self._edges

    @property
    def weighted(self) -> bool:
        return self._weights is not None

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    def weight(self, u: int, v: int) -> int:
        if self._weights is None:
            raise ValueError("graph is unweighted")
        return self._weights[_norm(u, v)]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        a = self._adj[u]
        i = bisect_left(a, v)
        return i < len(a) and a[i] == v

    @property
    def max_degree(self) -> int:
        return max((len(a) for a in self._adj), default=0)

    def __len__(self) -> int:
        return self._n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.canonical_bytes() == other.canonical_bytes()

    def __hash__(self) -> int:
        return hash(self.canonical_bytes())

    def __reduce__(self):
        # the lock and the CSR cache are rebuilt on the other side
        return (Graph, (self._n, self._edges, self._weights, self._labels))

    def __repr__(self) -> str:
        return f"Graph(n={self._n}, m={len(self._edges)}, weighted={self.weighted})"

    def canonical_bytes(self) -> bytes:
        """Serialization used for bit-identity checks."""
        buf = io.StringIO()
        buf.write(f"n {self._n}\n")
        for u, v in self._edges:
            if self._weights is None:
                buf.write(f"{u} {v}\n")
            else:
                buf.write(f"{u} {v} {self._weights[(u, v)]}\n")
        return buf.getvalue().encode()

    def adjacency_matrix(self) -> sp.csr_matrix:
        """0/1 adjacency in CSR form, cached."""
        with self._lock:
            if self._csr is None:
                indptr = np.zeros(self._n + 1, dtype=np.int64)
                np.cumsum([len(a) for a in self._adj], out=indptr[1:])
                indices = np.fromiter(
                    (u for a in self._adj for u in a), dtype=np.int64, count=int(indptr[-1])
                )
                data = np.ones(len(indices), dtype=np.int64)
                self._csr = sp.csr_matrix((data, indices, indptr), shape=(self._n, self._n))
            return self._csr

    def induced_edges(self, vertices: Iterable[int]) -> tuple[Edge, ...]:
        vs = set(vertices)
        return tuple(e for e in self._edges if e[0] in vs and e[1] in vs)

    def write_edge_list(self, stream: TextIO, use_labels: bool = True) -> None:
        for u, v in self._edges:
            a, b = (self._labels[u], self._labels[v]) if use_labels else (u, v)
            if self._weights is None:
                stream.write(f"{a} {b}\n")
            else:
                stream.write(f"{a} {b} {self._weights[(u, v)]}\n")


def _label_order(labels: Iterable[str]) -> list[str]:
    labels = list(labels)
    try:
        return sorted(labels, key=int)
    except ValueError:
        return sorted(labels)


def load_edge_list(stream: TextIO | str, weighted: bool = False) -> Graph:
    """Parse a whitespace-separated edge list into a canonical :class:`Graph`.

    Lines starting with ``#`` are comments. Each record is ``u v`` or, for
    weighted input, ``u v w`` (a missing weight counts as 1; unweighted loads
    validate and drop it). Repeated weighted edges have their weights summed;
    repeated unweighted edges collapse.
    Labels are compacted to ``0..n-1`` in numeric order when every label is an
    integer and lexicographic order otherwise.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    raw: dict[tuple[str, str], int] = {}
    seen: dict[str, None] = {}
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"expected 'u v' or 'u v w', got {line!r}", line_no)
        a, b = parts[0], parts[1]
        if a == b:
            raise GraphFormatError(f"self-loop on {a!r} rejected", line_no)
        w = 1
        if len(parts) == 3:
            try:
                w = int(parts[2])
            except ValueError:
                raise GraphFormatError(f"weight {parts[2]!r} is not an integer", line_no) from None
            if w < 1:
                raise GraphFormatError(f"weight must be >= 1, got {w}", line_no)
        key = (b, a) if (b, a) in raw else (a, b)
        seen.setdefault(a)
        seen.setdefault(b)
        raw[key] = raw.get(key, 0) + w if weighted else 1

    labels = _label_order(seen)
    index = {lab: i for i, lab in enumerate(labels)}
    edges = []
    weights = {} if weighted else None
    for (a, b), w in raw.items():
        e = _norm(index[a], index[b])
        edges.append(e)
        if weights is not None:
            weights[e] = w
    return Graph(len(labels), edges, weights, labels)


def read_edge_list(path: str | Path, weighted: bool = False) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh, weighted=weighted)


def write_id_map(g: Graph, path: str | Path) -> None:
    """Persist the dense-id -> original-label map, one ``id label`` per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(g.labels):
            fh.write(f"{i} {lab}\n")


def sparsify_by_weight(g: Graph, min_weight: int) -> Graph:
    """Keep exactly the edges of weight ``>= min_weight``; vertices are untouched."""
    if not g.weighted:
        raise ValueError("sparsify_by_weight needs a weighted graph")
    if min_weight < 1:
        raise ValueError("min_weight must be a positive integer")
    kept = [e for e in g.edges if g.weight(*e) >= min_weight]
    return Graph(g.n, kept, {e: g.weight(*e) for e in kept}, g.labels)


def rewire_vertex(g: Graph, v: int, new_neighbors: Iterable[int]) -> Graph:
    """Return ``g`` with the edges at ``v`` replaced by ``{(v, u) : u in new_neighbors}``.

    New edges get weight 1 on weighted graphs.
    """
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} out of range for n={g.n}")
    new = set(int(u) for u in new_neighbors)
    if v in new:
        raise ValueError("a vertex cannot be its own neighbor")
    for u in new:
        if not 0 <= u < g.n:
            raise ValueError(f"vertex {u} out of range for n={g.n}")
    kept = [e for e in g.edges if v not in e]
    added = [_norm(v, u) for u in new]
    weights = None
    if g.weighted:
        weights = {e: g.weight(*e) for e in kept}
        for e in added:
            weights[e] = g.weight(*e) if g.has_edge(*e) else 1
    return Graph(g.n, kept + added, weights, g.labels)


class Population:
    """Hidden partition of ``V`` into targeted and protected vertices.

    The identity oracle is :meth:`query`; it counts distinct first-time
    queries. :meth:`is_targeted` reads the ground truth without charging the
    budget and is meant for evaluation code, never for search algorithms.
    """

    def __init__(self, n: int, targeted: Iterable[int]):
        t = frozenset(int(v) for v in targeted)
        for v in t:
            if not 0 <= v < n:
                raise ValueError(f"targeted vertex {v} out of range for n={n}")
        self._n = n
        self._targeted = t
        self._queried = np.zeros(n, dtype=bool)
        self._queries = 0
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self._n

    @property
    def targeted(self) -> frozenset[int]:
        return self._targeted

    @property
    def protected(self) -> frozenset[int]:
        return frozenset(range(self._n)) - self._targeted

    @property
    def oracle_queries(self) -> int:
        return self._queries

    def is_targeted(self, v: int) -> bool:
        return v in self._targeted

    def was_queried(self, v: int) -> bool:
        return bool(self._queried[v])

    def query(self, v: int) -> bool:
        with self._lock:
            if not self._queried[v]:
                self._queried[v] = True
                self._queries += 1
        return v in self._targeted

    def fresh(self) -> Population:
        """Same partition, zeroed query counter."""
        return Population(self._n, self._targeted)


def load_partition(stream: TextIO | str, g: Graph) -> Population:
    """Read one targeted label per line (original labels) into a :class:`Population`."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    index = {lab: i for i, lab in enumerate(g.labels)}
    targeted = []
    for line_no, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line not in index:
            raise GraphFormatError(f"unknown vertex label {line!r}", line_no)
        targeted.append(index[line])
    return Population(g.n, targeted)


def read_partition(path: str | Path, g: Graph) -> Population:
    with open(path, encoding="utf-8") as fh:
        return load_partition(fh, g)


def write_partition(g: Graph, targeted: Iterable[int], stream: TextIO) -> None:
    for v in sorted(targeted):
        stream.write(f"{g.labels[v]}\n")


def targeted_components(g: Graph, pop: Population) -> list[list[int]]:
    """Connected components of the subgraph induced on the targeted set.

    Ground truth for evaluation only. Each component is sorted and the list is
    ordered by smallest member.
    """
    targeted = pop.targeted
    seen: set[int] = set()
    comps = []
    for s in sorted(targeted):
        if s in seen:
            continue
        seen.add(s)
        stack = [s]
        comp = []
        while stack:
            x = stack.pop()
            comp.append(x)
            for y in g.neighbors(x):
                if y in targeted and y not in seen:
                    seen.add(y)
                    stack.append(y)
        comps.append(sorted(comp))
    return comps


def gnp_random_graph(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p) drawn from a seeded numpy generator."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    return Graph(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def random_weighted_graph(n: int, p: float, max_weight: int, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    w = rng.integers(1, max_weight + 1, size=len(iu))
    edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    return Graph(n, edges, dict(zip(edges, w[keep].tolist())))


def random_geometric_graph(n: int, radius: float, seed: int) -> Graph:
    """Points uniform on the unit torus, joined when closer than ``radius``.

    Locally clustered, which gives diffusion-generated populations whose
    components sit close to each other.
    """
    from scipy.spatial import cKDTree

    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    tree = cKDTree(pts, boxsize=1.0)
    pairs = tree.query_pairs(radius, output_type="ndarray")
    return Graph(n, map(tuple, pairs.tolist()))
