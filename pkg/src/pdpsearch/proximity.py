"""Statistics of proximity f(G, v, S) and their privacy bounds.

Each statistic scores how close a vertex ``v`` sits to a set ``S`` of known
targeted vertices. A :class:`SoPDescriptor` bundles one statistic with the
closed-form targeted sensitivity and impact cardinality used to calibrate
noise, and the ``brute_force_*`` functions probe those bounds on small random
neighboring graphs.
"""

from __future__ import annotations

import itertools
from collections.abc import Collection, Iterable, Iterator
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .flow_lp import flow_value
from .graph import Graph, gnp_random_graph, rewire_vertex

KINDS = ("cn", "path", "triangle", "flow")


def _check(v: int, S: Collection[int]) -> None:
    if v in S:
        raise ValueError(f"vertex {v} is a member of S")


def common_neighbors(g: Graph, v: int, S: Collection[int]) -> int:
    """Neighbors of ``v`` that are adjacent to at least one member of ``S``."""
    _check(v, S)
    S = set(S)
    return sum(1 for u in g.neighbors(v) if any(w in S for w in g.neighbors(u)))


def path_count(g: Graph, v: int, S: Collection[int], k: int) -> int:
    """Number of simple paths with at most ``k`` edges from ``v`` to any vertex of ``S``.

    A path that passes through one member of ``S`` on its way to another is
    counted once for each member it ends at.
    """
    if k < 1:
        raise ValueError("length bound k must be >= 1")
    _check(v, S)
    S = set(S)
    if not S:
        return 0
    on_path = {v}
    count = 0

    def walk(x: int, depth: int) -> None:
        nonlocal count
        for y in g.neighbors(x):
            if y in on_path:
                continue
            if y in S:
                count += 1
            if depth + 1 < k:
                on_path.add(y)
                walk(y, depth + 1)
                on_path.discard(y)

    walk(v, 0)
    return count


def triangle_sop(g: Graph, v: int, S: Collection[int]) -> int:
    """Pairs ``{a, b}`` of ``S`` that close a triangle with ``v``."""
    _check(v, S)
    nbrs = [u for u in g.neighbors(v) if u in S]
    return sum(1 for a, b in itertools.combinations(nbrs, 2) if g.has_edge(a, b))


def flow_sop(g: Graph, v: int, S: Collection[int], k: int, exact: bool = True):
    """Maximum flow from ``S`` to ``v`` along paths of at most ``k`` edges."""
    if k < 1:
        raise ValueError("length bound k must be >= 1")
    _check(v, S)
    return flow_value(g, v, S, k, exact=exact)


@dataclass(frozen=True)
class SoPDescriptor:
    kind: str
    k: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown statistic {self.kind!r}; expected one of {KINDS}")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @classmethod
    def from_config(cls, cfg: dict) -> SoPDescriptor:
        kind = str(cfg.get("sop", "cn")).lower()
        return cls(kind, int(cfg.get("k", 1)))

    def to_config(self) -> dict:
        return {"sop": self.kind, "k": self.k}

    @property
    def name(self) -> str:
        return {"cn": "CN", "triangle": "Triangle"}.get(self.kind) or (
            f"{self.kind.capitalize()}_{self.k}"
        )

    def value(self, g: Graph, v: int, S: Collection[int]):
        if self.kind == "cn":
            return common_neighbors(g, v, S)
        if self.kind == "path":
            return path_count(g, v, S, self.k)
        if self.kind == "triangle":
            return triangle_sop(g, v, S)
        return flow_sop(g, v, S, self.k)

    def values(self, g: Graph, S: Collection[int], vertices: Iterable[int]) -> np.ndarray:
        """``f(G, v, S)`` for each ``v`` in ``vertices`` (none of which may lie in ``S``)."""
        vertices = np.fromiter(vertices, dtype=np.int64)
        if self.kind == "cn" or (self.kind == "path" and self.k == 1):
            ind = np.zeros(g.n, dtype=np.int64)
            ind[list(S)] = 1
            adj = g.adjacency_matrix()
            if self.kind == "cn":
                ind = (adj @ ind > 0).astype(np.int64)
            return (adj @ ind)[vertices].astype(float)
        return np.array([float(self.value(g, int(x), S)) for x in vertices])

    def sensitivity_bound(self, d_max: int, k: int | None = None) -> int:
        """Closed-form targeted sensitivity for graphs of maximum degree ``d_max``."""
        k = self.k if k is None else k
        if self.kind == "cn":
            return 1
        if self.kind in ("triangle", "flow"):
            return d_max
        return (k - 1) * d_max ** (k - 1)

    def impact_cardinality_bound(self, d_max: int) -> int:
        """Upper bound on how many vertices' values one protected rewiring can change.

        CN: the rewired vertex can only enter or leave the common-neighbor role
        for its old and new neighbors, giving ``2 * d_max``. For the
        path-based statistics any affected vertex lies within ``k - 1`` hops
        of an old or new neighbor of the rewired vertex, or is that vertex.
        Triangle values change only at the rewired vertex itself.
        """
        if self.kind == "cn":
            return 2 * d_max
        if self.kind == "triangle":
            return 1
        reach = sum(d_max**j for j in range(self.k - 1))
        return 1 + 2 * d_max * reach


def neighboring_pairs(
    n: int, trials: int, seed: int, family: str = "gnp"
) -> Iterator[tuple[Graph, Graph, frozenset[int], int]]:
    """Random ``(G, G', targeted, rewired)`` with ``G'`` = ``G`` after rewiring one protected vertex.

    ``family="gnp"`` draws G(n, p) with ``p`` uniform in [0.2, 0.8] and a
    fair-coin partition; ``family="star"`` uses a star whose protected center
    is the rewired vertex.
    """
    rng = np.random.default_rng(seed)
    produced = 0
    while produced < trials:
        if family == "star":
            g = Graph(n, [(0, leaf) for leaf in range(1, n)])
            targeted = frozenset(int(x) for x in np.flatnonzero(rng.random(n) < 0.5) if x != 0)
            rewired = 0
        elif family == "gnp":
            g = gnp_random_graph(n, float(rng.uniform(0.2, 0.8)), int(rng.integers(2**31)))
            targeted = frozenset(int(x) for x in np.flatnonzero(rng.random(n) < 0.5))
            protected = sorted(set(range(n)) - targeted)
            if not targeted or not protected:
                continue
            rewired = int(rng.choice(protected))
        else:
            raise ValueError(f"unknown graph family {family!r}")
        keep = rng.random(n) < rng.uniform(0.0, 1.0)
        new_nbrs = [u for u in range(n) if keep[u] and u != rewired]
        produced += 1
        yield g, rewire_vertex(g, rewired, new_nbrs), targeted, rewired


def _subsets(items: Collection[int]) -> Iterator[frozenset[int]]:
    items = sorted(items)
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            yield frozenset(combo)


def _value(sop: SoPDescriptor, g: Graph, v: int, S: frozenset[int]):
    if not S:
        return 0
    return sop.value(g, v, S)


def _targeted_changes(sop, n, trials, seed, family):
    for g, g2, targeted, _ in neighboring_pairs(n, trials, seed, family):
        d = max(g.max_degree, g2.max_degree)
        worst = 0
        for t in sorted(targeted):
            for S in _subsets(targeted - {t}):
                worst = max(worst, abs(_value(sop, g, t, S) - _value(sop, g2, t, S)))
        yield worst, d


def brute_force_targeted_sensitivity(
    sop: SoPDescriptor, n: int, trials: int, seed: int, family: str = "gnp"
) -> int | Fraction:
    """Largest observed ``|f(G,t,S) - f(G',t,S)|`` over sampled neighboring pairs.

    Every targeted ``t`` and every ``S`` within the remaining targeted
    vertices is checked, so the result is a lower bound on the true targeted
    sensitivity.
    """
    return max((w for w, _ in _targeted_changes(sop, n, trials, seed, family)), default=0)


def sensitivity_bound_excess(
    sop: SoPDescriptor, n: int, trials: int, seed: int, family: str = "gnp"
):
    """Largest ``observed change - sensitivity_bound(d)`` with ``d`` the pair's max degree.

    Nonpositive whenever the closed-form bound held on every sampled pair.
    """
    return max(
        (w - sop.sensitivity_bound(d) for w, d in _targeted_changes(sop, n, trials, seed, family)),
        default=0,
    )


def _impact_counts(sop, n, trials, seed, family, among):
    for g, g2, targeted, _ in neighboring_pairs(n, trials, seed, family):
        d = max(g.max_degree, g2.max_degree)
        pool = targeted if among == "targeted" else frozenset(range(n))
        worst = 0
        for S in _subsets(targeted):
            changed = sum(
                1 for v in pool - S if _value(sop, g, v, S) != _value(sop, g2, v, S)
            )
            worst = max(worst, changed)
        yield worst, d


def brute_force_impact_cardinality(
    sop: SoPDescriptor,
    n: int,
    trials: int,
    seed: int,
    family: str = "gnp",
    among: str = "all",
) -> int:
    """Largest observed number of vertices whose value changes under one protected rewiring.

    ``among="targeted"`` restricts the count to targeted vertices.
    """
    if among not in ("all", "targeted"):
        raise ValueError("among must be 'all' or 'targeted'")
    return max((c for c, _ in _impact_counts(sop, n, trials, seed, family, among)), default=0)


def impact_bound_excess(
    sop: SoPDescriptor, n: int, trials: int, seed: int, family: str = "gnp"
) -> int:
    return max(
        (c - sop.impact_cardinality_bound(d) for c, d in _impact_counts(sop, n, trials, seed, family, "all")),
        default=0,
    )
