"""Statistic-first search, private new-component search, and the full Target/PTarget loops.

All algorithms break ties by ascending vertex id, so a run is a pure function
of its inputs and its :class:`~pdpsearch.mechanisms.NoiseSource`.
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Collection
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, InvalidSeedError, Population
from .mechanisms import (
    NoiseSource,
    PrivacyLedger,
    compose_basic,
    laplace_scale,
    risk_multiplier,
    sample_laplace,
    sample_laplace_many,
)
from .proximity import SoPDescriptor

MODES = ("appendix", "maintext")


class BudgetExhausted(Exception):
    pass


@dataclass
class SearchTrace:
    """Everything one search run revealed, in oracle order.

    ``queries`` holds ``(vertex, answer, budget_index)`` with budget indices
    1, 2, 3, ...; ``discoveries`` pairs each targeted vertex with the budget
    index at which it was confirmed (0 for a pre-confirmed seed).
    ``component_events`` lists the budget index at which each component's
    first vertex was confirmed, and ``ledger`` the privacy snapshot taken at
    each of those events.
    """

    queries: list[tuple[int, bool, int]] = field(default_factory=list)
    discoveries: list[tuple[int, int]] = field(default_factory=list)
    component_events: list[int] = field(default_factory=list)
    ledger: list[dict] = field(default_factory=list)
    halted_by: str | None = None
    rounds_used: int = 0
    per_round_epsilon: float | None = None
    budget_cap: int | None = None

    @property
    def budget_used(self) -> int:
        return len(self.queries)

    @property
    def discovered(self) -> list[int]:
        return [v for v, _ in self.discoveries]

    @property
    def epsilon(self) -> float:
        if self.per_round_epsilon is None or self.rounds_used == 0:
            return 0.0
        return self.rounds_used * self.per_round_epsilon

    def same_search(self, other: SearchTrace) -> bool:
        """Query-for-query equality, ignoring privacy bookkeeping."""
        return (
            self.queries == other.queries
            and self.discoveries == other.discoveries
            and self.component_events == other.component_events
            and self.halted_by == other.halted_by
        )

    def to_dict(self) -> dict:
        return {
            "queries": [[v, int(a), b] for v, a, b in self.queries],
            "discoveries": [[v, b] for v, b in self.discoveries],
            "component_events": list(self.component_events),
            "ledger": self.ledger,
            "halted_by": self.halted_by,
            "rounds_used": self.rounds_used,
            "per_round_epsilon": _json_float(self.per_round_epsilon),
            "epsilon": _json_float(self.epsilon),
            "budget_cap": self.budget_cap,
        }


def _json_float(x):
    if x is None or math.isfinite(x):
        return x
    return "inf"


class _Run:
    """Mutable state shared by the phases of one search: investigated set, trace, budget."""

    def __init__(self, g: Graph, pop: Population, budget: int | None, investigated=None):
        self.g = g
        self.pop = pop
        self.budget = budget
        self.investigated: set[int] = set() if investigated is None else investigated
        self.trace = SearchTrace(budget_cap=budget)

    def query(self, v: int) -> bool:
        if v in self.investigated:
            raise AssertionError(f"vertex {v} queried twice")
        if self.budget is not None and len(self.trace.queries) >= self.budget:
            raise BudgetExhausted
        answer = self.pop.query(v)
        self.investigated.add(v)
        idx = len(self.trace.queries) + 1
        self.trace.queries.append((v, answer, idx))
        if answer:
            self.trace.discoveries.append((v, idx))
        return answer

    def start(self, seed: int, confirmed: bool) -> None:
        if not 0 <= seed < self.g.n:
            raise InvalidSeedError(f"seed vertex {seed} out of range")
        if confirmed:
            if not self.pop.is_targeted(seed):
                raise InvalidSeedError(f"seed vertex {seed} is not targeted")
            self.investigated.add(seed)
            self.trace.discoveries.append((seed, 0))
        elif not self.query(seed):
            raise InvalidSeedError(f"seed vertex {seed} is not targeted")
        self.trace.component_events.append(len(self.trace.queries))


def _sfs(run: _Run, seed: int) -> list[int]:
    """Grow the targeted component of ``seed``; ``seed`` must already be confirmed and investigated."""
    g = run.g
    found = [seed]
    score: dict[int, int] = {}
    heap: list[tuple[int, int]] = []

    def absorb(t: int) -> None:
        for y in g.neighbors(t):
            if y not in run.investigated:
                score[y] = score.get(y, 0) + 1
                heapq.heappush(heap, (-score[y], y))

    absorb(seed)
    while heap:
        neg, x = heapq.heappop(heap)
        if x in run.investigated or score[x] != -neg:
            continue
        if run.query(x):
            found.append(x)
            absorb(x)
    return found


def sfs(
    g: Graph, pop: Population, seed_vertex: int, seed_confirmed: bool = True
) -> tuple[list[int], set[int]]:
    """Statistic-first search from a targeted seed.

    Frontier vertices are examined by descending number of edges into the
    component found so far (ties by id); only confirmed targeted vertices
    extend the frontier. Returns the seed's whole targeted component in
    discovery order and the set of investigated vertices.
    """
    run = _Run(g, pop, None)
    run.start(seed_vertex, seed_confirmed)
    return _sfs(run, seed_vertex), run.investigated


def _search_com(run, discovered, sop, epsilon, K, src, mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    g = run.g
    d = g.max_degree
    sop_factor = 4.0 if mode == "appendix" else 1.0
    sop_scale = laplace_scale(sop.sensitivity_bound(d), epsilon, sop_factor)
    thr_scale = laplace_scale(sop.impact_cardinality_bound(d), epsilon, 2.0)
    k_hat = K + sample_laplace(thr_scale, src)

    cand = np.array([v for v in range(g.n) if v not in run.investigated], dtype=np.int64)
    if len(cand) == 0:
        return None, "exhausted"
    noisy = sop.values(g, discovered, cand) + sample_laplace_many(sop_scale, len(cand), src)
    order = cand[np.lexsort((cand, -noisy))]
    count = 0
    for v in order.tolist():
        if not count < k_hat:
            return None, "threshold"
        count += 1
        if run.query(v):
            return v, None
    return None, "exhausted"


def search_com(
    g: Graph,
    pop: Population,
    discovered: Collection[int],
    investigated: set[int],
    sop: SoPDescriptor,
    epsilon: float,
    K: float,
    src: NoiseSource,
    mode: str = "appendix",
) -> int | None:
    """Private search for a targeted vertex outside the known components.

    Draws a noisy stopping threshold ``K + Lap(2 IC / eps)`` and one noisy
    score per uninvestigated vertex (``Lap(4 Delta / eps)`` in appendix mode,
    ``Lap(Delta / eps)`` in maintext mode), then queries vertices by
    descending noisy score while fewer than the threshold have been queried.
    ``investigated`` is updated in place. ``epsilon=math.inf`` means no noise.
    """
    run = _Run(g, pop, None, investigated)
    found, _ = _search_com(run, set(discovered), sop, epsilon, K, src, mode)
    return found


def _exact_search_com(run, discovered, sop, N):
    g = run.g
    cand = np.array([v for v in range(g.n) if v not in run.investigated], dtype=np.int64)
    if len(cand) == 0:
        return None, "exhausted"
    scores = sop.values(g, discovered, cand)
    order = cand[np.lexsort((cand, -scores))]
    for count, v in enumerate(order.tolist()):
        if count >= N:
            return None, "threshold"
        if run.query(v):
            return v, None
    return None, "exhausted"


def target(
    g: Graph,
    pop: Population,
    seed_vertex: int,
    sop: SoPDescriptor,
    k: int,
    N: int,
    budget: int | None = None,
    seed_confirmed: bool = True,
) -> SearchTrace:
    """Non-private search: SFS, then up to ``k - 1`` rounds of exact new-component search.

    Each round queries uninvestigated vertices by descending exact statistic
    (ties by id), at most ``N`` of them. ``budget`` stops the run once that
    many oracle queries have been spent.
    """
    if k < 1 or N < 0:
        raise ValueError("need k >= 1 and N >= 0")
    run = _Run(g, pop, budget)
    discovered: set[int] = set()
    try:
        run.start(seed_vertex, seed_confirmed)
        discovered.update(_sfs(run, seed_vertex))
        for _ in range(k - 1):
            found, reason = _exact_search_com(run, discovered, sop, N)
            if found is None:
                run.trace.halted_by = reason
                break
            run.trace.component_events.append(len(run.trace.queries))
            discovered.update(_sfs(run, found))
        else:
            run.trace.halted_by = "rounds"
    except BudgetExhausted:
        run.trace.halted_by = "budget"
    return run.trace


def ptarget(
    g: Graph,
    pop: Population,
    seed_vertex: int,
    sop: SoPDescriptor,
    k: int,
    N: int,
    epsilon: float,
    src: NoiseSource,
    mode: str = "appendix",
    budget: int | None = None,
    seed_confirmed: bool = True,
) -> SearchTrace:
    """Private search: SFS, then up to ``k - 1`` rounds of :func:`search_com` with parameter ``epsilon``.

    Every component-search round charges ``epsilon`` to the ledger; the trace
    stores a ledger snapshot at each component event.
    """
    if k < 1 or N < 0:
        raise ValueError("need k >= 1 and N >= 0")
    if math.isnan(epsilon) or epsilon <= 0:
        raise ValueError(f"epsilon must be positive or inf, got {epsilon}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    ledger = PrivacyLedger(epsilon)
    run = _Run(g, pop, budget)
    run.trace.per_round_epsilon = epsilon

    def snapshot():
        eps = compose_basic(ledger)
        run.trace.ledger.append(
            {
                "budget": len(run.trace.queries),
                "rounds_used": ledger.rounds_used,
                "epsilon": _json_float(eps),
                "risk_multiplier": _json_float(risk_multiplier(eps)),
            }
        )

    discovered: set[int] = set()
    try:
        run.start(seed_vertex, seed_confirmed)
        snapshot()
        discovered.update(_sfs(run, seed_vertex))
        for _ in range(k - 1):
            ledger.charge()
            run.trace.rounds_used = ledger.rounds_used
            found, reason = _search_com(run, discovered, sop, epsilon, N, src, mode)
            if found is None:
                run.trace.halted_by = reason
                break
            run.trace.component_events.append(len(run.trace.queries))
            snapshot()
            discovered.update(_sfs(run, found))
        else:
            run.trace.halted_by = "rounds"
    except BudgetExhausted:
        run.trace.halted_by = "budget"
    return run.trace
