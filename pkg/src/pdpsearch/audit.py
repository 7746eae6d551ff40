"""Empirical privacy checks: run a randomized mechanism on two neighboring inputs
and compare output frequencies against the e^eps ratio bound."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Callable, Hashable
from dataclasses import dataclass

from .graph import Graph, Population, rewire_vertex
from .mechanisms import NoiseSource, report_noisy_max
from .proximity import SoPDescriptor
from .search import search_com


@dataclass(frozen=True)
class RatioRow:
    output: Hashable
    count_a: int
    count_b: int
    log_ratio: float
    slack: float
    ok: bool


def output_counts(mechanism: Callable[[NoiseSource], Hashable], trials: int, seed: int, stream) -> Counter:
    return Counter(mechanism(NoiseSource(seed, (stream, i))) for i in range(trials))


def ratio_check(counts_a: Counter, counts_b: Counter, trials: int, epsilon: float, sigmas: float = 3.0) -> list[RatioRow]:
    """Per output, test ``|log(p_a / p_b)| <= epsilon + slack``.

    ``slack`` is ``sigmas`` binomial standard errors of the log ratio (delta
    method). An output seen under only one input fails outright unless that
    input's count is itself within the statistical noise of zero.
    """
    rows = []
    for out in sorted(set(counts_a) | set(counts_b), key=repr):
        a, b = counts_a.get(out, 0), counts_b.get(out, 0)
        if a == 0 or b == 0:
            seen = max(a, b)
            # P(0 hits) for a mechanism e^-eps times as likely: exp(-trials * p * e^-eps)
            p_other = seen / trials * math.exp(-epsilon)
            ok = trials * p_other < sigmas**2
            rows.append(RatioRow(out, a, b, math.inf, math.nan, ok))
            continue
        pa, pb = a / trials, b / trials
        se = math.sqrt((1 - pa) / (trials * pa) + (1 - pb) / (trials * pb))
        lr = math.log(pa / pb)
        rows.append(RatioRow(out, a, b, lr, sigmas * se, abs(lr) <= epsilon + sigmas * se))
    return rows


def searchcom_fixture() -> dict:
    """Six-vertex neighboring pair for SearchCom.

    Targeted {0, 1, 4}. The component {0} has been searched, so 0 and its
    protected neighbors 2 and 3 are investigated and 1, 4, 5 remain. The
    neighbor graph rewires protected vertex 2 from {0, 1, 4} to {0, 5}, which
    changes the common-neighbor counts of 1 and 5.
    """
    g = Graph(6, [(0, 2), (0, 3), (1, 2), (1, 3), (2, 4), (4, 5)])
    return {
        "g": g,
        "g_prime": rewire_vertex(g, 2, [0, 5]),
        "targeted": frozenset({0, 1, 4}),
        "discovered": frozenset({0}),
        "investigated": frozenset({0, 2, 3}),
        "rewired": 2,
    }


def searchcom_audit(
    epsilon: float = 1.0,
    trials: int = 100_000,
    seed: int = 0,
    K: float = 1,
    mode: str = "appendix",
    sop: SoPDescriptor | None = None,
) -> list[RatioRow]:
    fx = searchcom_fixture()
    sop = sop or SoPDescriptor("cn")

    def runner(g):
        def mech(src):
            pop = Population(g.n, fx["targeted"])
            return search_com(g, pop, fx["discovered"], set(fx["investigated"]), sop, epsilon, K, src, mode)

        return mech

    ca = output_counts(runner(fx["g"]), trials, seed, "G")
    cb = output_counts(runner(fx["g_prime"]), trials, seed, "G'")
    return ratio_check(ca, cb, trials, epsilon)


def rnm_audit(epsilon: float = 1.0, trials: int = 100_000, seed: int = 0, gamma: float = 1.0) -> list[RatioRow]:
    """Report Noisy Max on ``{0: 1, 1: 0, 2: 0}`` versus its gamma-shifted neighbor.

    Only the released index is compared; for that output the bound is e^(2 eps)
    under an arbitrary gamma shift of all values, e^eps here since one value moves.
    """
    a = {0: 1.0, 1: 0.0, 2: 0.0}
    b = {0: 1.0 - gamma, 1: 0.0, 2: 0.0}
    ca = output_counts(lambda s: report_noisy_max(a, gamma, epsilon, s)[0], trials, seed, "A")
    cb = output_counts(lambda s: report_noisy_max(b, gamma, epsilon, s)[0], trials, seed, "B")
    return ratio_check(ca, cb, trials, 2 * epsilon)
