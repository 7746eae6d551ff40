import math
from collections import Counter

from pdpsearch.audit import output_counts, ratio_check, rnm_audit, searchcom_audit, searchcom_fixture
from pdpsearch.graph import Population
from pdpsearch.proximity import SoPDescriptor
from pdpsearch.search import search_com


def test_fixture_is_a_protected_neighbor_pair():
    fx = searchcom_fixture()
    assert fx["rewired"] not in fx["targeted"]
    assert fx["g"].induced_edges(fx["targeted"]) == fx["g_prime"].induced_edges(fx["targeted"])
    cn = SoPDescriptor("cn")
    # the rewiring must actually move some SoP value, or the audit would be vacuous
    assert any(
        cn.value(fx["g"], v, fx["discovered"]) != cn.value(fx["g_prime"], v, fx["discovered"]) for v in (1, 4, 5)
    )


def test_searchcom_audit_passes_small():
    assert all(r.ok for r in searchcom_audit(epsilon=1.0, trials=20_000, seed=1))
    assert all(r.ok for r in searchcom_audit(epsilon=1.0, trials=20_000, seed=1, mode="maintext"))


def test_audit_detects_leaky_mechanism():
    """Nearly noiseless search checked against eps=0.1 must be flagged."""
    fx = searchcom_fixture()
    cn = SoPDescriptor("cn")

    def runner(g):
        def mech(src):
            pop = Population(g.n, fx["targeted"])
            return search_com(g, pop, fx["discovered"], set(fx["investigated"]), cn, 50.0, 1, src, "maintext")

        return mech

    trials = 20_000
    ca = output_counts(runner(fx["g"]), trials, 0, "G")
    cb = output_counts(runner(fx["g_prime"]), trials, 0, "G'")
    assert not all(r.ok for r in ratio_check(ca, cb, trials, 0.1))


def test_ratio_check_one_sided_outputs():
    rows = ratio_check(Counter({"x": 1000}), Counter({"y": 1000}), 1000, 1.0)
    assert rows and not any(r.ok for r in rows)
    assert all(math.isinf(r.log_ratio) for r in rows)
    rows = ratio_check(Counter({"x": 999, "rare": 1}), Counter({"x": 1000}), 1000, 1.0)
    assert all(r.ok for r in rows)


def test_rnm_audit():
    assert all(r.ok for r in rnm_audit(epsilon=0.5, trials=20_000, seed=2))
