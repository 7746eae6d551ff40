"""Length-bounded flow as a linear program over a layered copy of the graph.

Layer ``l`` (1..k+1) holds a copy ``w^l`` of every vertex. Each undirected edge
``{i, j}`` gives arcs ``i^l -> j^(l+1)`` and ``j^l -> i^(l+1)`` for every
``l`` in 1..k, and all ``2k`` copies share a single unit capacity. A synthetic
source feeds ``t^1`` for each target ``t``. Every copy ``v^l`` with ``l >= 2``
absorbs flow, so a unit reaching ``v`` after any number of hops up to ``k``
counts toward the objective.

The default solver is a primal simplex over :class:`fractions.Fraction` with
Bland's rule, so results and their dual certificates are exact and
bit-reproducible. ``exact=False`` hands the same LP to HiGHS via scipy.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TextIO

import numpy as np

from .graph import Graph

SOURCE = "s"

# A layered vertex is (vertex, layer); the source is the string SOURCE.
Node = tuple[int, int]


class LPError(RuntimeError):
    pass


@dataclass(frozen=True)
class LayerVar:
    """One arc of the layered network.

    ``layer`` is 0 for source arcs ``s -> t^1`` (``origin`` is None) and ``l``
    for ``tail^l -> head^(l+1)`` arcs copied from the original edge ``origin``.
    """

    layer: int
    tail: int | None
    head: int
    origin: tuple[int, int] | None

    @property
    def tail_node(self):
        return SOURCE if self.layer == 0 else (self.tail, self.layer)

    @property
    def head_node(self) -> Node:
        return (self.head, self.layer + 1)

    @property
    def name(self) -> str:
        if self.layer == 0:
            return f"z0_s_{self.head}"
        return f"z{self.layer}_{self.tail}_{self.head}"


@dataclass
class LayeredNetwork:
    v: int
    targets: tuple[int, ...]
    k: int
    variables: list[LayerVar]
    unpruned_variable_count: int

    @property
    def sinks(self) -> set[Node]:
        return {(self.v, layer) for layer in range(2, self.k + 2)}

    def internal_nodes(self) -> list[Node]:
        """Layered vertices carrying a conservation constraint, sorted."""
        nodes = set()
        for var in self.variables:
            nodes.add(var.head_node)
            if var.layer > 0:
                nodes.add(var.tail_node)
        return sorted(nodes - self.sinks, key=lambda nd: (nd[1], nd[0]))

    def coupled_edges(self) -> list[tuple[int, int]]:
        return sorted({var.origin for var in self.variables if var.origin is not None})

    @property
    def layers(self) -> int:
        return self.k + 1


@dataclass
class FlowSolution:
    value: Fraction | float
    assignment: dict[LayerVar, Fraction | float]
    node_duals: dict[Node, Fraction | float] = field(default_factory=dict)
    edge_duals: dict[tuple[int, int], Fraction | float] = field(default_factory=dict)
    exact: bool = True

    @property
    def dual_value(self):
        return sum(self.edge_duals.values(), Fraction(0) if self.exact else 0.0)


def build_layered_network(
    g: Graph, v: int, targets: Iterable[int], k: int, prune: bool = True
) -> LayeredNetwork:
    targets = tuple(sorted(set(int(t) for t in targets)))
    if k < 1:
        raise ValueError("length bound k must be >= 1")
    if not targets:
        raise ValueError("targets must be nonempty")
    if v in targets:
        raise ValueError("v must not be one of the targets")
    if not 0 <= v < g.n:
        raise ValueError(f"vertex {v} out of range")

    variables = [LayerVar(0, None, t, None) for t in targets]
    for layer in range(1, k + 1):
        for i, j in g.edges:
            variables.append(LayerVar(layer, i, j, (i, j)))
            variables.append(LayerVar(layer, j, i, (i, j)))
    unpruned = len(variables)
    # v's copies are sinks: nothing leaves them
    variables = [x for x in variables if x.layer == 0 or x.tail != v]
    if prune:
        variables = _prune(variables, v, k)
    return LayeredNetwork(v, targets, k, variables, unpruned)


def _prune(variables: list[LayerVar], v: int, k: int) -> list[LayerVar]:
    fwd = {SOURCE}
    for layer in range(0, k + 1):
        for x in variables:
            if x.layer == layer and x.tail_node in fwd:
                fwd.add(x.head_node)
    bwd = {(v, layer) for layer in range(2, k + 2)}
    for layer in range(k, -1, -1):
        for x in variables:
            if x.layer == layer and x.head_node in bwd:
                bwd.add(x.tail_node)
    return [x for x in variables if x.tail_node in fwd and x.head_node in bwd]


def _constraints(net: LayeredNetwork):
    """Column-wise view: for each variable its conservation rows (+1 in, -1 out) and coupling row."""
    nodes = net.internal_nodes()
    node_row = {nd: i for i, nd in enumerate(nodes)}
    edges = net.coupled_edges()
    edge_row = {e: i for i, e in enumerate(edges)}
    cols = []
    for x in net.variables:
        eq = {}
        if x.head_node in node_row:
            eq[node_row[x.head_node]] = 1
        if x.layer > 0 and x.tail_node in node_row:
            eq[node_row[x.tail_node]] = eq.get(node_row[x.tail_node], 0) - 1
        ub = edge_row.get(x.origin) if x.origin is not None else None
        cols.append((eq, ub, 1 if x.layer == 0 else 0))
    return nodes, edges, cols


def _simplex_max(c: list[Fraction], rows: list[dict[int, Fraction]], b: list[Fraction]):
    """Maximize ``c.x`` subject to ``rows . x <= b``, ``x >= 0``, with ``b >= 0``.

    Dense-objective, sparse-row tableau; Bland's rule for entering and leaving
    variables. Returns ``(x, y)`` with ``y`` the optimal duals of the rows.
    """
    nv, m = len(c), len(rows)
    tab = [dict(r) for r in rows]
    for i in range(m):
        tab[i][nv + i] = Fraction(1)
    rhs = list(b)
    basis = [nv + i for i in range(m)]
    obj = {j: Fraction(cj) for j, cj in enumerate(c) if cj}
    while True:
        entering = min((j for j, r in obj.items() if r > 0), default=None)
        if entering is None:
            break
        leave, best = None, None
        for i in range(m):
            a = tab[i].get(entering)
            if a is not None and a > 0:
                ratio = rhs[i] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            raise LPError("LP is unbounded")
        prow = tab[leave]
        piv = prow[entering]
        if piv != 1:
            for j in prow:
                prow[j] /= piv
            rhs[leave] /= piv
        for i in range(m):
            if i == leave:
                continue
            row = tab[i]
            f = row.get(entering)
            if f is None:
                continue
            for j, a in prow.items():
                val = row.get(j, 0) - f * a
                if val:
                    row[j] = val
                else:
                    row.pop(j, None)
            rhs[i] -= f * rhs[leave]
        f = obj.get(entering)
        for j, a in prow.items():
            val = obj.get(j, 0) - f * a
            if val:
                obj[j] = val
            else:
                obj.pop(j, None)
        basis[leave] = entering
    x = [Fraction(0)] * nv
    for i, bj in enumerate(basis):
        if bj < nv:
            x[bj] = rhs[i]
    y = [-obj.get(nv + i, Fraction(0)) for i in range(m)]
    return x, y


def solve_flow_lp(net: LayeredNetwork, exact: bool = True) -> FlowSolution:
    """Optimal flow with a dual certificate; deterministic for a given network."""
    nodes, edges, cols = _constraints(net)
    if not net.variables:
        zero = Fraction(0) if exact else 0.0
        return FlowSolution(zero, {}, {}, {}, exact)
    if not exact:
        return _solve_highs(net, nodes, edges, cols)

    # equality rows as pairs of <= 0 rows, then coupling rows <= 1
    n_nodes = len(nodes)
    rows: list[dict[int, Fraction]] = [dict() for _ in range(2 * n_nodes + len(edges))]
    c = []
    for j, (eq, ub, cj) in enumerate(cols):
        c.append(Fraction(cj))
        for r, a in eq.items():
            if a:
                rows[2 * r][j] = Fraction(a)
                rows[2 * r + 1][j] = Fraction(-a)
        if ub is not None:
            rows[2 * n_nodes + ub][j] = Fraction(1)
    b = [Fraction(0)] * (2 * n_nodes) + [Fraction(1)] * len(edges)
    x, y = _simplex_max(c, rows, b)
    assignment = {var: xv for var, xv in zip(net.variables, x)}
    value = sum((xv for var, xv in assignment.items() if var.layer == 0), Fraction(0))
    node_duals = {nd: y[2 * r] - y[2 * r + 1] for r, nd in enumerate(nodes)}
    edge_duals = {e: y[2 * n_nodes + r] for r, e in enumerate(edges)}
    return FlowSolution(value, assignment, node_duals, edge_duals, True)


def _solve_highs(net, nodes, edges, cols) -> FlowSolution:
    from scipy.optimize import linprog
    from scipy.sparse import lil_matrix

    nv = len(cols)
    a_eq = lil_matrix((max(len(nodes), 1), nv))
    a_ub = lil_matrix((max(len(edges), 1), nv))
    c = np.zeros(nv)
    for j, (eq, ub, cj) in enumerate(cols):
        c[j] = -cj
        for r, a in eq.items():
            a_eq[r, j] = a
        if ub is not None:
            a_ub[ub, j] = 1
    res = linprog(
        c,
        A_ub=a_ub.tocsr(),
        b_ub=np.ones(a_ub.shape[0]),
        A_eq=a_eq.tocsr(),
        b_eq=np.zeros(a_eq.shape[0]),
        bounds=(0, None),
        method="highs",
    )
    if res.status != 0:
        raise LPError(f"HiGHS failed: {res.message}")
    assignment = {var: float(xv) for var, xv in zip(net.variables, res.x)}
    value = float(sum(xv for var, xv in assignment.items() if var.layer == 0))
    node_duals = {nd: float(-res.eqlin.marginals[r]) for r, nd in enumerate(nodes)}
    edge_duals = {e: float(-res.ineqlin.marginals[r]) for r, e in enumerate(edges)}
    return FlowSolution(value, assignment, node_duals, edge_duals, False)


def verify_certificate(net: LayeredNetwork, sol: FlowSolution, tol: float = 1e-9) -> bool:
    """Recheck primal feasibility, dual feasibility and equal objectives.

    Comparisons are exact for exact solutions and within ``tol`` otherwise.
    """
    eps = 0 if sol.exact else tol
    nodes, edges, cols = _constraints(net)
    x = [sol.assignment.get(var, 0) for var in net.variables]
    if any(xv < -eps for xv in x):
        return False
    balance = [0] * len(nodes)
    load = [0] * len(edges)
    for xv, (eq, ub, _) in zip(x, cols):
        for r, a in eq.items():
            balance[r] += a * xv
        if ub is not None:
            load[ub] += xv
    if any(abs(bal) > eps for bal in balance) or any(ld > 1 + eps for ld in load):
        return False
    pi = [sol.node_duals.get(nd, 0) for nd in nodes]
    y = [sol.edge_duals.get(e, 0) for e in edges]
    if any(yv < -eps for yv in y):
        return False
    for eq, ub, cj in cols:
        reduced = sum(a * pi[r] for r, a in eq.items()) + (y[ub] if ub is not None else 0)
        if reduced < cj - eps:
            return False
    primal = sum(xv for xv, (_, _, cj) in zip(x, cols) if cj)
    dual = sum(y)
    return abs(primal - dual) <= eps and abs(primal - sol.value) <= eps


def flow_value(g: Graph, v: int, targets: Iterable[int], k: int, exact: bool = True):
    """Flow_k(v, targets): 0 for an empty target set, otherwise the LP optimum."""
    targets = set(targets)
    if not targets:
        return Fraction(0) if exact else 0.0
    return solve_flow_lp(build_layered_network(g, v, targets, k), exact=exact).value


def write_lp(net: LayeredNetwork, stream: TextIO) -> None:
    """Dump the LP in CPLEX LP text format for cross-checking with external solvers."""
    nodes, edges, cols = _constraints(net)
    names = [var.name for var in net.variables]
    stream.write(f"\\ Flow_{net.k} toward vertex {net.v} from targets {list(net.targets)}\n")
    stream.write("Maximize\n obj:")
    src = [names[j] for j, (_, _, cj) in enumerate(cols) if cj]
    stream.write(" " + " + ".join(src) if src else " 0 " + (names[0] if names else "dummy"))
    stream.write("\nSubject To\n")
    eq_terms: list[list[str]] = [[] for _ in nodes]
    ub_terms: list[list[str]] = [[] for _ in edges]
    for j, (eq, ub, _) in enumerate(cols):
        for r, a in eq.items():
            eq_terms[r].append(("+ " if a > 0 else "- ") + names[j])
        if ub is not None:
            ub_terms[ub].append("+ " + names[j])
    for (w, layer), terms in zip(nodes, eq_terms):
        stream.write(f" bal_{w}_{layer}: {' '.join(terms)} = 0\n")
    for (i, j), terms in zip(edges, ub_terms):
        stream.write(f" cap_{i}_{j}: {' '.join(terms)} <= 1\n")
    stream.write("End\n")
