"""Command-line entry point: ``pdpsearch <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import audit
from .flow_lp import build_layered_network, solve_flow_lp, verify_certificate, write_lp
from .graph import (
    GraphFormatError,
    InvalidSeedError,
    Population,
    read_edge_list,
    read_partition,
    sparsify_by_weight,
    targeted_components,
    write_id_map,
    write_partition,
)
from .harness import SEED_ENV, ConfigError, ExperimentConfig, emit_outputs, parse_epsilon, run_experiment
from .infection import InfectionConfig, infect
from .mechanisms import NoiseSource
from .proximity import SoPDescriptor
from .search import ptarget, target


def parse_sop(text: str) -> SoPDescriptor:
    """``cn``, ``triangle``, ``path:K`` or ``flow:K``."""
    kind, _, k = text.partition(":")
    return SoPDescriptor(kind.strip().lower(), int(k) if k else 1)


def _graph(args):
    g = read_edge_list(args.graph, weighted=args.weighted or args.min_weight is not None)
    if args.min_weight is not None:
        g = sparsify_by_weight(g, args.min_weight)
    return g


def _vertex(g, label: str) -> int:
    try:
        return g.labels.index(label)
    except ValueError:
        raise SystemExit(f"error: vertex {label!r} not in graph") from None


def _add_graph_args(p):
    p.add_argument("--graph", required=True, help="edge-list file")
    p.add_argument("--weighted", action="store_true", help="read a third weight column")
    p.add_argument("--min-weight", type=int, help="drop edges lighter than this (implies --weighted)")


def cmd_ingest(args) -> int:
    g = _graph(args)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        g.write_edge_list(out, use_labels=False)
    finally:
        if args.out:
            out.close()
    if args.id_map:
        write_id_map(g, args.id_map)
    print(f"n={g.n} m={len(g.edges)} max_degree={g.max_degree}", file=sys.stderr)
    return 0


def cmd_infect(args) -> int:
    g = _graph(args)
    d = {}
    if args.config:
        d.update(json.loads(Path(args.config).read_text()))
    for key in ("p", "q", "rounds", "rng_seed"):
        if getattr(args, key) is not None:
            d[key] = getattr(args, key)
    if args.seed_vertex is not None:
        d["seed_vertex"] = _vertex(g, args.seed_vertex)
    if args.no_protect_seed:
        d["protect_seed"] = False
    cfg = InfectionConfig.from_dict(d)
    targeted = infect(g, cfg)
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        write_partition(g, targeted, out)
    finally:
        if args.out:
            out.close()
    sizes = sorted((len(c) for c in targeted_components(g, Population(g.n, targeted))), reverse=True)
    print(f"targeted={len(targeted)} components={len(sizes)} largest={sizes[:5]}", file=sys.stderr)
    return 0


def cmd_search(args) -> int:
    g = _graph(args)
    pop = read_partition(args.partition, g)
    seed = _vertex(g, args.seed_vertex)
    sop = parse_sop(args.sop)
    eps = parse_epsilon(args.epsilon) if args.epsilon is not None else None
    if eps is None:
        trace = target(g, pop, seed, sop, args.k, args.stop_threshold, budget=args.budget)
    else:
        src = NoiseSource(args.rng_seed, "search")
        trace = ptarget(
            g, pop, seed, sop, args.k, args.stop_threshold, eps, src, mode=args.mode, budget=args.budget
        )
    found = [g.labels[v] for v in trace.discovered]
    print(
        f"queries={trace.budget_used} discovered={len(found)} components={len(trace.component_events)} "
        f"halted_by={trace.halted_by} epsilon={trace.epsilon}"
    )
    if args.trace_out:
        doc = trace.to_dict()
        doc["labels"] = found
        Path(args.trace_out).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return 0


def cmd_flow(args) -> int:
    g = _graph(args)
    v = _vertex(g, args.v)
    targets = [_vertex(g, t) for t in args.targets.split(",") if t]
    net = build_layered_network(g, v, targets, args.k)
    sol = solve_flow_lp(net, exact=not args.float)
    ok = verify_certificate(net, sol)
    print(f"Flow_{args.k}={sol.value} certificate={'ok' if ok else 'FAILED'} variables={len(net.variables)}")
    if args.lp_out:
        with open(args.lp_out, "w", encoding="utf-8") as fh:
            write_lp(net, fh)
    return 0 if ok else 1


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    for key in ("trials", "budget", "k", "N", "mode", "workers", "master_seed"):
        val = getattr(args, key)
        if val is not None:
            setattr(cfg, key, val)
    if args.epsilon is not None:
        cfg.epsilon = parse_epsilon(args.epsilon)
    result = run_experiment(cfg)
    paths = emit_outputs(result, args.out)
    print(
        f"targeted={result.targeted_count} components={len(result.component_sizes)} regime={result.regime} "
        f"np_final={result.np_curve[-1]} private_final={result.mean_curve[-1]:.2f}"
    )
    for p in paths.values():
        print(p)
    return 0


def cmd_check_privacy(args) -> int:
    eps = parse_epsilon(args.epsilon)
    failed = False
    checks = [("searchcom", audit.searchcom_audit(eps, args.trials, args.seed, mode=args.mode), eps)]
    checks.append(("report-noisy-max", audit.rnm_audit(eps, args.trials, args.seed), 2 * eps))
    for name, rows, bound in checks:
        for r in rows:
            status = "PASS" if r.ok else "FAIL"
            failed |= not r.ok
            print(
                f"{status} {name} output={r.output!s:>5} counts=({r.count_a},{r.count_b}) "
                f"|log ratio|={abs(r.log_ratio):.4f} bound={bound:.4f}+{r.slack:.4f}"
            )
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdpsearch", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="canonicalize an edge list (dense ids, optional sparsification)")
    _add_graph_args(p)
    p.add_argument("--out")
    p.add_argument("--id-map", help="write 'id label' lines here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("infect", help="plant a targeted subpopulation; writes a partition file")
    _add_graph_args(p)
    p.add_argument("--config", help="JSON with seed_vertex, p, q, rounds, rng_seed, protect_seed")
    p.add_argument("--seed-vertex")
    p.add_argument("--p", type=float)
    p.add_argument("--q", type=float)
    p.add_argument("--rounds", type=int)
    p.add_argument("--rng-seed", type=int)
    p.add_argument("--no-protect-seed", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_infect)

    p = sub.add_parser("search", help="run Target, or PTarget when --epsilon is given")
    _add_graph_args(p)
    p.add_argument("--partition", required=True)
    p.add_argument("--seed-vertex", required=True)
    p.add_argument("--sop", default="cn", help="cn | triangle | path:K | flow:K")
    p.add_argument("--k", type=int, default=10, help="number of components to seek")
    p.add_argument("--stop-threshold", type=int, default=100, dest="stop_threshold")
    p.add_argument("--epsilon", help="per-round epsilon or 'inf'; omit for the non-private search")
    p.add_argument("--mode", choices=["appendix", "maintext"], default="appendix")
    p.add_argument("--rng-seed", type=int, default=int(os.environ.get(SEED_ENV, 0)))
    p.add_argument("--budget", type=int)
    p.add_argument("--trace-out")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("flow", help="compute Flow_k(v, targets) with a certified LP")
    _add_graph_args(p)
    p.add_argument("--v", required=True)
    p.add_argument("--targets", required=True, help="comma-separated labels")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--float", action="store_true", help="solve in floating point with HiGHS")
    p.add_argument("--lp-out", help="dump the LP in CPLEX LP format")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("experiment", help="run a JSON-configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trials", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--epsilon")
    p.add_argument("--mode", choices=["appendix", "maintext"])
    p.add_argument("--workers", type=int)
    p.add_argument("--master-seed", type=int, dest="master_seed")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("check-privacy", help="empirical probability-ratio tests")
    p.add_argument("--epsilon", default="1")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["appendix", "maintext"], default="appendix")
    p.set_defaults(func=cmd_check_privacy)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GraphFormatError, InvalidSeedError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
