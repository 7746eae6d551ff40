"""Budget-vs-discovery experiments: repeated PTarget runs against one Target run.

An experiment is described by a single JSON document (:class:`ExperimentConfig`)
and produces ``results.csv``, ``results.json`` and ``curves.svg``. Output
bytes depend only on the config and the master seed.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graph import (
    Graph,
    Population,
    gnp_random_graph,
    random_geometric_graph,
    read_edge_list,
    read_partition,
    sparsify_by_weight,
    targeted_components,
)
from .infection import InfectionConfig, infect
from .mechanisms import NoiseSource, risk_multiplier
from .proximity import SoPDescriptor
from .search import MODES, SearchTrace, ptarget, target

SEED_ENV = "PDPSEARCH_SEED"


class ConfigError(ValueError):
    pass


def parse_epsilon(value) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity", "∞"):
        return math.inf
    eps = float(value)
    if math.isnan(eps) or eps <= 0:
        raise ConfigError(f"epsilon must be positive or 'inf', got {value!r}")
    return eps


@dataclass
class ExperimentConfig:
    """One experiment. Either ``graph`` (an edge-list path) or ``synthetic`` must be set,
    and either ``partition`` (a targeted-label file) or ``infection``.

    ``synthetic`` is ``{"kind": "geometric", "n": ..., "radius": ..., "seed": ...}``
    or ``{"kind": "gnp", "n": ..., "p": ..., "seed": ...}``.
    """

    graph: str | None = None
    synthetic: dict | None = None
    weighted: bool = False
    min_weight: int | None = None
    infection: dict | None = None
    partition: str | None = None
    seed_vertex: int | None = None
    sop: dict = field(default_factory=lambda: {"sop": "cn", "k": 1})
    k: int = 10
    N: int = 100
    epsilon: float = 0.05
    mode: str = "appendix"
    delta: float = 1e-3
    trials: int = 200
    budget: int = 500
    master_seed: int = 0
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.epsilon = parse_epsilon(cfg.epsilon)
        return cfg

    @classmethod
    def load(cls, path: str | Path, env: dict | None = None) -> ExperimentConfig:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        base = Path(path).parent
        for key in ("graph", "partition"):
            if d.get(key) and not Path(d[key]).is_absolute():
                d[key] = str(base / d[key])
        env = os.environ if env is None else env
        if SEED_ENV in env:
            d["master_seed"] = int(env[SEED_ENV])
        return cls.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epsilon"] = "inf" if math.isinf(self.epsilon) else self.epsilon
        return d

    def validate(self) -> None:
        if (self.graph is None) == (self.synthetic is None):
            raise ConfigError("set exactly one of 'graph' and 'synthetic'")
        if (self.infection is None) == (self.partition is None):
            raise ConfigError("set exactly one of 'infection' and 'partition'")
        for key in ("graph", "partition"):
            path = getattr(self, key)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{key} file not found: {path}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.k < 1 or self.N < 0:
            raise ConfigError("need k >= 1 and N >= 0")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if not 0 < self.delta < 1:
            raise ConfigError("delta must lie in (0, 1)")
        if self.min_weight is not None and not self.weighted:
            raise ConfigError("min_weight needs weighted=true")
        try:
            SoPDescriptor.from_config(self.sop)
            if self.infection is not None:
                InfectionConfig.from_dict(self.infection)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid config: {exc}") from exc


def load_graph(cfg: ExperimentConfig) -> Graph:
    if cfg.synthetic is not None:
        syn = cfg.synthetic
        kind = syn.get("kind", "geometric")
        if kind == "geometric":
            g = random_geometric_graph(int(syn["n"]), float(syn["radius"]), int(syn.get("seed", 0)))
        elif kind == "gnp":
            g = gnp_random_graph(int(syn["n"]), float(syn["p"]), int(syn.get("seed", 0)))
        else:
            raise ConfigError(f"unknown synthetic graph kind {kind!r}")
    else:
        g = read_edge_list(cfg.graph, weighted=cfg.weighted)
    if cfg.min_weight is not None:
        g = sparsify_by_weight(g, cfg.min_weight)
    return g


def load_population(cfg: ExperimentConfig, g: Graph) -> tuple[Population, int]:
    if cfg.partition is not None:
        pop = read_partition(cfg.partition, g)
        seed = cfg.seed_vertex
        if seed is None:
            if not pop.targeted:
                raise ConfigError("partition has no targeted vertices")
            seed = min(pop.targeted)
    else:
        icfg = InfectionConfig.from_dict(cfg.infection)
        pop = Population(g.n, infect(g, icfg))
        seed = icfg.seed_vertex if cfg.seed_vertex is None else cfg.seed_vertex
    if not pop.is_targeted(seed):
        raise ConfigError(f"seed vertex {seed} is not targeted")
    return pop, seed


def classify_regime(components, total: int | None = None) -> int:
    """1 if the largest targeted component holds over half the targeted vertices,
    3 if it holds under 5%, else 2."""
    sizes = [c if isinstance(c, int) else len(c) for c in components]
    total = sum(sizes) if total is None else total
    if total == 0:
        return 3
    frac = max(sizes, default=0) / total
    if frac > 0.5:
        return 1
    if frac < 0.05:
        return 3
    return 2


def trace_curves(trace: SearchTrace, budget: int, per_round_epsilon: float | None):
    """Per-budget (discovered, components_found, epsilon) for b = 1..budget.

    Only queries with budget index <= b count toward row b.
    """
    disc = np.zeros(budget + 1, dtype=np.int64)
    for _, b in trace.discoveries:
        if b <= budget:
            disc[b] += 1
    comp = np.zeros(budget + 1, dtype=np.int64)
    for b in trace.component_events:
        if b <= budget:
            comp[b] += 1
    disc = np.cumsum(disc)[1:]
    comp = np.cumsum(comp)[1:]
    if per_round_epsilon is None:
        eps = None
    else:
        eps = [0.0 if c <= 1 else (c - 1) * per_round_epsilon for c in comp.tolist()]
    return disc.tolist(), comp.tolist(), eps


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    seed_vertex: int
    component_sizes: list[int]
    target_trace: SearchTrace
    trial_traces: list[SearchTrace]
    np_curve: list[int]
    mean_curve: list[float]
    sd_curve: list[float]
    risk_mean: list[float]
    risk_sd: list[float]
    regime: int

    @property
    def targeted_count(self) -> int:
        return sum(self.component_sizes)


def _run_trial(args):
    g, targeted, seed, sop, cfg, i = args
    src = NoiseSource(cfg.master_seed, i)
    return ptarget(
        g, Population(g.n, targeted), seed, sop, cfg.k, cfg.N, cfg.epsilon, src,
        mode=cfg.mode, budget=cfg.budget,
    )


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """One Target run and ``cfg.trials`` PTarget runs, each truncated at ``cfg.budget`` queries.

    Trial ``i`` draws its noise from stream ``i`` of the master seed, so adding
    trials never changes earlier ones. Aggregates use the population standard
    deviation over trials.
    """
    cfg.validate()
    g = load_graph(cfg)
    pop, seed = load_population(cfg, g)
    sop = SoPDescriptor.from_config(cfg.sop)
    comps = targeted_components(g, pop)

    np_trace = target(g, pop.fresh(), seed, sop, cfg.k, cfg.N, budget=cfg.budget)
    jobs = [(g, pop.targeted, seed, sop, cfg, i) for i in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            traces = list(pool.map(_run_trial, jobs))
    else:
        traces = [_run_trial(job) for job in jobs]

    np_curve, _, _ = trace_curves(np_trace, cfg.budget, None)
    disc = np.array([trace_curves(t, cfg.budget, cfg.epsilon)[0] for t in traces], dtype=float)
    eps = np.array([trace_curves(t, cfg.budget, cfg.epsilon)[2] for t in traces], dtype=float)
    risk = np.exp(eps)
    with np.errstate(invalid="ignore"):
        # an infinite per-round epsilon makes the multiplier infinite; its spread is too
        risk_sd = np.nan_to_num(risk.std(axis=0), nan=np.inf)
    sizes = sorted((len(c) for c in comps), reverse=True)
    return ExperimentResult(
        config=cfg,
        seed_vertex=seed,
        component_sizes=sizes,
        target_trace=np_trace,
        trial_traces=traces,
        np_curve=np_curve,
        mean_curve=disc.mean(axis=0).tolist(),
        sd_curve=disc.std(axis=0).tolist(),
        risk_mean=risk.mean(axis=0).tolist(),
        risk_sd=risk_sd.tolist(),
        regime=classify_regime(sizes),
    )


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return repr(float(x))


def emit_outputs(result: ExperimentResult, out_dir: str | Path) -> dict[str, Path]:
    """Write results.csv, results.json and curves.svg into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    cfg = result.config
    paths = {
        "csv": out / "results.csv",
        "json": out / "results.json",
        "svg": out / "curves.svg",
    }
    try:
        with open(paths["csv"], "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "budget", "discovered", "components_found", "epsilon", "risk_multiplier"])
            disc, comp, _ = trace_curves(result.target_trace, cfg.budget, None)
            for b in range(cfg.budget):
                w.writerow(["np", b + 1, disc[b], comp[b], "", ""])
            for i, tr in enumerate(result.trial_traces):
                disc, comp, eps = trace_curves(tr, cfg.budget, cfg.epsilon)
                for b in range(cfg.budget):
                    w.writerow([i, b + 1, disc[b], comp[b], _fmt(eps[b]), _fmt(risk_multiplier(eps[b]))])
        doc = {
            "config": cfg.to_dict(),
            "seed_vertex": result.seed_vertex,
            "targeted_count": result.targeted_count,
            "component_sizes": result.component_sizes,
            "regime": result.regime,
            "aggregate": {
                "budget": list(range(1, cfg.budget + 1)),
                "nonprivate": result.np_curve,
                "private_mean": result.mean_curve,
                "private_sd": result.sd_curve,
                "risk_multiplier_mean": [_json_num(x) for x in result.risk_mean],
                "risk_multiplier_sd": [_json_num(x) for x in result.risk_sd],
            },
            "target_trace": result.target_trace.to_dict(),
            "trial_traces": [t.to_dict() for t in result.trial_traces],
        }
        with open(paths["json"], "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
            fh.write("\n")
        with open(paths["svg"], "w", encoding="utf-8") as fh:
            fh.write(render_svg(result))
    except OSError as exc:
        raise OSError(f"failed writing results to {out}: {exc}") from exc
    return paths


def _json_num(x: float):
    return x if math.isfinite(x) else "inf"


def render_svg(result: ExperimentResult, width: int = 800, height: int = 480) -> str:
    """Discovery curves: Target line, PTarget mean with a 1-sd band, risk multiplier
    on a right-hand axis, and circles at Target's component events."""
    cfg = result.config
    left, right, top, bottom = 60, 60, 30, 50
    pw, ph = width - left - right, height - top - bottom
    budget = cfg.budget
    ymax = max(
        [1.0]
        + list(result.np_curve)
        + [m + s for m, s in zip(result.mean_curve, result.sd_curve)]
    )
    finite_risk = [m + s for m, s in zip(result.risk_mean, result.risk_sd) if math.isfinite(m + s)]
    rmax = max([2.0] + finite_risk)

    def sx(b):
        return left + pw * b / budget

    def sy(y):
        return top + ph * (1 - y / ymax)

    def sr(r):
        return top + ph * (1 - (r - 1) / (rmax - 1))

    def pts(ys, scale):
        return " ".join(f"{sx(b + 1):.2f},{scale(y):.2f}" for b, y in enumerate(ys) if math.isfinite(y))

    upper = [m + s for m, s in zip(result.mean_curve, result.sd_curve)]
    lower = [m - s for m, s in zip(result.mean_curve, result.sd_curve)]
    band = pts(upper, sy) + " " + " ".join(
        f"{sx(b + 1):.2f},{sy(y):.2f}" for b, y in reversed(list(enumerate(lower)))
    )
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{left + pw / 2}" y="{height - 12}" text-anchor="middle" font-size="13">budget (oracle queries)</text>',
        f'<text x="16" y="{top + ph / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {top + ph / 2})">targeted vertices found</text>',
        f'<text x="{width - 14}" y="{top + ph / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(90 {width - 14} {top + ph / 2})">risk multiplier</text>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<text x="{left - 6}" y="{sy(ymax * frac) + 4:.2f}" text-anchor="end" font-size="11">{ymax * frac:.0f}</text>'
        )
        parts.append(
            f'<text x="{sx(budget * frac):.2f}" y="{top + ph + 16}" text-anchor="middle" font-size="11">{budget * frac:.0f}</text>'
        )
        parts.append(
            f'<text x="{left + pw + 6}" y="{sr(1 + (rmax - 1) * frac) + 4:.2f}" font-size="11">{1 + (rmax - 1) * frac:.2f}</text>'
        )
    parts.append(f'<polygon class="sd-band" points="{band}" fill="#d62728" fill-opacity="0.2" stroke="none"/>')
    parts.append(f'<polyline class="private-mean" points="{pts(result.mean_curve, sy)}" fill="none" stroke="#d62728" stroke-width="2"/>')
    parts.append(f'<polyline class="nonprivate" points="{pts(result.np_curve, sy)}" fill="none" stroke="#1f77b4" stroke-width="2"/>')
    parts.append(f'<polyline class="risk" points="{pts(result.risk_mean, sr)}" fill="none" stroke="#2ca02c" stroke-width="1.5" stroke-dasharray="5,3"/>')
    for b in result.target_trace.component_events:
        if 1 <= b <= budget:
            parts.append(
                f'<circle class="component-event" cx="{sx(b):.2f}" cy="{sy(result.np_curve[b - 1]):.2f}" r="4" '
                f'fill="none" stroke="#1f77b4"/>'
            )
    parts.append("</svg>\n")
    return "\n".join(parts)
