"""Two-phase diffusion that plants a targeted subpopulation in a graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class InfectionConfig:
    """Parameters of ``infect(G, s, p, q, rounds)``.

    ``p`` is the per-round infection probability, ``q`` the probability that an
    infected vertex turns immune afterwards. With ``protect_seed`` the seed
    always survives the immune phase.
    """

    seed_vertex: int
    p: float
    q: float
    rounds: int
    rng_seed: int = 0
    protect_seed: bool = True

    def __post_init__(self):
        for name in ("p", "q"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> InfectionConfig:
        return cls(
            seed_vertex=int(d["seed_vertex"]),
            p=float(d["p"]),
            q=float(d["q"]),
            rounds=int(d["rounds"]),
            rng_seed=int(d.get("rng_seed", 0)),
            protect_seed=bool(d.get("protect_seed", True)),
        )


def infection_draws(n: int, cfg: InfectionConfig) -> tuple[np.ndarray, np.ndarray]:
    """Uniforms driving :func:`infect`: one per (round, vertex) and one per vertex for immunity.

    Tying each draw to a vertex rather than to stream position couples runs
    that differ only in ``p`` or ``q``.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    return rng.random((cfg.rounds, n)), rng.random(n)


def infect(g: Graph, cfg: InfectionConfig, immune_phase: bool = True) -> set[int]:
    """Run the infection and immune phases; return the surviving infected set.

    Each round, every uninfected vertex adjacent to the infected set at the
    start of the round is infected with probability ``p``. Afterwards each
    infected vertex survives with probability ``1 - q``.
    """
    s = cfg.seed_vertex
    if not 0 <= s < g.n:
        raise ValueError(f"seed vertex {s} out of range")
    spread, immunity = infection_draws(g.n, cfg)
    infected = np.zeros(g.n, dtype=bool)
    infected[s] = True
    current = [s]
    for r in range(cfg.rounds):
        exposed = {y for x in current for y in g.neighbors(x) if not infected[y]}
        # draws are uniform on [0, 1): u < p has probability exactly p
        newly = [y for y in sorted(exposed) if spread[r, y] < cfg.p]
        infected[newly] = True
        current.extend(newly)
    members = np.flatnonzero(infected)
    if not immune_phase:
        return set(members.tolist())
    survivors = {int(v) for v in members if immunity[v] >= cfg.q}
    if cfg.protect_seed:
        survivors.add(s)
    return survivors
