"""Privacy-preserving targeted search in social networks."""

from .graph import (
    Graph,
    GraphFormatError,
    InvalidSeedError,
    Population,
    load_edge_list,
    rewire_vertex,
    sparsify_by_weight,
    targeted_components,
)
from .mechanisms import (
    NO_NOISE,
    NoiseSource,
    PrivacyLedger,
    compose_advanced,
    compose_basic,
    report_noisy_max,
    risk_multiplier,
    sample_laplace,
)
from .proximity import SoPDescriptor, common_neighbors, flow_sop, path_count, triangle_sop
from .flow_lp import build_layered_network, solve_flow_lp, verify_certificate
from .search import SearchTrace, ptarget, search_com, sfs, target
from .infection import InfectionConfig, infect
from .harness import ExperimentConfig, ExperimentResult, classify_regime, emit_outputs, run_experiment

__version__ = "0.1.0"

__all__ = [
    "Graph",
    "GraphFormatError",
    "InvalidSeedError",
    "Population",
    "load_edge_list",
    "rewire_vertex",
    "sparsify_by_weight",
    "targeted_components",
    "NO_NOISE",
    "NoiseSource",
    "PrivacyLedger",
    "compose_advanced",
    "compose_basic",
    "report_noisy_max",
    "risk_multiplier",
    "sample_laplace",
    "SoPDescriptor",
    "common_neighbors",
    "flow_sop",
    "path_count",
    "triangle_sop",
    "build_layered_network",
    "solve_flow_lp",
    "verify_certificate",
    "SearchTrace",
    "ptarget",
    "search_com",
    "sfs",
    "target",
    "InfectionConfig",
    "infect",
    "ExperimentConfig",
    "ExperimentResult",
    "classify_regime",
    "emit_outputs",
    "run_experiment",
]
