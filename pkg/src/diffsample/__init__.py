"""Diffusion-aware sampling and Hansen-Hurwitz estimation on information diffusion networks."""

from ._accel import backend
from .cascade import (
    Cascade,
    CascadeSet,
    DiffusionNetwork,
    DiffusionParams,
    DiffusionTargetError,
    diffusion_rate,
    generate_cascade_set,
    simulate_cascade,
)
from .estimation import EstimateResult, hansen_hurwitz, plain_mean
from .graph import Graph, from_edges, induced_subgraph, load_edge_list
from .metrics import TargetKind, bias, eta_true
from .netgen import ForestFireParams, KroneckerParams, gen_forest_fire, gen_kronecker
from .sampling import LocalView, SamplerConfig, SampleTrace, bfs_sample, dns_sample, rw_sample

__version__ = "0.1.0"
