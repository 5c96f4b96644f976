"""Diffusion state distances, spectral truncation and mesoscopic certificates on weighted graphs."""
from importlib.metadata import PackageNotFoundError, version as _version

try:
    __version__ = _version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .graph import (
    DiffusionOperator,
    GraphError,
    WeightedGraph,
    build_graph_from_edges,
    build_graph_from_kernel,
    diffusion_operator,
    largest_connected_component,
)
from .spectral import ConvergenceError, SpectralBasis, eig_full, eig_topk
from .metrics import (
    DistanceMatrix,
    DsdEmbedding,
    commute_distance,
    diffusion_distance,
    dsd_embedding,
    dsd_exact,
    dsd_spectral,
    dsd_truncated,
    green_function,
    laplacian_eigenmap,
    pairwise_distances,
    regularized_inverse,
)
from .mesoscopic import (
    CertificateError,
    MesoscopicCertificate,
    Partition,
    ScaleAssignment,
    envelope_bound,
    multitemporal_bounds,
    optimal_scale_assignment,
    stochastic_complement,
    time_window,
)
