"""Graph signal processing: reference operators, graph Fourier transforms, filters, wavelets and filterbanks."""

from . import errors, fast, filterbank, filters, io, sgwt
from .errors import GSPError
from .filters import apply_exact, design_arma_graph_dependent, design_arma_shank, filter_matrix, tikhonov_response
from .graph import Graph, build_graph, cycle_graph, path_graph, star_graph
from .operators import Kind, OperatorOptions, reference_operator, stationary_distribution
from .responses import FilterResponse
from .spectral import SpectralBasis, decompose, dirichlet_form, gft, inverse_gft, total_variation

__version__ = "0.1.0"

__all__ = [
    "FilterResponse", "GSPError", "Graph", "Kind", "OperatorOptions", "SpectralBasis",
    "apply_exact", "build_graph", "cycle_graph", "decompose", "design_arma_graph_dependent",
    "design_arma_shank", "dirichlet_form", "errors", "fast", "filter_matrix", "filterbank", "filters",
    "gft", "inverse_gft", "io", "path_graph", "reference_operator", "sgwt", "star_graph",
    "stationary_distribution", "tikhonov_response", "total_variation",
]
