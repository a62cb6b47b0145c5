"""Graph signal filtering, graph matched filters and a two-layer graph
convolutional network with explicit backpropagation."""

from .coarsening import IndicatorMatrix, lift_weights, max_pool_coarsen, coarsen_weights, pseudo_inverse
from .gcnn import GCNNConfig, GCNNParams, backward, forward, init_gaussian, predict, train, train_step
from .graph_core import Graph, OperatorKind, build_graph, circular_graph, paper8_graph, shift_operator
from .matched_filter import DiffusionFeature, MatchedFilterBank, bank_decide, matched_response
from .rng import Xoshiro256
from .spectral import PolynomialFilter, SpectralFilter, eigendecompose, filter_spectral, filter_vertex, gft, igft

__version__ = "0.1.0"
