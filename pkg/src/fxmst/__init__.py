"""Minimal-spanning-tree analysis of currency-exchange correlation networks."""

from .ingest import PanelError, RatePanel, despike, load_groups, parse_rates, serialize_rates, synchronize
from .msttree import (
    DegreeDistribution,
    DistanceMatrix,
    SpanningTree,
    build_mst,
    degree_distribution,
    distance_matrix,
    export_tree,
)
from .returns import ReturnPanel, log_returns, normalize, rebase
from .scaling import (
    BaseReport,
    BetaFit,
    FitError,
    PowerFit,
    fit_beta,
    fit_power,
    hierarchical_exponent,
    sweep_report,
)
from .spectrum import CorrelationMatrix, Spectrum, correlation_matrix, eigen, rmt_bound, zero_modes

__version__ = "0.1.0"
