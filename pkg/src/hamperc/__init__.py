"""Site percolation on d-dimensional Hamming tori."""

from .branching import OffspringLaw, WalkState, progeny_sizes, survival_probability, total_progeny, walk_step
from .components import (
    ComponentStats,
    cluster_discovery,
    connected_components,
    modified_cluster_discovery,
    plane_occupancy_max,
)
from .sampler import SiteConfig, c_log_to_p, lambda_to_p, sample
from .theory import (
    char_poly_value,
    connectivity_thresholds,
    critical_lambda,
    extinction,
    giant_size_prediction,
    perron,
    tail_constants,
    theory_report,
)
from .torus import TorusSpec, hamming_distance, make_spec, neighbors_on_axis

__version__ = "0.1.0"
