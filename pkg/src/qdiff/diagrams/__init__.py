"""Chain graphs, lumpings, pairings, skeletons and orbits with exact small-lattice oracles."""

from .chains import ChainGraph, build_chain_graph, j_indicator, lumping_of_labels, q_indicator
from .covariance import (
    covariance_bruteforce,
    covariance_table,
    covariance_via_lumpings,
    lumping_decomposition,
)
from .expectation import edge_product_expectation
from .orbits import OrbitPartition, configuration_classes, orbit_partition, two_thirds_bound
from .pairings import (
    Pairing,
    collapse_parallel_bridges,
    enumerate_pairings,
    enumerate_skeletons,
    expand_skeleton,
    is_admissible,
)
from .values import r_value, r_value_naive

__all__ = [
    "ChainGraph",
    "OrbitPartition",
    "Pairing",
    "build_chain_graph",
    "collapse_parallel_bridges",
    "configuration_classes",
    "covariance_bruteforce",
    "covariance_table",
    "covariance_via_lumpings",
    "edge_product_expectation",
    "enumerate_pairings",
    "enumerate_skeletons",
    "expand_skeleton",
    "is_admissible",
    "j_indicator",
    "lumping_decomposition",
    "lumping_of_labels",
    "orbit_partition",
    "q_indicator",
    "r_value",
    "r_value_naive",
    "two_thirds_bound",
]
