"""Multilevel hierarchical kernel spectral clustering for large graphs."""

from .errors import CapacityError, ConfigError, InputError, MhkscError, NumericalError
from .graph import Graph, load_edge_list, load_partition
from .hierarchy import ThresholdSet, determine_thresholds, mh_ksc
from .ksc import KscModel, LatentMatrix, fit, project, project_batch
from .metrics import Partition, ari, cut_conductance, modularity, vi
from .tree import ClusterTree

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "ClusterTree", "ConfigError", "Graph", "InputError", "KscModel",
    "LatentMatrix", "MhkscError", "NumericalError", "Partition", "ThresholdSet", "ari",
    "cut_conductance", "determine_thresholds", "fit", "load_edge_list", "load_partition",
    "mh_ksc", "modularity", "project", "project_batch", "vi",
]
