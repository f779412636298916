from .solver import (
    FinitenessReport, OpticalTable, distance_matrix, edge_weights, finiteness_report,
    label_setting, optical_diameter, optical_from_sources, optical_pair, truncated_solve
)
from .checks import (
    MetricAxiomReport, ModulusReport, brute_force_optical, check_metric_axioms, topology_modulus
)

__all__ = [
    'FinitenessReport',
    'OpticalTable',
    'distance_matrix',
    'edge_weights',
    'finiteness_report',
    'label_setting',
    'optical_diameter',
    'optical_from_sources',
    'optical_pair',
    'truncated_solve',
    'MetricAxiomReport',
    'ModulusReport',
    'brute_force_optical',
    'check_metric_axioms',
    'topology_modulus',
]
