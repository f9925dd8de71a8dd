"""Robustness of network community structure under degree-preserving perturbation."""

from .detect import DetectorError, DetectorSpec, canonicalize, detect, modularity
from .graph import (Graph, GraphParseError, GraphReferenceError, degree_sequence,
                    null_configuration_model, parse_edgelist, parse_gml, read_graph,
                    rewire_fraction, simplify, write_edgelist)
from .measures import MEASURES, confusion_table, distance
from .robustness import (CompareResult, PerturbationPlan, RobustnessCurves, RobustResult,
                         perturbed_ensemble, robin_compare, robin_robust)
from .stats import (GPHyper, NumericalError, fit_gp, gp_log_marginal, robin_auc,
                    robin_fda_test, robin_gp_test)

__version__ = "0.1.0"
