"""Gray-Hervella classification of almost Hermitian structures on twistor spaces.

Curvature of analytic 4-dimensional charts, the metrics ``h_t`` and almost
complex structures ``J_f`` on the twistor space, closed-form covariant
derivatives of the Kahler form checked against differentiation oracles, and
a classifier over the sixteen Gray-Hervella classes.
"""

from .analysis import GHReport, InconsistentPattern, analyze, classify, gh_residuals
from .catalog import build as build_metric
from .fibermaps import ANTIPODAL, CONST_OMEGA, IDENTITY, FiberMap, lam
from .riemann import MetricChart

__version__ = "0.1.0"

__all__ = [
    "ANTIPODAL", "CONST_OMEGA", "IDENTITY", "FiberMap", "GHReport", "InconsistentPattern",
    "MetricChart", "analyze", "build_metric", "classify", "gh_residuals", "lam",
]
