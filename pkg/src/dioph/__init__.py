"""Desk-scale Diophantine approximation experiments.

Exact elliptic curve arithmetic over Q, canonical heights by two routes,
real periods and elliptic logarithms, exhaustive matrix approximation,
lattice-flow diagnostics, a hyperplane-absolute game simulator, and the
weak Dirichlet experiment for rank-1 curves.
"""

from .ec_core import CurvePoint, RationalCurve, curve_from_json, from_ainvs
from .dioph_matrix import ApproxRecord, ExponentFit, RealMatrix, liouville_number
from .errors import (BudgetExceededError, CertificateError, ComponentError,
                     DegenerateTargetError, DiophError, PoleProximityError,
                     SingularMatrixError, ValidationError)

__version__ = "0.1.0"

__all__ = [
    "ApproxRecord", "BudgetExceededError", "CertificateError", "ComponentError",
    "CurvePoint", "DegenerateTargetError", "DiophError", "ExponentFit",
    "PoleProximityError", "RationalCurve", "RealMatrix", "SingularMatrixError",
    "ValidationError", "curve_from_json", "from_ainvs", "liouville_number",
    "__version__",
]
