"""Classical machine learning from first principles.

Bayesian decision rules, maximum entropy, EM mixtures, kernel SVMs, spectral
methods (PCA, LDA, CCA), graph clustering and a PAC/VC laboratory, built on a
small dense linear-algebra core.
"""

from . import clustering, infotheory, mixtures, numerics, pac, probability, spectral, svm
from .errors import (
    ClassicMLError,
    ComponentCollapseError,
    ConvergenceError,
    DegeneracyError,
    EmptyInputError,
    InvalidParameterError,
    NumericError,
    ShapeError,
    SingularityError,
    ZeroMassError,
)

__version__ = "0.1.0"

__all__ = [
    "clustering",
    "infotheory",
    "mixtures",
    "numerics",
    "pac",
    "probability",
    "spectral",
    "svm",
    "ClassicMLError",
    "ComponentCollapseError",
    "ConvergenceError",
    "DegeneracyError",
    "EmptyInputError",
    "InvalidParameterError",
    "NumericError",
    "ShapeError",
    "SingularityError",
    "ZeroMassError",
]
