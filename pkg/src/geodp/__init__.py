"""Differentially private Fréchet means on Riemannian manifolds.

Geometry for the sphere, SPD matrices and Kendall's planar shape space,
Fréchet mean estimation, curvature-aware privacy calibration, and the
K-norm gradient and Laplace mechanisms sampled by Metropolis chains.
"""

from .errors import (
    AlignmentError,
    ConditioningError,
    ConfigError,
    ContractError,
    DomainError,
    EmptyInputError,
    FormatError,
    GeodpError,
)
from .frechet import Dataset, SolverConfig, frechet_mean, neg_gradient, variance
from .geometry import GeodesicBall, ManifoldDescriptor, Point, Tangent, distance, exp_map, log_map
from .kendall import KendallShapeSpace
from .mcmc import ChainConfig, sample_mh
from .mechanisms import (
    MechanismResult,
    kng_neg_log_density,
    laplace_neg_log_density,
    sample_euclidean_laplace,
    sample_kng,
    sample_manifold_laplace,
)
from .privacy import PrivacyParams, h_max, h_min, scale_sigma, sensitivity
from .spd import SPD
from .sphere import Sphere

__version__ = "0.1.0"
