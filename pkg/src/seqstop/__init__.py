"""Sequential early stopping for iterative estimation procedures.

Five estimators (truncated SVD, Landweber, conjugate gradients, L2-boosting
via orthogonal matching pursuit, and breadth-first CART regression trees)
share an iterate-once contract, residual-based sequential stopping rules,
and optional oracle tracking against a user-supplied data-generating truth.
A Monte-Carlo harness replicates the associated simulation studies at desk
scale and emits reproducible CSV.
"""

from . import datagen, linalg, simulation
from .boosting import L2Boost, NoiseEstimate, scaled_lasso_noise
from .cg import ConjugateGradients
from .core import IterateLog, OracleTrack, StopIndex, argmin_risk, balanced_crossing, scan_discrepancy
from .errors import (
    InvalidSizeError,
    OracleUnavailableError,
    RankExhaustedError,
    SeqstopError,
    ZeroMatrixError,
)
from .landweber import Landweber
from .linalg import DesignMatrix, SvdTriplet, deflate, jacobi_svd, top_k_svd, top_singular_triplet
from .rng import RNG_ALGORITHM, make_rng
from .simulation import SimulationParameters, SimulationRecord, SimulationResult, aggregate, run
from .tree import RegressionTree
from .tsvd import TruncatedSvd

__version__ = "0.1.0"

__all__ = [
    "ConjugateGradients",
    "DesignMatrix",
    "InvalidSizeError",
    "IterateLog",
    "L2Boost",
    "Landweber",
    "NoiseEstimate",
    "OracleTrack",
    "OracleUnavailableError",
    "RankExhaustedError",
    "RegressionTree",
    "RNG_ALGORITHM",
    "SeqstopError",
    "SimulationParameters",
    "SimulationRecord",
    "SimulationResult",
    "StopIndex",
    "SvdTriplet",
    "TruncatedSvd",
    "ZeroMatrixError",
    "aggregate",
    "argmin_risk",
    "balanced_crossing",
    "datagen",
    "deflate",
    "jacobi_svd",
    "linalg",
    "make_rng",
    "run",
    "scaled_lasso_noise",
    "scan_discrepancy",
    "simulation",
    "top_k_svd",
    "top_singular_triplet",
]
