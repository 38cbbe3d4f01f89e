"""Gap filling of scattered data with a modified planar rotator spin model.

Data values are mapped to spin angles, and the angles at prediction sites
are relaxed by restricted Metropolis Monte Carlo against fixed sample
spins.  Inverse distance weighting and ordinary kriging are included as
reference interpolators, together with Whittle-Matern field generation and
cross-validation tooling.
"""

__version__ = "0.1.0"

from .core import (
    DegenerateRange,
    Hyperparams,
    InsufficientHistory,
    InsufficientSamples,
    InvalidParameter,
    ModelParams,
    MPRSError,
    PointSet,
    SpinState,
    TransformBounds,
    from_spin_angles,
    to_spin_angles,
)
from .neighbors import NeighborGraph, build_graph, estimate_bandwidths, knn
from .engine import McTrace, PredictionResult, metropolis_sweep, predict, sg_slope, total_energy
from .fields import (
    FactorizationFailure,
    GaussianFieldSampler,
    WmParams,
    sample_gaussian_field,
    sample_lognormal_field,
    wm_covariance,
)
from .baselines import OrdinaryKriging, SingularSystem, idw_predict, ok_predict
from .validation import (
    InvalidSplit,
    MeasureReport,
    Measures,
    compute_measures,
    crossval,
    make_splits,
    synthetic_study,
)

__all__ = [name for name in dir() if not name.startswith("_")]
