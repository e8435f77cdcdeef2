"""High-order semi-analytic cubature of n-dimensional biharmonic potentials.

Grid-sampled densities are convolved with closed-form potentials of
tensor-product generating functions; a separated representation reduces the
n-dimensional sum to one-dimensional convolutions combined under a
double-exponential quadrature, which keeps dimensions up to 1e8 tractable.
"""

from .errors import (BiharmError, DimensionTooLarge, NonConvergence,
                     QuadratureDivergence, RankBudgetExceeded, SupportTruncated,
                     UnsupportedDimension)
from .kernels import (BasisOrder, Dimension, GridSpec, PotentialSample,
                      RadialProfile, direct_cubature, phi2, phi2M, radial_eta2M)
from .quad import (DEFAULT_RULE, DENode, DEQuadrature, de_transform,
                   integral_phi2, qm_poly, rm_poly, tensor_weight)
from .engine import (AxisPoint, IsotropicGaussianPolyDensity, SaturationReport,
                     SeparatedDensity, build_test_density, conv1d, evaluate,
                     evaluate_symmetric, saturation_epsilon0)
from .specfun import (EvalAccuracy, erf, exp_integral_e1, gen_laguerre, hermite,
                      kummer_1f1, lower_incomplete_gamma)

__version__ = "0.1.0"

__all__ = [
    "BiharmError", "DimensionTooLarge", "NonConvergence", "QuadratureDivergence",
    "RankBudgetExceeded", "SupportTruncated", "UnsupportedDimension",
    "BasisOrder", "Dimension", "GridSpec", "PotentialSample", "RadialProfile",
    "direct_cubature", "phi2", "phi2M", "radial_eta2M",
    "DEFAULT_RULE", "DENode", "DEQuadrature", "de_transform", "integral_phi2",
    "qm_poly", "rm_poly", "tensor_weight",
    "AxisPoint", "IsotropicGaussianPolyDensity", "SaturationReport",
    "SeparatedDensity", "build_test_density", "conv1d", "evaluate",
    "evaluate_symmetric", "saturation_epsilon0",
    "EvalAccuracy", "erf", "exp_integral_e1", "gen_laguerre", "hermite",
    "kummer_1f1", "lower_incomplete_gamma",
    "__version__",
]
