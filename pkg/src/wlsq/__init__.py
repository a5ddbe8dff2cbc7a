"""Weighted least squares approximation from random samples.

Orthonormal systems on the unit interval (Legendre, Chebyshev and the
eigenbases of the H^1 and H^2 embeddings), hyperbolic-cross tensor bases,
weighted sampling, a conjugate-gradient least-squares solver, closed-form
error bounds and the B-spline test function with exact error evaluation.
"""

from .basis1d import (
    CHEBYSHEV,
    H1,
    H2,
    LEGENDRE,
    Basis1D,
    BasisFamily,
    FamilyId,
    christoffel,
    eval_all,
    eval_basis,
    eval_h2_exact,
    eval_h2_stable,
    get_family,
    root_table,
    singular_value_sq,
    solve_tk,
    sup_norm_bound,
)
from .bounds import (
    BoundInputs,
    BoundReport,
    bernstein_tail,
    bound_l2_noiseless,
    bound_l2_noisy,
    bound_linf,
    chernoff_tail_probs,
    evaluate_bounds,
    hanson_wright_level,
    sampling_condition,
)
from .errors import (
    BreakdownError,
    NumericalError,
    QuadratureError,
    ResourceError,
    RootFindingError,
    SamplingError,
)
from .lsq import DesignOperator, LeastSquaresFit, apply_Sm, extreme_singular_values, solve_weighted_lsq
from .sampling import NoiseModel, SampleSet, add_noise, draw_samples, measure_for
from .tensor import HyperbolicCross, TensorBasis, build_cross, christoffel_tensor, eval_tensor
from .testfn import TestFunction, b2cut, coefficient_table, parseval_error

__version__ = "0.1.0"
