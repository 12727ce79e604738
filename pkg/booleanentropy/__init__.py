"""
Boolean entropy, the large deviation rate functionals of two random matrix models, and the Boolean central limit
semigroup.

Provides:
  1. Measures on the real line (atomic, grid densities, samples), moments and the bounded-Lipschitz distance.
  2. Cauchy and K-transforms, Boolean cumulants, Boolean convolution and Stieltjes inversion.
  3. The Boolean, free and classical entropies and the rate functionals built from them.
  4. Samplers for the chiral Wishart block and the conditioned GUE.
  5. The entropy curve along the Boolean central limit semigroup and its derivative at t = 1.
  6. Consistency checks of the large deviation principles against the models' joint densities.

How to use the documentation:

Documentation is available as docstrings provided with the code and as a reference guide built from ``docs/``.
Code snippets in the docstring examples are indicated by three greater-than signs::

  >>> from booleanentropy import Atomic, gamma_entropy
  >>> gamma_entropy(Atomic([-1.0, 1.0], [0.5, 0.5]))
  0.0

Use the built-in ``help`` function to view a function's or class' docstring::

  >>> from booleanentropy import boolean_convolve
  >>> help(boolean_convolve)
  ... # doctest: +SKIP
"""

from ._version import __version__
from .booleanclt import SemigroupEvaluator, ell, gamma_curve, gamma_prime_1, mu_t_cauchy, mu_t_measure, standardize
from .data_types import LawKind, MeasureKind, ModelKind, RateName, Status, Suite
from .ensembles import (
    EnsembleConfig, McmcParams, MetropolisSampler, sample_conditioned_gue, sample_wishart_block, scaled_pair,
    solve_theta
)
from .entropy import (
    RateReport, classical_entropy, euler_lagrange_residual, gamma_entropy, rate_i, rate_i1, rate_ialpha,
    rate_igamma_v, rate_isym, rate_jgamma, rate_jplus, rate_jtilde, rate_pair, sigma_entropy
)
from .exceptions import (
    DomainError, InvalidMeasureError, InversionFailureError, MixingWarning, MonotonicityWarning, NumericalError,
    SentinelWarning, SingularTransformError, VerificationFailure
)
from .laws import LawSpec, make_law
from .measures import Atomic, Empirical, GridDensity, Measure, d_bl, d_bl_pair, dilate, moment, symmetrize
from .transforms import (
    boolean_convolve, boolean_cumulants, cauchy_transform, hilbert_transform, k_transform, stieltjes_invert
)
from .verify import (
    WeightModel, alpha_regime_stats, convergence_stats, distance_to_m0, ldp_weight_ratio_check, log_weight,
    maximality_stats
)
