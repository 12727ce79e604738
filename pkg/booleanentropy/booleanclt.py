import math
import warnings
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Polynomial

from .constants import DEFAULT_CLT_GRID, DEFAULT_EPS_SCHEDULE, MONOTONICITY_TOL, SEMIGROUP_MEAN_TOL, ZERO_MASS_TOL
from .entropy import gamma_entropy
from .exceptions import DomainError, InversionFailureError, MonotonicityWarning, NumericalError
from .measures import Atomic, Empirical, GridDensity, Measure, dilate, moment
from .transforms import (
    ComplexArg, as_atomic, atoms_from_rational, check_upper_half_plane, k_transform, rational_parts, stieltjes_invert
)
from .utils.grid import GridSpec
from .utils.tqdm_joblib import parallel_map


CurvePoint = Tuple[float, float]


def standardize(m: Measure) -> Measure:
    """Shifts ``m`` to mean 0 and dilates it to second moment 1."""
    mean = moment(m, 1) / m.mass
    if isinstance(m, Atomic):
        m = Atomic(m.locations - mean, m.weights, mass=m.mass)
    elif isinstance(m, Empirical):
        m = Empirical(m.points - mean, mass=m.mass)
    elif isinstance(m, GridDensity):
        m = GridDensity(m.x0 - mean, m.dx, m.values, mass=m.mass)
    var = moment(m, 2) / m.mass
    if not var > 0:
        raise DomainError("Cannot standardize a measure concentrated at a single point")
    return dilate(m, 1 / math.sqrt(var))


def check_standardized(m: Measure, tol: float = SEMIGROUP_MEAN_TOL) -> None:
    if not m.is_probability:
        raise DomainError(f"Expected a probability measure, got mass {m.mass}")
    m1, m2 = moment(m, 1), moment(m, 2)
    if abs(m1) > tol or abs(m2 - 1) > tol:
        raise DomainError(f"Expected mean 0 and variance 1 (see standardize), got mean {m1:.3g} and "
                          f"second moment {m2:.12g}")


@dataclass(frozen=True)
class SemigroupEvaluator:
    """The Boolean central limit semigroup ``μ_t`` of a centered base measure with unit variance, ``t >= 1``.

    ``μ_t`` is the law of ``(X_1 + ... + X_t) / √t`` for Boolean independent copies of the base at integer
    ``t``; its Cauchy transform ``G_t(z) = 1 / (z - √t K(√t z))`` extends the family to real ``t >= 1``.
    """
    base: Measure
    t: float = 1.0

    def __post_init__(self) -> None:
        check_standardized(self.base)
        if not self.t >= 1:
            raise DomainError(f"The semigroup is defined for t >= 1, got t={self.t}")

    def at(self, t: float) -> 'SemigroupEvaluator':
        return SemigroupEvaluator(self.base, t)


def mu_t_cauchy(s: SemigroupEvaluator, z: ComplexArg) -> Any:
    """``G_t(z) = 1 / ((1 - t) z + √t / G(√t z))`` on the upper half-plane."""
    z_arr = check_upper_half_plane(z)
    root = math.sqrt(s.t)
    value = 1.0 / (z_arr - root * np.asarray(k_transform(s.base, root * z_arr)))
    return complex(value) if np.ndim(z) == 0 else value


def _exact_mu_t(base: Atomic, t: float) -> Atomic:
    p, q = rational_parts(base)
    root = math.sqrt(t)
    scale = root ** np.arange(max(p.coef.size, q.coef.size))
    ps = Polynomial(p.coef * scale[:p.coef.size])
    qs = Polynomial(q.coef * scale[:q.coef.size])
    z = Polynomial([0.0, 1.0])
    return atoms_from_rational(ps, (1 - t) * z * ps + root * qs)


def default_clt_grid() -> GridSpec:
    return GridSpec.from_bounds(*DEFAULT_CLT_GRID)


def mu_t_measure(s: SemigroupEvaluator, grid: Optional[GridSpec] = None,
                 eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE, n_jobs: int = 1) -> Measure:
    """``μ_t`` as a measure.

    Atomic and empirical bases give atomic ``μ_t`` with as many atoms: ``G_t`` is rational and its poles and
    residues are computed exactly. Density bases are recovered on ``grid`` by Stieltjes inversion.
    """
    atomic = as_atomic(s.base)
    if atomic is not None:
        return _exact_mu_t(atomic, s.t)
    grid = grid or default_clt_grid()
    return stieltjes_invert(lambda z: mu_t_cauchy(s, z), grid.x0, grid.dx, grid.count, eps_schedule, n_jobs=n_jobs)


def _curve_point(s: SemigroupEvaluator, grid: Optional[GridSpec],
                 eps_schedule: Sequence[float]) -> Tuple[float, float, str]:
    try:
        return s.t, gamma_entropy(mu_t_measure(s, grid, eps_schedule)), ""
    except NumericalError as e:
        return s.t, math.nan, str(e)


def gamma_curve(s: SemigroupEvaluator, ts: Sequence[float], grid: Optional[GridSpec] = None,
                eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE, n_jobs: int = 1,
                progress: bool = False) -> List[CurvePoint]:
    """Boolean entropy ``γ(t) = Γ(μ_t)`` along the semigroup.

    The values are not clamped: a decrease beyond the monotonicity tolerance is reported with a
    :class:`MonotonicityWarning`. A failing inversion aborts with the points computed before it attached to the
    :class:`InversionFailureError`.
    """
    ts = [float(t) for t in ts]
    if not ts:
        return []
    if ts[0] < 1 or any(b < a for a, b in zip(ts, ts[1:])):
        raise DomainError(f"ts must be sorted ascending and >= 1, got {ts}")
    results = parallel_map(_curve_point, [(s.at(t), grid, eps_schedule) for t in ts], n_jobs=n_jobs,
                           desc="Entropy curve", progress=progress)
    curve: List[CurvePoint] = []
    for t, value, error in results:
        if error:
            raise InversionFailureError(f"Inversion of mu_t failed at t={t:g}: {error}", partial=curve)
        curve.append((t, value))
    for (t0, g0), (t1, g1) in zip(curve, curve[1:]):
        if g1 < g0 - MONOTONICITY_TOL:
            warnings.warn(MonotonicityWarning.msg(t0, t1, g0 - g1), MonotonicityWarning)
    return curve


def ell(x: Any) -> Any:
    """``ℓ(x) = (x + 1)/(x - 1) · log x²``, continuously extended by ``ℓ(1) = 4``; ``ℓ(0) = +inf``."""
    arr = np.asarray(x, dtype=np.float64)
    d = arr - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_abs = np.where(arr > 0, np.log1p(np.where(arr > 0, d, 0.0)), np.log(np.abs(arr)))
        ratio = np.where(d == 0, 2.0, 2 * log_abs / np.where(d == 0, 1.0, d))
    out = (arr + 1) * ratio
    return float(out) if out.ndim == 0 else out


def _midpoint_nodes(d: GridDensity) -> Tuple[np.ndarray, np.ndarray]:
    x = d.x[:-1] + d.dx / 2
    w = 0.5 * (d.values[:-1] + d.values[1:]) * d.dx
    if np.any(x == 0):
        x, w = d.x, d.trapezoid_weights() * d.values
    keep = w > 0
    return x[keep], w[keep] / w[keep].sum()


def gamma_prime_1(m: Measure, chunk: int = 512) -> float:
    """Right derivative of the entropy curve at ``t = 1``: ``E[ℓ(X/Y)]/2 - 1`` for independent ``X, Y ~ m``.

    Atomic measures use the exact double sum; grid densities the product midpoint rule, whose nodes avoid ``y = 0``.
    The value is non-negative and vanishes only at the Rademacher law.
    """
    check_standardized(m)
    if isinstance(m, GridDensity):
        x, w = _midpoint_nodes(m)
    else:
        x, w = m.nodes()
        at_zero = float(w[x == 0].sum())
        if at_zero > ZERO_MASS_TOL:
            raise DomainError(f"X/Y is undefined: the measure has mass {at_zero:.3g} at 0")
        x, w = x[x != 0], w[x != 0]
    total = 0.0
    for start in range(0, x.size, chunk):
        ratios = x[start:start + chunk, None] / x[None, :]
        total += float(w[start:start + chunk] @ ell(ratios) @ w)
    return 0.5 * total - 1.0
