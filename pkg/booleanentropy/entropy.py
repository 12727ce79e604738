import functools
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import entr, xlogy

from .constants import (
    I1_INFIMUM, IGAMMAV_DEFAULT_DOMAIN, PAIR_MASS_TOL, POTENTIAL_CHUNK_SIZE, POTENTIAL_SEARCH_STEP,
    SYMMETRY_CHECK_ORDER, SYMMETRY_TOL
)
from .data_types import RateName
from .exceptions import DomainError, SentinelWarning
from .laws import LawSpec, make_law
from .measures import GridDensity, Measure, is_symmetric, moment


Potential = Callable[[np.ndarray], np.ndarray]


@dataclass
class RateReport:
    """Value of a rate functional.

    ``raw`` is the functional as written, ``normalizer`` the constant subtracted to make its infimum 0 (analytic
    where known in closed form, otherwise the functional evaluated at the minimizer) and
    ``normalized = raw - normalizer``.
    """
    name: RateName
    raw: float
    normalizer: float
    normalized: float
    params: Dict[str, float] = field(default_factory=dict)

    @staticmethod
    def of(name: RateName, raw: float, normalizer: float, **params: float) -> 'RateReport':
        return RateReport(name, float(raw), float(normalizer), float(raw - normalizer), dict(params))

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name.value, "raw": self.raw, "normalizer": self.normalizer,
                "normalized": self.normalized, "params": self.params}


class ELResidual(NamedTuple):
    max_dev_on_support: float
    min_slack_off_support: float


def _log_antiderivatives(u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    au = np.abs(u)
    a = xlogy(u, au) - u
    b = 0.5 * xlogy(u * u, au) - 0.25 * u * u
    return a, b


def log_potential(d: GridDensity, x: Any) -> np.ndarray:
    """Logarithmic potential ``U(x) = int log|x - y| d(y) dy`` of a grid density.

    The kernel is integrated exactly against the piecewise-linear interpolant of the density, cell by cell, so the
    logarithmic singularity at ``y = x`` needs no special treatment.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y, f = d.x, d.values
    slopes = np.diff(f) / d.dx
    out = np.empty(xs.size)
    for start in range(0, xs.size, POTENTIAL_CHUNK_SIZE):
        chunk = xs[start:start + POTENTIAL_CHUNK_SIZE, None]
        u = y[None, :] - chunk
        a, b = _log_antiderivatives(u)
        intercept = f[:-1] - slopes * u[:, :-1]
        out[start:start + POTENTIAL_CHUNK_SIZE] = (intercept * np.diff(a, axis=1) + slopes * np.diff(b, axis=1)).sum(1)
    return out


def _zero_atom(m: Measure) -> bool:
    if isinstance(m, GridDensity):
        return False
    x, w = m.nodes()
    return bool(np.any((x == 0) & (w > 0)))


def gamma_entropy(m: Measure) -> float:
    """Boolean entropy ``Γ(μ) = int log x² dμ``.

    Returns ``-inf`` (with a :class:`SentinelWarning`) when ``μ`` has an atom at 0.
    """
    if isinstance(m, GridDensity):
        return float(2 * log_potential(m, 0.0)[0])
    if _zero_atom(m):
        warnings.warn(SentinelWarning.msg("Boolean entropy", "atom at 0"), SentinelWarning)
        return -np.inf
    x, w = m.nodes()
    return float(np.dot(w, np.log(x * x)))


def sigma_entropy(m: Measure) -> float:
    """Free entropy ``Σ(μ) = ∬ log|x - y| dμ dμ``; ``-inf`` for measures with atoms."""
    if not isinstance(m, GridDensity):
        warnings.warn(SentinelWarning.msg("Free entropy", f"{m.kind.value} measures have atoms"), SentinelWarning)
        return -np.inf
    potential = log_potential(m, m.x)
    return float(np.dot(m.trapezoid_weights() * m.values, potential))


def classical_entropy(d: Measure) -> float:
    """Boltzmann-Gibbs entropy ``-int f log f`` of a grid density (``0 log 0 = 0``)."""
    if not isinstance(d, GridDensity):
        raise DomainError(f"Classical entropy needs a density, got a {d.kind.value} measure")
    return float(np.dot(d.trapezoid_weights(), entr(d.values)))


def _check_positive_support(m: Measure, functional: str) -> None:
    if isinstance(m, GridDensity):
        if np.any(m.values[m.x <= 0] > 0):
            raise DomainError(f"{functional} needs support in (0, inf); the density has mass on x <= 0")
        return
    x, w = m.nodes()
    if np.any(x[w > 0] <= 0):
        raise DomainError(f"{functional} needs support in (0, inf); found mass at {x[w > 0].min()}")


def _check_alpha(alpha: float, name: str = "alpha") -> None:
    if not 0 < alpha <= 1:
        raise DomainError(f"{name} must lie in (0, 1], got {alpha}")


def rate_isym(m: Measure) -> RateReport:
    """``int (x² - log x²) dμ`` on symmetric measures; infimum 1 at the Rademacher law."""
    if not is_symmetric(m, SYMMETRY_CHECK_ORDER, SYMMETRY_TOL):
        raise DomainError("rate_isym needs a symmetric measure (odd moments up to order 5 must vanish)")
    return RateReport.of(RateName.ISYM, moment(m, 2) - gamma_entropy(m), 1.0)


def rate_i(m: Measure) -> RateReport:
    """``int (x²/2 - log x²) dμ``; infimum ``1 - log 2`` on every ``p δ_{√2} + (1 - p) δ_{-√2}``."""
    return RateReport.of(RateName.I, 0.5 * moment(m, 2) - gamma_entropy(m), 1.0 - np.log(2.0))


def rate_i1(m: Measure) -> RateReport:
    """Interaction part ``∬ (x²/4 + y²/4 - log|x - y|) dμ dμ = m₂/2 - Σ``; infimum 3/4 at the semicircle law."""
    return RateReport.of(RateName.I1, 0.5 * moment(m, 2) - sigma_entropy(m), I1_INFIMUM)


def rate_jplus(m: Measure) -> RateReport:
    """``int (x² - log x²) dμ`` on ``(0, inf)``; infimum 1 at ``δ_1``."""
    _check_positive_support(m, "rate_jplus")
    return RateReport.of(RateName.JPLUS, moment(m, 2) - gamma_entropy(m), 1.0)


def rate_jtilde(m: Measure) -> RateReport:
    """``int (x - log x) dμ`` on ``(0, inf)``; infimum 1 at ``δ_1``."""
    _check_positive_support(m, "rate_jtilde")
    return RateReport.of(RateName.JTILDE, moment(m, 1) - 0.5 * gamma_entropy(m), 1.0)


def _jgamma_raw(m: Measure, gamma: float) -> float:
    first = moment(m, 1)
    return gamma * (first - sigma_entropy(m)) + (1 - gamma) * (first - 0.5 * gamma_entropy(m))


@functools.lru_cache(maxsize=64)
def jgamma_normalizer(gamma: float) -> float:
    """``J_γ`` evaluated at the Marchenko-Pastur law on its reference grid."""
    return _jgamma_raw(make_law(LawSpec.marchenko_pastur(gamma)), gamma)


def rate_jgamma(m: Measure, gamma: float) -> RateReport:
    """``γ(int x dμ - Σ(μ)) + (1 - γ) int (x - log x) dμ``, minimized by the Marchenko-Pastur law ``ν_γ``."""
    _check_alpha(gamma, "gamma")
    _check_positive_support(m, "rate_jgamma")
    return RateReport.of(RateName.JGAMMA, _jgamma_raw(m, gamma), jgamma_normalizer(gamma), gamma=gamma)


def _ialpha_raw(m: Measure, alpha: float) -> float:
    # α ∬F + (1 - α) ∫G with F = (x² + y²)/4 - log|x - y| and G = x²/2 - log x²
    return 0.5 * moment(m, 2) - alpha * sigma_entropy(m) - (1 - alpha) * gamma_entropy(m)


@functools.lru_cache(maxsize=64)
def ialpha_normalizer(alpha: float) -> float:
    """``I_α`` evaluated at ``p_α`` on its reference grid."""
    return _ialpha_raw(make_law(LawSpec.p_alpha(alpha)), alpha)


def rate_ialpha(m: Measure, alpha: float) -> RateReport:
    """Interpolation ``α I₁ + (1 - α) I₂`` between the free and the Boolean functional, minimized by ``p_α``."""
    _check_alpha(alpha)
    raw = _ialpha_raw(m, alpha)
    if not np.isfinite(raw):
        raw = np.inf
    return RateReport.of(RateName.IALPHA, raw, ialpha_normalizer(alpha), alpha=alpha)


def _expect(m: Measure, fn: Potential) -> float:
    x, w = m.nodes()
    return float(np.dot(w, fn(x)))


def potential_infimum(V: Potential, gamma: float, domain: Tuple[float, float] = IGAMMAV_DEFAULT_DOMAIN,
                      step: float = POTENTIAL_SEARCH_STEP) -> float:
    """Pointwise infimum of ``V(x) - γ log|x|`` over ``domain``: grid search, then golden-section refinement.

    A minimum on the edge of ``domain`` with lower values just outside raises :class:`DomainError`; potentials that
    only confine on a half-line (``V(x) = x``) need a ``domain`` on that half-line.
    """
    lo, hi = domain
    xs = np.arange(lo, hi + step / 2, step)
    if gamma > 0:
        xs = xs[xs != 0]

    def phi(t: Any) -> Any:
        t = np.asarray(t, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return V(t) - gamma * np.log(np.abs(t)) if gamma > 0 else V(t)

    values = phi(xs)
    k = int(np.argmin(values))
    best = float(values[k])
    if k in (0, xs.size - 1):
        outside = xs[k] - step if k == 0 else xs[k] + step
        if float(phi(outside)) < best:
            raise DomainError(f"V(x) - gamma log|x| keeps decreasing past {xs[k]:g}: the potential is not confining "
                              f"on {domain}, pass a domain that contains the minimizer")
    if 0 < k < xs.size - 1:
        try:
            res = minimize_scalar(lambda t: float(phi(t)), bracket=(xs[k - 1], xs[k], xs[k + 1]), method="golden")
            best = min(best, float(res.fun))
        except ValueError:
            pass
    return best


def rate_igamma_v(m: Measure, gamma: float, V: Potential,
                  domain: Tuple[float, float] = IGAMMAV_DEFAULT_DOMAIN) -> RateReport:
    """``int (V(x) - γ log|x|) dμ`` for a confining potential ``V`` (vectorized callable).

    The normalizer is the pointwise infimum of the integrand over ``domain``. The default domain suits potentials
    confining on both sides; pass one on the half-line for potentials such as ``V(x) = x``.
    """
    if gamma < 0:
        raise DomainError(f"gamma must be non-negative, got {gamma}")
    if gamma > 0 and _zero_atom(m):
        warnings.warn(SentinelWarning.msg("I_{gamma,V}", "atom at 0"), SentinelWarning)
        raw = np.inf
    else:
        raw = _expect(m, V) - (0.5 * gamma * gamma_entropy(m) if gamma > 0 else 0.0)
    return RateReport.of(RateName.IGAMMAV, raw, potential_infimum(V, gamma, domain), gamma=gamma)


def rate_pair(a: Measure, b: Measure) -> RateReport:
    """Rate of the scaled eigenvalue pair: ``int x² da + int x² db - 2 mass(a) mass(b)``; infimum ``-1/2``."""
    if abs(a.mass + b.mass - 1.0) > PAIR_MASS_TOL:
        raise DomainError(f"Pair masses must add up to 1, got {a.mass} + {b.mass}")
    raw = moment(a, 2) + moment(b, 2) - 2 * a.mass * b.mass
    return RateReport.of(RateName.IPAIR, raw, -0.5, mass_alpha=a.mass)


def euler_lagrange_residual(d: GridDensity, alpha: float, probe: Optional[np.ndarray] = None) -> ELResidual:
    """Checks the equilibrium condition of ``I_α`` for a density.

    With ``φ(x) = 2α U(x) - (x²/2 - (1 - α) log x²)`` and ``C`` the average of ``φ`` over the probes on the
    support, returns the largest deviation ``|φ - C|`` on the support and the smallest slack ``C - φ`` off it.
    A minimizer has both close to 0 and non-negative slack.
    """
    _check_alpha(alpha)
    if not isinstance(d, GridDensity):
        raise DomainError("euler_lagrange_residual needs a grid density")
    if probe is None:
        probe = d.x[::max(1, d.grid.count // 800)]
    probe = np.asarray(probe, dtype=np.float64)
    lo, hi = d.hull()
    if probe.min() > lo + d.dx or probe.max() < hi - d.dx:
        raise DomainError(f"Probe grid [{probe.min()}, {probe.max()}] does not cover the support [{lo}, {hi}]")
    probe = probe[probe != 0]
    on = d.density(probe) > 0
    with np.errstate(divide="ignore"):
        phi = 2 * alpha * log_potential(d, probe) - (0.5 * probe ** 2 - (1 - alpha) * np.log(probe ** 2))
    c = float(phi[on].mean())
    max_dev = float(np.abs(phi[on] - c).max())
    min_slack = float((c - phi[~on]).min()) if np.any(~on) else np.inf
    return ELResidual(max_dev, min_slack)
