import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate

from .constants import REFERENCE_GRID_STEP, SQRT2
from .data_types import LawKind
from .exceptions import DomainError, NumericalError
from .measures import Atomic, GridDensity, Measure
from .utils.grid import GridSpec


Interval = Tuple[float, float]


@dataclass(frozen=True)
class LawSpec:
    """Closed-form reference law.

    Parameters
    ----------
    kind : LawKind
        Which law.
    gamma : float, optional
        Ratio of the Marchenko-Pastur law, in ``(0, 1]``.
    alpha : float, optional
        Interpolation parameter of ``p_alpha``, in ``(0, 1]``.
    """
    kind: LawKind
    gamma: Optional[float] = None
    alpha: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind == LawKind.MARCHENKO_PASTUR:
            if self.gamma is None or not 0 < self.gamma <= 1:
                raise DomainError(f"Marchenko-Pastur ratio gamma must lie in (0, 1], got {self.gamma}")
        if self.kind == LawKind.P_ALPHA:
            if self.alpha is None or not 0 < self.alpha <= 1:
                raise DomainError(f"p_alpha parameter alpha must lie in (0, 1], got {self.alpha}")

    @staticmethod
    def rademacher() -> 'LawSpec':
        return LawSpec(LawKind.RADEMACHER)

    @staticmethod
    def mu_half() -> 'LawSpec':
        return LawSpec(LawKind.MU_HALF)

    @staticmethod
    def semicircle() -> 'LawSpec':
        return LawSpec(LawKind.SEMICIRCLE)

    @staticmethod
    def marchenko_pastur(gamma: float) -> 'LawSpec':
        return LawSpec(LawKind.MARCHENKO_PASTUR, gamma=gamma)

    @staticmethod
    def p_alpha(alpha: float) -> 'LawSpec':
        return LawSpec(LawKind.P_ALPHA, alpha=alpha)

    @staticmethod
    def gaussian() -> 'LawSpec':
        return LawSpec(LawKind.GAUSSIAN)

    def to_dict(self) -> Dict[str, Any]:
        return {"law": self.kind.value, "gamma": self.gamma, "alpha": self.alpha}


def _on_support(x: np.ndarray, mask: np.ndarray, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    out = np.zeros_like(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = fn(x[mask])
    out[mask] = np.where(np.isfinite(values), values, 0.0)
    return out


def semicircle_density(x: Any) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return _on_support(x, np.abs(x) <= 2, lambda t: np.sqrt(4 - t ** 2) / (2 * np.pi))


def mp_edges(gamma: float) -> Interval:
    r = math.sqrt(gamma)
    return (1 - r) ** 2, (1 + r) ** 2


def mp_density(x: Any, gamma: float) -> np.ndarray:
    """Marchenko-Pastur density ``sqrt((t - a)(b - t)) / (2 pi gamma t)`` on ``[a, b] = [(1 - √γ)², (1 + √γ)²]``.

    At ``gamma = 1`` the density has an integrable ``t^(-1/2)`` singularity at 0; the node value there is 0.
    """
    a, b = mp_edges(gamma)
    x = np.asarray(x, dtype=np.float64)
    return _on_support(x, (x >= a) & (x <= b) & (x > 0),
                       lambda t: np.sqrt((t - a) * (b - t)) / (2 * np.pi * gamma * t))


def p_alpha_edges(alpha: float) -> Interval:
    """Squared edges ``(γ₁², γ₂²) = (2 - 2√(2α - α²), 2 + 2√(2α - α²))``; they add up to 4."""
    r = 2 * math.sqrt(2 * alpha - alpha ** 2)
    return max(2 - r, 0.0), 2 + r


def p_alpha_density(x: Any, alpha: float) -> np.ndarray:
    a, b = p_alpha_edges(alpha)
    x = np.asarray(x, dtype=np.float64)
    sq = x ** 2
    if a == 0:
        return _on_support(x, sq <= b, lambda t: np.sqrt(b - t ** 2) / (2 * np.pi * alpha))
    return _on_support(x, (sq >= a) & (sq <= b),
                       lambda t: np.sqrt((t ** 2 - a) * (b - t ** 2)) / (2 * np.pi * alpha * np.abs(t)))


def gaussian_density(x: Any) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-x ** 2 / 2) / math.sqrt(2 * np.pi)


def semicircle_cauchy(z: Any) -> Any:
    z = np.asarray(z, dtype=np.complex128)
    return (z - np.sqrt(z - 2) * np.sqrt(z + 2)) / 2


def p_alpha_cauchy(z: Any, alpha: float) -> Any:
    """Cauchy transform of ``p_alpha``: ``(z² - 2(1 - α) - R(z)) / (2αz)`` with ``R(z)² = (z² - a)(z² - b)``.

    ``R`` is the product of the principal square roots of the four linear factors, which is analytic on the upper
    half-plane, behaves like ``z²`` at infinity and is positive on ``(√b, ∞)``.
    """
    a, b = p_alpha_edges(alpha)
    ra, rb = math.sqrt(a), math.sqrt(b)
    z = np.asarray(z, dtype=np.complex128)
    r = np.sqrt(z - ra) * np.sqrt(z + ra) * np.sqrt(z - rb) * np.sqrt(z + rb)
    h = (z ** 2 - 2 * (1 - alpha) - r) / (2 * alpha * z)
    if np.any(h.imag >= 0):
        raise NumericalError("Branch error: the p_alpha Cauchy transform left the lower half-plane")
    return h if h.ndim else complex(h)


def p_alpha_hilbert(x: float, alpha: float) -> float:
    """Closed-form Hilbert transform ``(x - 2(1 - α)/x) / (2απ)`` of ``p_alpha`` on its support."""
    return (x - 2 * (1 - alpha) / x) / (2 * alpha * np.pi)


def two_point(p: float) -> Atomic:
    """``p δ_{√2} + (1 - p) δ_{-√2}``, the minimizers of the conditioned GUE rate function."""
    if not 0 <= p <= 1:
        raise DomainError(f"Weight p must lie in [0, 1], got {p}")
    return Atomic([-SQRT2, SQRT2], [1 - p, p])


def support(spec: LawSpec) -> List[Interval]:
    """Exact support as a list of closed intervals (degenerate intervals for atoms)."""
    if spec.kind == LawKind.RADEMACHER:
        return [(-1.0, -1.0), (1.0, 1.0)]
    elif spec.kind == LawKind.MU_HALF:
        return [(-SQRT2, -SQRT2), (SQRT2, SQRT2)]
    elif spec.kind == LawKind.SEMICIRCLE:
        return [(-2.0, 2.0)]
    elif spec.kind == LawKind.MARCHENKO_PASTUR:
        return [mp_edges(spec.gamma)]  # type: ignore[arg-type]
    elif spec.kind == LawKind.P_ALPHA:
        a, b = p_alpha_edges(spec.alpha)  # type: ignore[arg-type]
        g1, g2 = math.sqrt(a), math.sqrt(b)
        if g1 == 0:
            return [(-g2, g2)]
        return [(-g2, -g1), (g1, g2)]
    else:
        return [(-math.inf, math.inf)]


def density_function(spec: LawSpec) -> Callable[[np.ndarray], np.ndarray]:
    if spec.kind == LawKind.SEMICIRCLE:
        return semicircle_density
    elif spec.kind == LawKind.MARCHENKO_PASTUR:
        return lambda x: mp_density(x, spec.gamma)  # type: ignore[arg-type]
    elif spec.kind == LawKind.P_ALPHA:
        return lambda x: p_alpha_density(x, spec.alpha)  # type: ignore[arg-type]
    elif spec.kind == LawKind.GAUSSIAN:
        return gaussian_density
    raise DomainError(f"{spec.kind.value} is an atomic law without density")


def law_mass(spec: LawSpec) -> float:
    """Mass of the closed-form density, integrated with square-root endpoint weights.

    Checks the normalizing constants independently of any grid.
    """
    if spec.kind.is_atomic:
        return 1.0
    if spec.kind == LawKind.GAUSSIAN:
        return float(integrate.quad(gaussian_density, -np.inf, np.inf)[0])
    if spec.kind == LawKind.SEMICIRCLE or (spec.kind == LawKind.P_ALPHA and spec.alpha == 1):
        return float(integrate.quad(lambda t: 1 / (2 * np.pi), -2, 2, weight="alg", wvar=(0.5, 0.5))[0])
    if spec.kind == LawKind.MARCHENKO_PASTUR:
        gamma: float = spec.gamma  # type: ignore[assignment]
        a, b = mp_edges(gamma)
        if a == 0:
            return float(integrate.quad(lambda t: 1 / (2 * np.pi * gamma), a, b, weight="alg", wvar=(-0.5, 0.5))[0])
        return float(integrate.quad(lambda t: 1 / (2 * np.pi * gamma * t), a, b, weight="alg", wvar=(0.5, 0.5))[0])
    alpha: float = spec.alpha  # type: ignore[assignment]
    a, b = p_alpha_edges(alpha)
    g1, g2 = math.sqrt(a), math.sqrt(b)
    half = integrate.quad(lambda t: math.sqrt((t + g1) * (t + g2)) / (2 * np.pi * alpha * t), g1, g2,
                          weight="alg", wvar=(0.5, 0.5))[0]
    return float(2 * half)


def reference_grid(spec: LawSpec, step: float = REFERENCE_GRID_STEP, margin: int = 10) -> GridSpec:
    """Grid covering the support with ``margin`` extra nodes on each side, aligned to multiples of ``step``."""
    if spec.kind == LawKind.GAUSSIAN:
        lo, hi = -8.0, 8.0
    else:
        intervals = support(spec)
        lo, hi = intervals[0][0], intervals[-1][1]
    x0 = (math.floor(lo / step) - margin) * step
    x1 = (math.ceil(hi / step) + margin) * step
    return GridSpec.from_bounds(x0, step, x1)


def make_law(spec: LawSpec, grid: Optional[GridSpec] = None) -> Measure:
    """Builds the law as a measure: atoms for Rademacher/μ_½, otherwise the density sampled on ``grid``.

    The grid must cover the support; without a grid, :func:`reference_grid` is used. The returned density is
    renormalized to mass 1 and keeps the trapezoid mass of the closed form in ``raw_mass``.
    """
    if spec.kind == LawKind.RADEMACHER:
        return Atomic([-1.0, 1.0], [0.5, 0.5])
    elif spec.kind == LawKind.MU_HALF:
        return Atomic([-SQRT2, SQRT2], [0.5, 0.5])
    grid = grid or reference_grid(spec)
    if spec.kind != LawKind.GAUSSIAN:
        intervals = support(spec)
        if not grid.contains(intervals[0][0], intervals[-1][1]):
            raise DomainError(f"Grid [{grid.x0}, {grid.x1}] does not cover the support "
                              f"[{intervals[0][0]}, {intervals[-1][1]}] of {spec.kind.value}")
    return GridDensity.from_function(density_function(spec), grid)
