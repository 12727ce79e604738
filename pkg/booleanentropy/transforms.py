from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial import Polynomial

from .constants import (
    DEFAULT_CUMULANT_ORDER, DEFAULT_EPS_SCHEDULE, INVERSION_MASS_TOL, MAX_CUMULANT_ORDER, POLE_REALNESS_TOL,
    RESIDUE_CLIP_TOL, RESIDUE_SUM_TOL, SINGULAR_G_TOL
)
from .data_types import ComplexValue
from .exceptions import DomainError, InversionFailureError, SingularTransformError
from .measures import Atomic, Empirical, GridDensity, Measure, moment
from .utils.grid import GridSpec
from .utils.tqdm_joblib import parallel_map


ComplexArg = Union[ComplexValue, np.ndarray]
TransformEvaluator = Callable[[np.ndarray], np.ndarray]

# number of complex kernel entries evaluated at once
_BLOCK_ENTRIES = 1 << 22


def check_upper_half_plane(z: ComplexArg) -> np.ndarray:
    z_arr = np.asarray(z, dtype=np.complex128)
    if not np.all(np.isfinite(z_arr)):
        raise DomainError("Transform evaluation points must be finite")
    if np.any(z_arr.imag <= 0):
        raise DomainError(f"Transforms are evaluated on the upper half-plane only, got Im(z)={z_arr.imag.min()}")
    return z_arr


def _same_shape(z: ComplexArg, value: np.ndarray) -> Any:
    if np.ndim(z) == 0:
        return complex(value.reshape(-1)[0])
    return value


def cauchy_transform(m: Measure, z: ComplexArg) -> Any:
    """Cauchy transform ``G(z) = int dm(x) / (z - x)`` for ``Im z > 0``.

    Atomic and empirical measures are summed exactly; grid densities use the trapezoid rule on their nodes.
    ``z`` may be a scalar (a complex is returned) or an array (an array of the same shape is returned).
    """
    z_arr = check_upper_half_plane(z)
    x, w = m.nodes()
    flat = z_arr.reshape(-1)
    out = np.empty(flat.shape, dtype=np.complex128)
    block = max(1, _BLOCK_ENTRIES // max(1, x.size))
    for start in range(0, flat.size, block):
        zz = flat[start:start + block, None]
        out[start:start + block] = (w / (zz - x)).sum(axis=1)
    return _same_shape(z, out.reshape(z_arr.shape))


def k_transform(m: Measure, z: ComplexArg) -> Any:
    """``K(z) = z - 1 / G(z)``; additive under Boolean convolution."""
    z_arr = check_upper_half_plane(z)
    g = np.asarray(cauchy_transform(m, z_arr))
    if np.any(np.abs(g) < SINGULAR_G_TOL):
        raise SingularTransformError("Cauchy transform vanishes; the K-transform is singular")
    return _same_shape(z, z_arr - 1.0 / g)


@dataclass(frozen=True)
class CumulantSeries:
    """Boolean cumulants ``b[0] = b_1, b[1] = b_2, ...``: the coefficients of ``K(z) = sum_k b_k z^(1-k)``."""
    b: np.ndarray

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.b)):
            raise ValueError("Boolean cumulants must be finite")

    @property
    def order(self) -> int:
        return int(self.b.size)

    def __add__(self, other: 'CumulantSeries') -> 'CumulantSeries':
        n = min(self.order, other.order)
        return CumulantSeries(self.b[:n] + other.b[:n])

    def moments(self) -> np.ndarray:
        """Moments ``m_1..m_order`` through ``m_n = sum_{k=1}^n b_k m_{n-k}``, ``m_0 = 1``."""
        m = np.zeros(self.order + 1)
        m[0] = 1.0
        for n in range(1, self.order + 1):
            m[n] = np.dot(self.b[:n], m[n - 1::-1])
        return m[1:]

    def to_dict(self) -> Dict[str, Any]:
        return {"order": self.order, "b": self.b.tolist()}


def boolean_cumulants(m: Measure, order: int = DEFAULT_CUMULANT_ORDER) -> CumulantSeries:
    """Boolean cumulants up to ``order`` from the moment recursion ``m_n = sum_{k=1}^n b_k m_{n-k}``."""
    if order < 1 or order > MAX_CUMULANT_ORDER:
        raise DomainError(f"Cumulant order must lie in [1, {MAX_CUMULANT_ORDER}], got {order}")
    mass = m.mass
    mom = np.array([1.0] + [moment(m, k) / mass for k in range(1, order + 1)])
    b = np.zeros(order)
    for n in range(1, order + 1):
        b[n - 1] = mom[n] - np.dot(b[:n - 1], mom[n - 1:0:-1])
    return CumulantSeries(b)


def rational_parts(m: Atomic) -> Tuple[Polynomial, Polynomial]:
    """Numerator and denominator of ``G(z) = P(z) / Q(z)`` for an atomic probability measure."""
    x, w = m.locations, m.weights / m.mass
    q = Polynomial.fromroots(x)
    p = Polynomial([0.0])
    for i in range(x.size):
        rest = np.delete(x, i)
        p = p + w[i] * (Polynomial.fromroots(rest) if rest.size else Polynomial([1.0]))
    return p, q


def atoms_from_rational(num: Polynomial, den: Polynomial) -> Atomic:
    """Atomic measure whose Cauchy transform is the proper rational function ``num / den``.

    Poles are the roots of ``den`` (companion matrix eigenvalues, polished by Newton steps); the weight of a pole
    is its residue ``num(r) / den'(r)``. Roots shared with ``num`` are removable and get no weight.
    """
    den = den.trim(tol=0)
    lead = den.coef[-1]
    num, den = num / lead, den / lead
    dden = den.deriv()
    roots = den.roots()
    num_scale = np.abs(num.coef).max() if num.coef.size else 0.0
    locations: List[float] = []
    weights: List[float] = []
    for r in roots:
        for _ in range(2):
            d = dden(r)
            if d != 0:
                r = r - den(r) / d
        scale = num_scale * max(1.0, abs(r)) ** max(0, num.degree())
        if abs(num(r)) <= 1e-10 * max(scale, 1e-300):
            continue
        if abs(r.imag) > POLE_REALNESS_TOL * max(1.0, abs(r.real)):
            raise InversionFailureError(f"Non-real pole {r} in Boolean convolution: numerical breakdown")
        residue = (num(r) / dden(r)).real
        if residue < RESIDUE_CLIP_TOL:
            raise InversionFailureError(f"Negative residue {residue} at pole {r.real}")
        locations.append(r.real)
        weights.append(max(residue, 0.0))
    total = float(np.sum(weights))
    if abs(total - 1.0) > RESIDUE_SUM_TOL:
        raise InversionFailureError(f"Residues sum to {total}, expected 1")
    return Atomic(locations, np.asarray(weights) / total)


def as_atomic(m: Measure) -> Optional[Atomic]:
    if isinstance(m, Atomic):
        return m
    if isinstance(m, Empirical):
        return m.to_atomic()
    return None


def _check_cumulants(result: Atomic, a: Atomic, b: Atomic, order: int) -> None:
    radius = max(1.0, float(np.abs(np.concatenate([a.locations, b.locations, result.locations])).max()))
    expected = boolean_cumulants(a, order) + boolean_cumulants(b, order)
    got = boolean_cumulants(result, order)
    tol = 1e-7 * radius ** np.arange(1, order + 1)
    if np.any(np.abs(got.b - expected.b) > tol):
        k = int(np.argmax(np.abs(got.b - expected.b) > tol)) + 1
        raise InversionFailureError(f"Boolean cumulant b_{k} of the convolution does not match the sum of cumulants")


def default_grid(a: Measure, b: Measure, dx: Optional[float] = None) -> GridSpec:
    lo_a, hi_a = a.hull()
    lo_b, hi_b = b.hull()
    span = max(hi_a - lo_a, hi_b - lo_b, 1.0)
    if dx is None:
        steps = [m.dx for m in (a, b) if isinstance(m, GridDensity)]
        dx = min(steps) if steps else 0.01
    return GridSpec.from_bounds(lo_a + lo_b - span, dx, hi_a + hi_b + span)


def boolean_convolve(a: Measure, b: Measure, order: int = DEFAULT_CUMULANT_ORDER, grid: Optional[GridSpec] = None,
                     eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE, n_jobs: int = 1) -> Measure:
    """Boolean convolution ``a ⊎ b``, characterised by ``K_{a⊎b} = K_a + K_b``.

    Atomic (and empirical) inputs are convolved exactly: ``G = 1 / (z - K_a - K_b)`` is a rational function and its
    partial fractions are the atoms of the result, checked against the cumulant sum up to ``order``. Other inputs
    are recovered on ``grid`` by Stieltjes inversion of the same ``G``.
    """
    if not a.is_probability or not b.is_probability:
        raise DomainError("Boolean convolution is defined for probability measures")
    aa, bb = as_atomic(a), as_atomic(b)
    if aa is not None and bb is not None:
        pa, qa = rational_parts(aa)
        pb, qb = rational_parts(bb)
        z = Polynomial([0.0, 1.0])
        result = atoms_from_rational(pa * pb, qa * pb + qb * pa - z * pa * pb)
        _check_cumulants(result, aa, bb, min(order, MAX_CUMULANT_ORDER))
        return result

    def g(zz: np.ndarray) -> np.ndarray:
        return 1.0 / (zz - np.asarray(k_transform(a, zz)) - np.asarray(k_transform(b, zz)))

    grid = grid or default_grid(a, b)
    return stieltjes_invert(g, grid.x0, grid.dx, grid.count, eps_schedule, n_jobs=n_jobs)


def _extrapolate_to_zero(eps: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Neville extrapolation of ``values[k] = f(eps[k])`` to ``eps = 0``; two points give ``2f(e/2) - f(e)``."""
    p = [v for v in values]
    n = len(p)
    for level in range(1, n):
        for i in range(n - level):
            j = i + level
            p[i] = (eps[i] * p[i + 1] - eps[j] * p[i]) / (eps[i] - eps[j])
    return p[0]


def _boundary_density(g: TransformEvaluator, x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    values = np.stack([-np.asarray(g(x + 1j * e)).imag / np.pi for e in eps])
    return _extrapolate_to_zero(eps, values)


def stieltjes_invert(g: TransformEvaluator, x0: float, dx: float, count: int,
                     eps_schedule: Sequence[float] = DEFAULT_EPS_SCHEDULE, n_jobs: int = 1) -> GridDensity:
    """Recovers a density from a Cauchy transform evaluator by ``f(x) = -Im g(x + i0) / pi``.

    The boundary value is extrapolated from the ``eps_schedule`` heights; negative values are clipped before the
    result is renormalized (``raw_mass`` of the returned density keeps the extrapolated mass).

    Parameters
    ----------
    g : callable
        Vectorized evaluator of the Cauchy transform on arrays of points in the upper half-plane.
    x0, dx, count : float, float, int
        Output grid.
    eps_schedule : sequence of float
        Strictly decreasing positive heights, at least two.
    n_jobs : int
        Number of parallel workers over blocks of grid nodes.
    """
    eps = np.asarray(eps_schedule, dtype=np.float64)
    if eps.size < 2 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise DomainError(f"eps_schedule must be strictly decreasing, positive and of length >= 2, got {eps_schedule}")
    grid = GridSpec(x0, dx, count)
    x = grid.nodes()
    blocks = np.array_split(x, max(1, min(count, 8 * max(1, n_jobs))))
    parts = parallel_map(_boundary_density, [(g, blk, eps) for blk in blocks], n_jobs=n_jobs, prefer="threads")
    values = np.clip(np.concatenate(parts), 0.0, None)
    tw = np.full(count, dx)
    tw[0] = tw[-1] = dx / 2
    mass = float(np.dot(tw, values))
    if not np.isfinite(mass) or abs(mass - 1.0) > INVERSION_MASS_TOL:
        raise InversionFailureError(f"Inverted density has mass {mass}; the grid misses part of the support "
                                    f"or the transform is not a Cauchy transform")
    return GridDensity(x0, dx, values)


def hilbert_transform(d: GridDensity, x: float) -> float:
    """Principal value ``(1/pi) PV int d(y) / (x - y) dy`` at a point strictly inside the grid.

    Nodes are paired symmetrically around ``x`` (``x - k dx`` and ``x + k dx``) and the singular point is
    excluded, so the odd part of the kernel cancels pairwise.
    """
    if not d.x0 < x < d.grid.x1:
        raise DomainError(f"Hilbert transform point {x} must lie strictly inside [{d.x0}, {d.grid.x1}]")
    h = d.dx
    reach = max(x - d.x0, d.grid.x1 - x)
    u = h * np.arange(1, int(np.ceil(reach / h)) + 1, dtype=np.float64)
    pairs = (d.density(x - u) - d.density(x + u)) / u
    return float(h * pairs.sum() / np.pi)
