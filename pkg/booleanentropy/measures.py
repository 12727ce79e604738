import abc
from typing import Any, Dict, Iterable, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from sklearn.utils import assert_all_finite, check_consistent_length, column_or_1d

from .constants import (
    ATOM_MERGE_TOL, ATOMIC_MASS_TOL, DBL_MAX_NODES, MAX_MOMENT_ORDER
)
from .data_types import MeasureKind
from .exceptions import DomainError, InvalidMeasureError, NumericalError
from .utils.grid import GridSpec


def _as_1d(values: Iterable[float], name: str) -> np.ndarray:
    try:
        arr = column_or_1d(np.asarray(values, dtype=np.float64).reshape(-1))
        assert_all_finite(arr)
    except ValueError as e:
        raise InvalidMeasureError(f"{name}: {e}") from e
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _check_mass(mass: float) -> float:
    mass = float(mass)
    if not 0.0 <= mass <= 1.0 + 1e-12:
        raise InvalidMeasureError(f"Total mass must lie in [0, 1], got {mass}")
    return min(mass, 1.0)


class Measure(abc.ABC):
    """Finite positive measure on the real line with total mass at most 1.

    A ``Measure`` with ``mass == 1`` is a probability measure; smaller masses are used for the sub-probability
    measures of scaled eigenvalue pairs. All variants are immutable after construction and expose the same node
    representation (sorted locations and non-negative weights summing to ``mass``), which is what moments, the
    bounded-Lipschitz distance and the Cauchy transform operate on.
    """

    def __init__(self, mass: float):
        self._mass = _check_mass(mass)

    @property
    def mass(self) -> float:
        return self._mass

    @property
    def is_probability(self) -> bool:
        return abs(self._mass - 1.0) <= 1e-12

    @property
    @abc.abstractmethod
    def kind(self) -> MeasureKind:
        ...

    @abc.abstractmethod
    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Sorted node locations and their (non-negative) weights; grid densities use trapezoid weights."""
        ...

    @abc.abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        ...

    @abc.abstractmethod
    def dilate(self, lam: float) -> 'Measure':
        ...

    def hull(self) -> Tuple[float, float]:
        x, w = self.nodes()
        x = x[w > 0]
        if x.size == 0:
            raise InvalidMeasureError("Measure has no support")
        return float(x[0]), float(x[-1])

    @staticmethod
    def from_dict(obj: Dict[str, Any]) -> 'Measure':
        kind = MeasureKind.from_text(str(obj.get("type", "")))
        mass = float(obj.get("mass", 1.0))
        if kind == MeasureKind.ATOMIC:
            atoms = np.asarray(obj.get("atoms", []), dtype=np.float64).reshape(-1, 2)
            return Atomic(atoms[:, 0], atoms[:, 1], mass=mass)
        elif kind == MeasureKind.GRID:
            return GridDensity(float(obj["x0"]), float(obj["dx"]), obj["values"], mass=mass)
        else:
            return Empirical(obj["points"], mass=mass)

    def _mass_entry(self) -> Dict[str, Any]:
        return {} if self.is_probability else {"mass": self._mass}


class Atomic(Measure):
    """Finitely supported measure ``sum_i w_i delta_{x_i}``.

    Locations are sorted, locations closer than ``1e-12`` are merged (their weights add up) and zero-weight atoms
    are dropped, so two atomic measures are equal iff their canonical arrays are equal.

    Parameters
    ----------
    locations : array-like
        Atom locations, any order.
    weights : array-like
        Non-negative atom weights; they must sum to ``mass`` within ``1e-9`` and are rescaled to sum to it exactly.
    mass : float
        Total mass, 1 for probability measures. A mass of 0 is only valid without atoms (the empty sub-measure).
    """

    def __init__(self, locations: Iterable[float], weights: Iterable[float], mass: float = 1.0):
        super().__init__(mass)
        x = _as_1d(locations, "atom locations")
        w = _as_1d(weights, "atom weights")
        try:
            check_consistent_length(x, w)
        except ValueError as e:
            raise InvalidMeasureError(str(e)) from e
        if np.any(w < 0):
            raise InvalidMeasureError(f"Atom weights must be non-negative, got min weight {w.min()}")
        x, w = self._canonicalize(x, w)
        total = float(w.sum())
        if abs(total - self._mass) > ATOMIC_MASS_TOL:
            raise InvalidMeasureError(f"Atom weights sum to {total}, expected mass {self._mass}")
        if self._mass > 0:
            w = w * (self._mass / total)
        elif x.size > 0:
            raise InvalidMeasureError("A zero-mass atomic measure cannot carry atoms")
        x.flags.writeable = False
        w.flags.writeable = False
        self.locations: np.ndarray = x
        self.weights: np.ndarray = w

    @staticmethod
    def _canonicalize(x: np.ndarray, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        keep = w > 0
        x, w = x[keep], w[keep]
        if x.size == 0:
            return x.copy(), w.copy()
        order = np.argsort(x, kind="stable")
        x, w = x[order], w[order]
        starts = np.concatenate(([True], np.diff(x) > ATOM_MERGE_TOL))
        groups = np.cumsum(starts) - 1
        merged_w = np.bincount(groups, weights=w)
        merged_x = x[starts]
        return merged_x.astype(np.float64), merged_w.astype(np.float64)

    @staticmethod
    def point(x: float) -> 'Atomic':
        return Atomic([x], [1.0])

    @staticmethod
    def empty() -> 'Atomic':
        return Atomic([], [], mass=0.0)

    @property
    def kind(self) -> MeasureKind:
        return MeasureKind.ATOMIC

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.locations, self.weights

    def dilate(self, lam: float) -> 'Atomic':
        return Atomic(self.locations * lam, self.weights, mass=self._mass)

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.kind.value, "atoms": np.column_stack([self.locations, self.weights]).tolist(),
                **self._mass_entry()}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Atomic):
            return NotImplemented
        return (self._mass == other._mass and np.array_equal(self.locations, other.locations)
                and np.array_equal(self.weights, other.weights))

    def __repr__(self) -> str:
        atoms = ", ".join(f"({x:.6g}, {w:.6g})" for x, w in zip(self.locations, self.weights))
        return f"Atomic([{atoms}], mass={self._mass:g})"


class GridDensity(Measure):
    """Density given by its values on a uniform grid, interpolated linearly between nodes and zero outside.

    The values are renormalized at construction so that the trapezoid mass equals ``mass``; the trapezoid mass of
    the input is kept in ``raw_mass`` (Stieltjes inversion and truncated closed forms give slightly off-mass input).

    Parameters
    ----------
    x0 : float
        First grid node.
    dx : float
        Grid step, must be positive.
    values : array-like
        Non-negative density values at the nodes ``x0 + i * dx``.
    mass : float
        Target total mass.
    """

    def __init__(self, x0: float, dx: float, values: Iterable[float], mass: float = 1.0):
        super().__init__(mass)
        if not np.isfinite(dx) or dx <= 0:
            raise InvalidMeasureError(f"Degenerate grid: step dx={dx} must be positive")
        f = _as_1d(values, "density values")
        if f.size < 2:
            raise InvalidMeasureError(f"A grid density needs at least 2 nodes, got {f.size}")
        if np.any(f < 0):
            raise InvalidMeasureError(f"Density values must be non-negative, got min value {f.min()}")
        self.grid = GridSpec(float(x0), float(dx), int(f.size))
        self.raw_mass: float = float(np.dot(self.trapezoid_weights(), f))
        if self.raw_mass <= 0:
            raise InvalidMeasureError("Density has zero trapezoid mass")
        f = f * (self._mass / self.raw_mass)
        f.flags.writeable = False
        self.values: np.ndarray = f

    @staticmethod
    def from_function(fn: Any, grid: GridSpec, mass: float = 1.0) -> 'GridDensity':
        return GridDensity(grid.x0, grid.dx, fn(grid.nodes()), mass=mass)

    @property
    def kind(self) -> MeasureKind:
        return MeasureKind.GRID

    @property
    def x0(self) -> float:
        return self.grid.x0

    @property
    def dx(self) -> float:
        return self.grid.dx

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes()

    def trapezoid_weights(self) -> np.ndarray:
        tw = np.full(self.grid.count, self.grid.dx)
        tw[0] = tw[-1] = 0.5 * self.grid.dx
        return tw

    def density(self, x: Any) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=np.float64), self.x, self.values, left=0.0, right=0.0)

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        w = self.trapezoid_weights() * self.values
        keep = w > 0
        return self.x[keep], w[keep]

    def dilate(self, lam: float) -> 'GridDensity':
        values = self.values / abs(lam)
        if lam > 0:
            return GridDensity(lam * self.x0, lam * self.dx, values, mass=self._mass)
        return GridDensity(lam * self.grid.x1, -lam * self.dx, values[::-1], mass=self._mass)

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.kind.value, "x0": self.x0, "dx": self.dx, "values": self.values.tolist(),
                **self._mass_entry()}

    def __repr__(self) -> str:
        return f"GridDensity(x0={self.x0:g}, dx={self.dx:g}, count={self.grid.count}, mass={self._mass:g})"


class Empirical(Measure):
    """Empirical measure ``(mass / n) * sum_i delta_{p_i}`` of a point sample (e.g. eigenvalues)."""

    def __init__(self, points: Iterable[float], mass: float = 1.0):
        super().__init__(mass)
        p = _as_1d(points, "sample points")
        if p.size == 0:
            raise InvalidMeasureError("Empirical measure needs at least one point")
        self.points: np.ndarray = p

    @property
    def kind(self) -> MeasureKind:
        return MeasureKind.EMPIRICAL

    @property
    def count(self) -> int:
        return int(self.points.size)

    def nodes(self) -> Tuple[np.ndarray, np.ndarray]:
        x, counts = np.unique(self.points, return_counts=True)
        return x, counts * (self._mass / self.points.size)

    def dilate(self, lam: float) -> 'Empirical':
        return Empirical(self.points * lam, mass=self._mass)

    def to_atomic(self) -> Atomic:
        x, w = self.nodes()
        return Atomic(x, w, mass=self._mass)

    def to_dict(self) -> Dict[str, Any]:
        return {"type": self.kind.value, "points": self.points.tolist(), **self._mass_entry()}

    def __repr__(self) -> str:
        return f"Empirical(count={self.count}, mass={self._mass:g})"


def moment(m: Measure, k: int) -> float:
    """k-th moment ``int x^k dm`` (exact sum for atoms and samples, trapezoid rule for grid densities)."""
    if int(k) != k or k < 0 or k > MAX_MOMENT_ORDER:
        raise DomainError(f"Moment order must be an integer in [0, {MAX_MOMENT_ORDER}], got {k}")
    x, w = m.nodes()
    return float(np.dot(w, x ** int(k)))


def d_bl(a: Measure, b: Measure) -> float:
    """Bounded-Lipschitz distance ``sup |int f da - int f db|`` over ``|f| <= 1``, ``Lip(f) <= 1``.

    Both measures are taken to their nodes; the supremum over test functions restricted to the sorted union of
    nodes is a linear program (a function on the nodes extends to the real line without increasing either bound).
    """
    xa, wa = a.nodes()
    xb, wb = b.nodes()
    x = np.union1d(xa, xb)
    if x.size == 0:
        if a.mass == 0 and b.mass == 0:
            return 0.0
        raise InvalidMeasureError("Cannot compute d_bl on an empty node set")
    if x.size > DBL_MAX_NODES:
        raise DomainError(f"d_bl supports at most {DBL_MAX_NODES} nodes, got {x.size}; coarsen the grid")
    c = np.zeros_like(x)
    np.add.at(c, np.searchsorted(x, xa), wa)
    np.add.at(c, np.searchsorted(x, xb), -wb)
    if x.size == 1:
        return float(min(2.0, abs(c[0])))
    if not np.any(c):
        return 0.0

    n = x.size
    rows = np.repeat(np.arange(n - 1), 2)
    cols = np.column_stack([np.arange(n - 1), np.arange(1, n)]).reshape(-1)
    vals = np.tile([-1.0, 1.0], n - 1)
    diff = sparse.csr_matrix((vals, (rows, cols)), shape=(n - 1, n))
    gaps = np.diff(x)
    res = linprog(-c, A_ub=sparse.vstack([diff, -diff]), b_ub=np.concatenate([gaps, gaps]),
                  bounds=(-1.0, 1.0), method="highs")
    if not res.success:
        raise NumericalError(f"d_bl linear program failed: {res.message}")
    return float(min(2.0, max(0.0, -res.fun)))


def d_bl_pair(a: Tuple[Measure, Measure], b: Tuple[Measure, Measure]) -> float:
    """Distance between pairs of sub-measures: the sum of the component distances."""
    return d_bl(a[0], b[0]) + d_bl(a[1], b[1])


def symmetrize(m: Measure) -> Measure:
    """``(m + reflect(m)) / 2`` for a measure supported on ``[0, inf)``."""
    if isinstance(m, Atomic):
        if m.locations.size and m.locations[0] < 0:
            raise DomainError(f"symmetrize needs support in [0, inf), found an atom at {m.locations[0]}")
        return Atomic(np.concatenate([-m.locations, m.locations]),
                      np.concatenate([m.weights, m.weights]) / 2, mass=m.mass)
    elif isinstance(m, Empirical):
        if m.points.min() < 0:
            raise DomainError(f"symmetrize needs support in [0, inf), found a point at {m.points.min()}")
        return Empirical(np.concatenate([m.points, -m.points]), mass=m.mass)
    elif isinstance(m, GridDensity):
        x = m.x
        if np.any(m.values[x < 0] > 0):
            raise DomainError("symmetrize needs support in [0, inf), the density has mass on x < 0")
        offset = m.x0 / m.dx
        if abs(offset - round(offset)) < 1e-9:
            # nodes mirror onto nodes: split every trapezoid weight between x and -x
            j = int(round(offset)) + np.arange(m.grid.count)
            k = int(j[-1])
            w = np.zeros(2 * k + 1)
            half = 0.5 * m.trapezoid_weights() * m.values
            np.add.at(w, k + j[j >= -k], half[j >= -k])
            np.add.at(w, k - j[j >= -k], half[j >= -k])
            tw = np.full(w.size, m.dx)
            tw[0] = tw[-1] = m.dx / 2
            return GridDensity(-k * m.dx, m.dx, w / tw, mass=m.mass)
        k = int(np.ceil(m.grid.x1 / m.dx - 1e-9))
        xs = m.dx * np.arange(-k, k + 1, dtype=np.float64)
        values = 0.5 * (m.density(xs) + m.density(-xs))
        return GridDensity(xs[0], m.dx, values, mass=m.mass)
    raise TypeError(f"Unsupported measure type {type(m).__name__}")


def dilate(m: Measure, lam: float) -> Measure:
    """Push-forward of ``m`` under ``x -> lam * x``."""
    if lam == 0 or not np.isfinite(lam):
        raise DomainError(f"Dilation factor must be finite and non-zero, got {lam}")
    return m.dilate(float(lam))


def collapse(m: Measure) -> Atomic:
    """Atomic measure on the nodes of ``m`` (trapezoid weights for grid densities)."""
    x, w = m.nodes()
    return Atomic(x, w, mass=m.mass)


def atomic(atoms: Sequence[Tuple[float, float]], mass: float = 1.0) -> Atomic:
    arr = np.asarray(atoms, dtype=np.float64).reshape(-1, 2)
    return Atomic(arr[:, 0], arr[:, 1], mass=mass)


def is_symmetric(m: Measure, order: int = 5, tol: float = 1e-8) -> bool:
    return all(abs(moment(m, k)) <= tol for k in range(1, order + 1, 2))
