import math
from typing import Optional

import numpy as np

from booleanentropy.laws import LawSpec, make_law
from booleanentropy.measures import Atomic, GridDensity


def rademacher() -> Atomic:
    return Atomic([-1.0, 1.0], [0.5, 0.5])


def mu_half() -> Atomic:
    return Atomic([-math.sqrt(2), math.sqrt(2)], [0.5, 0.5])


def semicircle() -> GridDensity:
    return make_law(LawSpec.semicircle())  # type: ignore[return-value]


def p_alpha(alpha: float) -> GridDensity:
    return make_law(LawSpec.p_alpha(alpha))  # type: ignore[return-value]


def uniform(lo: float, hi: float, dx: float = 1e-3) -> GridDensity:
    count = int(round((hi - lo) / dx)) + 1
    return GridDensity(lo, dx, np.full(count, 1.0 / (hi - lo)))


def centered_two_atom(p: float) -> Atomic:
    """``p δ_a + (1 - p) δ_b`` with mean 0 and variance 1."""
    a = math.sqrt((1 - p) / p)
    b = -math.sqrt(p / (1 - p))
    return Atomic([a, b], [p, 1 - p])


def random_centered_atomic(rng: np.random.Generator, atoms: int, unit_variance: bool = False,
                           spread: Optional[float] = 2.0) -> Atomic:
    x = rng.uniform(-spread, spread, atoms)
    w = rng.dirichlet(np.ones(atoms))
    x = x - np.dot(w, x)
    if unit_variance:
        x = x / math.sqrt(np.dot(w, x * x))
    return Atomic(x, w)
