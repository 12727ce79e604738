from dataclasses import dataclass
from typing import Any, Dict

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``x0, x0 + dx, ..., x0 + (count - 1) * dx``.

    Parameters
    ----------
    x0 : float
        First node.
    dx : float
        Grid step, must be positive.
    count : int
        Number of nodes, at least 2.
    """
    x0: float
    dx: float
    count: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.x0) or not np.isfinite(self.dx):
            raise ValueError(f"Grid origin and step must be finite, got x0={self.x0}, dx={self.dx}")
        if self.dx <= 0:
            raise ValueError(f"Grid step must be positive, got dx={self.dx}")
        if self.count < 2:
            raise ValueError(f"A grid needs at least 2 nodes, got count={self.count}")

    @property
    def x1(self) -> float:
        return self.x0 + (self.count - 1) * self.dx

    def nodes(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.count, dtype=np.float64)

    def contains(self, lo: float, hi: float) -> bool:
        return self.x0 <= lo and hi <= self.x1

    @staticmethod
    def from_bounds(x0: float, dx: float, x1: float) -> 'GridSpec':
        """Grid from ``x0`` to ``x1`` (inclusive within ``dx/2``)."""
        if dx <= 0:
            raise ValueError(f"Grid step must be positive, got dx={dx}")
        if x1 < x0:
            raise ValueError(f"Grid end {x1} lies before grid start {x0}")
        count = int(np.floor((x1 - x0) / dx + 0.5)) + 1
        return GridSpec(x0, dx, count)

    @staticmethod
    def from_flag(spec: str) -> 'GridSpec':
        """Parses the command line syntax ``x0:dx:x1``.

        >>> GridSpec.from_flag("-3:0.5:3").count
        13
        """
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"Grid specification '{spec}' does not match the format x0:dx:x1")
        try:
            x0, dx, x1 = (float(p) for p in parts)
        except ValueError as e:
            raise ValueError(f"Grid specification '{spec}' contains a non-numeric field") from e
        return GridSpec.from_bounds(x0, dx, x1)

    def to_dict(self) -> Dict[str, Any]:
        return {"x0": self.x0, "dx": self.dx, "count": self.count}
