"""Uniform grids and complex-scaled operator matrices.

The kinetic operator uses the sinc-DVR (Colbert-Miller) second-derivative
stencil on an evenly spaced grid.  Uniform complex scaling x -> x exp(i theta)
multiplies the kinetic matrix by exp(-2 i theta) and moves the potential
evaluation onto the rotated ray.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .errors import DomainError, NonContinuableModel

MIN_POINTS = 16


@dataclass(frozen=True)
class Grid:
    """Evenly spaced 1D grid in Bohr."""

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise DomainError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise DomainError(f"x_max ({self.x_max}) must exceed x_min ({self.x_min})")
        if int(self.n_points) != self.n_points or self.n_points < MIN_POINTS:
            raise DomainError(f"n_points must be an integer >= {MIN_POINTS}, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        # x_k = x_min + k*dx exactly, not linspace's symmetric rounding
        return self.x_min + np.arange(self.n_points) * self.spacing

    def refined(self, factor: int = 2) -> "Grid":
        """Same interval with the spacing divided by ``factor``."""
        return Grid(self.x_min, self.x_max, (self.n_points - 1) * factor + 1)


@dataclass(frozen=True)
class ScalingSpec:
    """Uniform complex-scaling angle (radians)."""

    theta: float = 0.75
    kind: str = "uniform"

    def __post_init__(self):
        if self.kind != "uniform":
            raise DomainError(f"only uniform scaling is supported, got {self.kind!r}")
        # theta = 0 is allowed as the unscaled reference
        if not (0.0 <= self.theta < math.pi / 2):
            raise DomainError(f"theta must lie in [0, pi/2), got {self.theta}")

    @property
    def rotation(self) -> complex:
        return complex(math.cos(self.theta), math.sin(self.theta)) if self.theta else 1.0 + 0j


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex matrix in Hartree; symmetric (not Hermitian) when flagged."""

    entries: np.ndarray = field(repr=False)
    symmetric: bool = True

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DomainError(f"operator matrix must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T))) if self.dimension else 0.0

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.entries + other.entries, self.symmetric and other.symmetric)


def make_grid(x_min: float, x_max: float, n_points: int) -> Grid:
    return Grid(float(x_min), float(x_max), int(n_points))


def sinc_dvr_second_derivative(n_points: int, spacing: float) -> np.ndarray:
    """Colbert-Miller sinc-DVR matrix of d^2/dx^2 (real symmetric Toeplitz)."""
    k = np.arange(n_points, dtype=float)
    col = np.empty(n_points)
    col[0] = -math.pi**2 / 3.0
    sign = np.where(k[1:] % 2 == 0, 1.0, -1.0)
    col[1:] = -2.0 * sign / k[1:] ** 2
    return toeplitz(col / spacing**2)


def kinetic_matrix(grid: Grid, mass: float, scaling: ScalingSpec) -> OperatorMatrix:
    """-(1/2m) exp(-2i theta) D2 on the grid."""
    if mass <= 0:
        raise DomainError(f"mass must be positive, got {mass}")
    d2 = sinc_dvr_second_derivative(grid.n_points, grid.spacing)
    factor = -1.0 / (2.0 * mass)
    if scaling.theta:
        factor = factor * np.exp(-2j * scaling.theta)
    return OperatorMatrix(factor * d2)


def rotated_points(grid: Grid, scaling: ScalingSpec) -> np.ndarray:
    x = grid.points
    if not scaling.theta:
        return x.astype(complex)
    return x * scaling.rotation


def potential_matrix(model, grid: Grid, scaling: ScalingSpec) -> OperatorMatrix:
    """Diagonal matrix of model(x_k exp(i theta)).

    ``model`` is any callable that accepts complex arrays; objects that expose
    ``continuable = False`` (raw tables) are rejected.
    """
    if not getattr(model, "continuable", True) or not callable(model):
        raise NonContinuableModel(
            f"{type(model).__name__} has no closed form; fit it before complex scaling"
        )
    values = np.asarray(model(rotated_points(grid, scaling)), dtype=complex)
    if values.shape != (grid.n_points,):
        values = np.broadcast_to(values, (grid.n_points,)).astype(complex)
    return OperatorMatrix(np.diag(values))
