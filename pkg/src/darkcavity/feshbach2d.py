"""Two-dimensional Feshbach oracle for the adiabatic reduction.

The perpendicular coordinate is mass-weighted and expanded in harmonic
oscillator functions at a fixed reference frequency.  Because the surface is
quadratic in Y, only <m|Y^2|m'> enters, and those elements are analytic.
Complex scaling acts on X alone.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionCap, DomainError
from .grid import Grid, OperatorMatrix, ScalingSpec, kinetic_matrix, rotated_points
from .potentials import RphSurface, eval_frequency
from .resonances import PoleSet, find_resonances

DIMENSION_CAP_2D = 20000


@dataclass(frozen=True)
class ProductBasisSpec:
    """Sinc-DVR grid in X times ``n_y_basis`` oscillator functions in Y."""

    x_grid: Grid
    n_y_basis: int
    omega_ref: float

    def __post_init__(self):
        if int(self.n_y_basis) != self.n_y_basis or self.n_y_basis < 2:
            raise DomainError(f"n_y_basis must be an integer >= 2, got {self.n_y_basis}")
        if not (math.isfinite(self.omega_ref) and self.omega_ref > 0):
            raise DomainError(f"omega_ref must be positive, got {self.omega_ref}")

    @property
    def dimension(self) -> int:
        return self.x_grid.n_points * self.n_y_basis

    @classmethod
    def at_barrier_top(cls, surface: RphSurface, x_grid: Grid, n_y_basis: int) -> "ProductBasisSpec":
        """Reference frequency taken where the adiabatic ground channel peaks."""
        channel = surface.channel(0)
        x = np.linspace(x_grid.x_min, x_grid.x_max, (x_grid.n_points - 1) * 8 + 1)
        x_top = x[int(np.argmax(np.real(channel(x))))]
        return cls(x_grid, n_y_basis, float(np.real(eval_frequency(surface.frequency, x_top))))


def y_squared_matrix(n_basis: int, omega_ref: float) -> np.ndarray:
    """<m|Y^2|m'> for unit-mass oscillator functions of frequency omega_ref."""
    m = np.arange(n_basis, dtype=float)
    out = np.diag((m + 0.5) / omega_ref)
    off = np.sqrt((m[:-2] + 1.0) * (m[:-2] + 2.0)) / (2.0 * omega_ref)
    idx = np.arange(n_basis - 2)
    out[idx, idx + 2] = off
    out[idx + 2, idx] = off
    return out


def build_hamiltonian_2d(
    surface: RphSurface, basis: ProductBasisSpec, scaling: ScalingSpec, cap: int = DIMENSION_CAP_2D
) -> OperatorMatrix:
    """T_X(theta) + V_SB + H_Y(omega_ref) + (Omega^2 - omega_ref^2)/2 * Y^2.

    Index ordering is ``i_x * n_y_basis + m``.
    """
    if basis.dimension > cap:
        raise DimensionCap(f"2D dimension {basis.dimension} exceeds the cap {cap}")
    grid, n_y, w0 = basis.x_grid, basis.n_y_basis, basis.omega_ref
    z = rotated_points(grid, scaling)
    t_x = kinetic_matrix(grid, surface.mu, scaling).entries
    v_sb = np.asarray(surface.static_barrier(z), dtype=complex) * np.ones(grid.n_points)
    delta = 0.5 * (np.asarray(eval_frequency(surface.frequency, z), dtype=complex) ** 2 - w0**2)
    delta = delta * np.ones(grid.n_points)

    h = np.kron(t_x, np.eye(n_y))
    h_y = np.diag(w0 * (np.arange(n_y) + 0.5))
    y2 = y_squared_matrix(n_y, w0)
    # block-diagonal part: one n_y x n_y block per grid point
    for i in range(grid.n_points):
        s = slice(i * n_y, (i + 1) * n_y)
        h[s, s] += v_sb[i] * np.eye(n_y) + h_y + delta[i] * y2
    return OperatorMatrix(h)


def solve_2d_resonances(
    surface: RphSurface,
    basis: ProductBasisSpec,
    theta_center: float = 0.75,
    theta_span: float = 0.1,
    n_theta: int = 3,
    *,
    cap: int = DIMENSION_CAP_2D,
    **filters,
) -> PoleSet:
    """Theta-stable poles of the 2D Hamiltonian (same filter as in 1D)."""
    if basis.dimension > cap:
        raise DimensionCap(f"2D dimension {basis.dimension} exceeds the cap {cap}")
    return find_resonances(
        surface.channel(0),
        basis.x_grid,
        theta_center,
        theta_span,
        n_theta,
        cap=cap,
        hamiltonian=lambda g, s: build_hamiltonian_2d(surface, basis, s, cap),
        **filters,
    )


@dataclass(frozen=True)
class MatchedPair:
    e_1d: float
    gamma_1d: float
    e_2d: float
    gamma_2d: float

    @property
    def rel_energy(self) -> float:
        return abs(self.e_2d - self.e_1d) / max(abs(self.e_1d), np.finfo(float).tiny)

    @property
    def rel_width(self) -> float:
        return abs(self.gamma_2d - self.gamma_1d) / max(abs(self.gamma_1d), np.finfo(float).tiny)

    @property
    def abs_error(self) -> float:
        return abs(complex(self.e_2d, -self.gamma_2d / 2) - complex(self.e_1d, -self.gamma_1d / 2))


@dataclass(frozen=True)
class AgreementReport:
    pairs: tuple
    unmatched_1d: tuple
    unmatched_2d: tuple

    def _stat(self, attr, fn):
        vals = [getattr(p, attr) for p in self.pairs]
        return float(fn(vals)) if vals else float("nan")

    @property
    def max_rel_energy(self) -> float:
        return self._stat("rel_energy", np.max)

    @property
    def mean_rel_energy(self) -> float:
        return self._stat("rel_energy", np.mean)

    @property
    def max_rel_width(self) -> float:
        return self._stat("rel_width", np.max)

    @property
    def mean_rel_width(self) -> float:
        return self._stat("rel_width", np.mean)

    @property
    def max_abs_error(self) -> float:
        return self._stat("abs_error", np.max)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("pair,E1d,Gamma1d,E2d,Gamma2d,relE,relGamma\n")
        for i, p in enumerate(self.pairs):
            buf.write(
                f"{i},{p.e_1d:.12e},{p.gamma_1d:.12e},{p.e_2d:.12e},{p.gamma_2d:.12e},"
                f"{p.rel_energy:.6e},{p.rel_width:.6e}\n"
            )
        buf.write(
            f"# max_relE={self.max_rel_energy:.6e} mean_relE={self.mean_rel_energy:.6e} "
            f"max_relGamma={self.max_rel_width:.6e} mean_relGamma={self.mean_rel_width:.6e} "
            f"max_abs={self.max_abs_error:.6e} unmatched_1d={len(self.unmatched_1d)} "
            f"unmatched_2d={len(self.unmatched_2d)}\n"
        )
        return buf.getvalue()


def compare_adiabatic(poles_2d, poles_1d, max_distance: float | None = None) -> AgreementReport:
    """Greedy nearest-neighbour matching in the complex energy plane.

    1D poles are visited in ascending width; each takes the closest unused 2D
    pole.  A 2D spectrum also holds perpendicularly excited poles, so leftover
    2D poles are expected and listed rather than treated as errors.  Pairs
    farther apart than ``max_distance`` (Hartree) stay unmatched.
    """
    list_1d = sorted(poles_1d, key=lambda p: (p.width, -p.energy))
    free = list(poles_2d)
    if not list_1d or not free:
        raise DomainError("both pole sets must be non-empty")
    pairs, lonely = [], []
    for p in list_1d:
        if not free:
            lonely.append(p)
            continue
        dist = [abs(q.complex_energy - p.complex_energy) for q in free]
        k = int(np.argmin(dist))
        if max_distance is not None and dist[k] > max_distance:
            lonely.append(p)
            continue
        q = free.pop(k)
        pairs.append(MatchedPair(p.energy, p.width, q.energy, q.width))
    return AgreementReport(tuple(pairs), tuple(lonely), tuple(free))
