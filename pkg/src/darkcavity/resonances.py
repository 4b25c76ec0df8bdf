"""Complex-scaled 1D resonance solver.

Poles are eigenvalues E - i Gamma/2 of the rotated Hamiltonian that do not move
when theta changes, lie in the lower half-plane and belong to localized
eigenvectors.  Eigenvectors are c-normalized (sum psi^2 dx = 1, no complex
conjugation), which makes transition matrix elements symmetric bilinear forms.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import (
    DimensionCap,
    DomainError,
    GridMismatch,
    NoConvergence,
    NoEmissionChannel,
    NoStablePoles,
    NoTransitionState,
)
from .grid import Grid, OperatorMatrix, ScalingSpec, kinetic_matrix, potential_matrix, rotated_points

DIMENSION_CAP = 4096
RESIDUAL_TOL = 1e-9
STABILITY_THRESHOLD = 1e-7  # Hartree per 0.05 rad
STABILITY_REFERENCE_STEP = 0.05
WIDTH_FLOOR = 1e-12
PARTICIPATION_FRACTION = 0.5
NODE_DEPTH_FRACTION = 0.2
NODE_NOISE_FLOOR = 1e-4  # lobes below this fraction of max |psi|^2 are ignored
DEGENERACY_GAP = 1e-8
TS_WINDOW_MARGIN = 0.25

CLASSES = ("TS", "DB", "nonphysical", "bound")


def _threads() -> int:
    raw = os.environ.get("DARKCAVITY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise DomainError(f"DARKCAVITY_THREADS must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# assembly and eigensolve


def build_hamiltonian_1d(channel, grid: Grid, scaling: ScalingSpec) -> OperatorMatrix:
    """Kinetic plus adiabatic potential matrix, complex symmetric."""
    return kinetic_matrix(grid, channel.mu, scaling) + potential_matrix(channel, grid, scaling)


def _check_dimension(matrix: OperatorMatrix, cap: int) -> None:
    if matrix.dimension > cap:
        raise DimensionCap(f"matrix dimension {matrix.dimension} exceeds the eigensolver cap {cap}")


def eigensolve(matrix: OperatorMatrix, cap: int = DIMENSION_CAP, residual_tol: float = RESIDUAL_TOL):
    """Full dense eigendecomposition.

    Returns ``(values, vectors)`` with vectors as columns scaled to unit
    Euclidean norm.  The residual check is relative to ``max(1, ||M||_1)`` so
    that it stays meaningful for Hamiltonians with large kinetic entries.
    """
    _check_dimension(matrix, cap)
    a = matrix.entries
    try:
        values, vectors = scipy.linalg.eig(a, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NoConvergence(f"dense eigensolver failed: {exc}", {"dimension": matrix.dimension}) from exc
    scale = max(1.0, float(np.max(np.sum(np.abs(a), axis=0)))) if a.size else 1.0
    norms = np.linalg.norm(vectors, axis=0)
    vectors = vectors / norms
    residuals = np.linalg.norm(a @ vectors - vectors * values, axis=0)
    worst = float(np.max(residuals, initial=0.0))
    if worst > residual_tol * scale:
        raise NoConvergence(
            f"eigenpair residual {worst:.3e} exceeds {residual_tol * scale:.3e}",
            {"dimension": matrix.dimension, "max_residual": worst, "scale": scale},
        )
    return values, vectors


def eigenvalues(matrix: OperatorMatrix, cap: int = DIMENSION_CAP) -> np.ndarray:
    _check_dimension(matrix, cap)
    try:
        return scipy.linalg.eigvals(matrix.entries)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NoConvergence(f"dense eigensolver failed: {exc}", {"dimension": matrix.dimension}) from exc


def c_normalize(psi: np.ndarray, spacing: float) -> np.ndarray:
    """Scale so that sum psi^2 dx = 1 with a deterministic sign.

    The square root has a sign ambiguity; it is fixed by making the entry of
    largest modulus have a positive real part.
    """
    norm2 = np.sum(psi * psi) * spacing
    if abs(norm2) < 1e-14 * np.sum(np.abs(psi) ** 2) * spacing:
        raise NoConvergence("eigenvector is self-orthogonal; cannot c-normalize", {"c_norm": complex(norm2)})
    psi = psi / np.sqrt(norm2)
    k = int(np.argmax(np.abs(psi)))
    if psi[k].real < 0 or (psi[k].real == 0 and psi[k].imag < 0):
        psi = -psi
    return psi


def participation_ratio(psi: np.ndarray) -> float:
    p = np.abs(psi) ** 2
    return float(p.sum() ** 2 / np.sum(p**2))


# ---------------------------------------------------------------------------
# pole containers


@dataclass(frozen=True, eq=False)
class ResonancePole:
    """One complex pole E - i Gamma/2 with its c-normalized eigenvector."""

    energy: float
    width: float
    eigenvector: np.ndarray = field(repr=False)
    theta_used: float
    grid: Grid = field(repr=False)
    node_count: int = 0
    classification: str | None = None
    drift: float = 0.0
    degenerate: bool = False

    @property
    def complex_energy(self) -> complex:
        return complex(self.energy, -0.5 * self.width)


@dataclass(frozen=True, eq=False)
class PoleSet:
    """Poles sorted by ascending width, with the inputs that produced them."""

    poles: tuple
    channel: object = field(repr=False)
    grid: Grid
    thetas: tuple

    def __post_init__(self):
        object.__setattr__(self, "poles", tuple(sorted(self.poles, key=lambda p: (p.width, -p.energy))))

    def __len__(self):
        return len(self.poles)

    def __iter__(self):
        return iter(self.poles)

    def __getitem__(self, i):
        return self.poles[i]

    @property
    def theta_center(self) -> float:
        return self.poles[0].theta_used if self.poles else float(np.median(self.thetas))

    def by_class(self, label: str) -> list:
        return [p for p in self.poles if p.classification == label]

    @property
    def ts(self) -> ResonancePole | None:
        ts = self.by_class("TS")
        return ts[0] if ts else None

    def db_by_nodes(self, nodes: int) -> ResonancePole | None:
        for p in self.by_class("DB"):
            if p.node_count == nodes:
                return p
        return None

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("index,E_hartree,Gamma_hartree,nodes,class\n")
        for i, p in enumerate(self.poles):
            buf.write(f"{i},{p.energy:.12e},{p.width:.12e},{p.node_count},{p.classification or 'unclassified'}\n")
        return buf.getvalue()


# ---------------------------------------------------------------------------
# node counting


def _extrema(p: np.ndarray):
    """Indices of alternating local maxima/minima of a sampled curve."""
    d = np.diff(p)
    nz = np.flatnonzero(d)
    if nz.size == 0:
        return [], []
    signs = np.sign(d[nz])
    turns = np.flatnonzero(np.diff(signs))
    maxima, minima = [], []
    for t in turns:
        idx = nz[t + 1]  # first index after the turn
        if signs[t] > 0:
            maxima.append(idx)
        else:
            minima.append(idx)
    return maxima, minima


def count_nodes(pole, grid: Grid | None = None, depth_fraction: float = NODE_DEPTH_FRACTION,
                noise_floor: float = NODE_NOISE_FLOOR) -> int:
    """Count interior minima of |psi|^2 deep enough to be nodes.

    A minimum counts when it lies below ``depth_fraction`` times the geometric
    mean of the maxima on either side.  Shallow minima are merged into their
    neighbours first, so a ripple does not split a lobe.  Lobes whose height is
    below ``noise_floor`` times the global maximum are treated as noise.
    """
    psi = pole.eigenvector if hasattr(pole, "eigenvector") else np.asarray(pole)
    if grid is not None and len(psi) != grid.n_points:
        raise GridMismatch(f"eigenvector has {len(psi)} samples, grid has {grid.n_points}")
    p = np.abs(psi) ** 2
    top = float(p.max())
    if top == 0:
        return 0
    maxima, minima = _extrema(p)
    # keep only minima with a maximum on both sides, as alternating sequence
    seq = sorted([(i, "max") for i in maxima] + [(i, "min") for i in minima])
    while seq and seq[0][1] == "min":
        seq.pop(0)
    while seq and seq[-1][1] == "min":
        seq.pop()
    peaks = [p[i] for i, kind in seq if kind == "max"]
    dips = [p[i] for i, kind in seq if kind == "min"]
    # peaks[k], dips[k], peaks[k+1]
    changed = True
    while changed and dips:
        changed = False
        scores = []
        for k, dip in enumerate(dips):
            lo, hi = peaks[k], peaks[k + 1]
            ok = dip < depth_fraction * math.sqrt(lo * hi) and min(lo, hi) > noise_floor * top
            scores.append((ok, dip / max(math.sqrt(lo * hi), 1e-300), k))
        shallow = [s for s in scores if not s[0]]
        if shallow:
            _, _, k = max(shallow, key=lambda s: s[1])
            merged = max(peaks[k], peaks[k + 1])
            peaks[k:k + 2] = [merged]
            del dips[k]
            changed = True
    return len(dips)


# ---------------------------------------------------------------------------
# theta-trajectory filter


def theta_window(theta_center: float, theta_span: float, n_theta: int) -> tuple:
    if int(n_theta) != n_theta or n_theta < 3:
        raise DomainError(f"n_theta must be an integer >= 3, got {n_theta}")
    if theta_span <= 0:
        raise DomainError(f"theta_span must be positive, got {theta_span}")
    thetas = np.linspace(theta_center - theta_span / 2, theta_center + theta_span / 2, int(n_theta))
    for t in thetas:
        ScalingSpec(float(t))  # validates the range
    return tuple(float(t) for t in thetas)


def _max_step_drift(values_by_theta, center_index, lam):
    """Follow one eigenvalue outward from the center theta by nearest neighbour."""
    worst = 0.0
    for direction in (-1, 1):
        cur = lam
        k = center_index + direction
        while 0 <= k < len(values_by_theta):
            vals = values_by_theta[k]
            nxt = vals[np.argmin(np.abs(vals - cur))]
            worst = max(worst, abs(nxt - cur))
            cur = nxt
            k += direction
    return worst


def find_resonances(
    channel,
    grid: Grid,
    theta_center: float = 0.75,
    theta_span: float = 0.1,
    n_theta: int = 3,
    *,
    stability_threshold: float = STABILITY_THRESHOLD,
    width_floor: float = WIDTH_FLOOR,
    participation_fraction: float = PARTICIPATION_FRACTION,
    cap: int = DIMENSION_CAP,
    hamiltonian=None,
    threads: int | None = None,
) -> PoleSet:
    """Solve at ``n_theta`` angles and keep the eigenvalues that stay put.

    ``hamiltonian`` overrides the matrix builder (signature
    ``(grid, scaling) -> OperatorMatrix``); the 2D oracle uses it.
    Raises NoStablePoles when nothing survives the filter.
    """
    thetas = theta_window(theta_center, theta_span, n_theta)
    center = int(np.argmin(np.abs(np.array(thetas) - theta_center)))
    build = hamiltonian or (lambda g, s: build_hamiltonian_1d(channel, g, s))
    n_workers = threads if threads is not None else _threads()

    def side(theta):
        return eigenvalues(build(grid, ScalingSpec(theta)), cap)

    others = [t for i, t in enumerate(thetas) if i != center]
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            side_vals = list(pool.map(side, others))
    else:
        side_vals = [side(t) for t in others]
    h_center = build(grid, ScalingSpec(thetas[center]))
    values, vectors = eigensolve(h_center, cap)
    by_theta = side_vals[:center] + [values] + side_vals[center:]

    step = thetas[1] - thetas[0]
    threshold = stability_threshold * step / STABILITY_REFERENCE_STEP
    n_basis = vectors.shape[0]
    spacing = grid.spacing  # product bases carry an orthonormal Y factor

    h_norm = float(np.max(np.sum(np.abs(h_center.entries), axis=0)))
    poles = []
    for j, lam in enumerate(values):
        # widths below the eigenvalue's own rounding noise count as zero
        self_overlap = abs(np.sum(vectors[:, j] ** 2))
        kappa = 1.0 / self_overlap if self_overlap > 0 else np.inf
        noise = max(width_floor, 10.0 * kappa * np.finfo(float).eps * h_norm)
        if lam.imag > noise / 2:
            continue
        drift = _max_step_drift(by_theta, center, lam)
        if drift >= threshold:
            continue
        psi = vectors[:, j]
        if participation_ratio(psi) >= participation_fraction * n_basis:
            continue
        psi = c_normalize(psi, spacing)
        psi.setflags(write=False)
        width = -2.0 * lam.imag
        others_gap = np.abs(np.delete(values, j) - lam)
        pole = ResonancePole(
            energy=float(lam.real),
            width=0.0 if width < noise else width,
            eigenvector=psi,
            theta_used=thetas[center],
            grid=grid,
            classification="bound" if width < noise else None,
            drift=float(drift),
            degenerate=bool(others_gap.size and others_gap.min() < DEGENERACY_GAP),
        )
        if n_basis == grid.n_points:
            pole = replace(pole, node_count=count_nodes(pole))
        poles.append(pole)
    if not poles:
        raise NoStablePoles(
            f"no eigenvalue passed the theta-stability filter over theta in [{thetas[0]:.3f}, {thetas[-1]:.3f}]"
        )
    return PoleSet(tuple(poles), channel, grid, thetas)


# ---------------------------------------------------------------------------
# classification


def threshold_energy(channel, grid: Grid) -> float:
    """Reactant-side asymptote of V_ad, taken at the left grid edge."""
    return float(np.real(channel(np.array([grid.x_min])))[0])


def barrier_top(channel, grid: Grid, oversample: int = 8) -> float:
    x = np.linspace(grid.x_min, grid.x_max, (grid.n_points - 1) * oversample + 1)
    return float(np.max(np.real(channel(x))))


def classify_poles(
    poles: PoleSet,
    channel=None,
    *,
    width_floor: float = WIDTH_FLOOR,
    match_fraction: float = 0.1,
    match_floor: float = 1e-5,
    window_margin: float = TS_WINDOW_MARGIN,
) -> PoleSet:
    """Tag each pole TS, DB, nonphysical or bound.

    Adiabatic poles are compared with the poles of the bare static-barrier
    channel (perpendicular frequency switched off), each measured from its
    own reactant threshold.  A close match marks the pole as a shape
    resonance of the static barrier, i.e. nonphysical.  Physical poles must
    lie above the adiabatic threshold; the narrowest one inside the barrier
    window [threshold, top + margin * (top - threshold)] is the TS.

    A set holding only bound states is returned as is.  Raises
    NoEmissionChannel when no unbound pole is physical and NoTransitionState
    when physical poles exist but none sits in the window.
    """
    channel = channel if channel is not None else poles.channel
    grid = poles.grid
    thr = threshold_energy(channel, grid)
    bare = channel.bare()
    thr_bare = threshold_energy(bare, grid)
    center = poles.theta_center
    span = poles.thetas[-1] - poles.thetas[0]
    try:
        bare_set = find_resonances(bare, grid, center, span, len(poles.thetas), width_floor=width_floor)
        bare_e = np.array([p.complex_energy - thr_bare for p in bare_set])
    except NoStablePoles:
        bare_e = np.array([], dtype=complex)

    top = barrier_top(channel, grid)
    window = (thr, top + window_margin * (top - thr))
    labelled, physical = [], []
    for p in poles:
        if p.width < width_floor:
            labelled.append(replace(p, classification="bound"))
            continue
        rel = p.complex_energy - thr
        radius = max(match_fraction * abs(rel), match_floor)
        matched = bare_e.size and np.min(np.abs(bare_e - rel)) < radius
        if matched or p.energy <= thr:
            labelled.append(replace(p, classification="nonphysical"))
        else:
            physical.append(p)
    n_bound = sum(p.classification == "bound" for p in labelled)
    if not physical and n_bound == len(labelled):
        return PoleSet(tuple(labelled), channel, grid, poles.thetas)
    if not physical and n_bound < len(labelled):
        raise NoEmissionChannel(
            "no physical pole: every unbound pole is a static-barrier pole or lies below "
            "threshold, so there is no dynamical-barrier state for the cavity to couple"
        )
    in_window = [p for p in physical if window[0] < p.energy <= window[1]]
    if not in_window:
        raise NoTransitionState(
            f"no physical pole inside the barrier window [{window[0]:.6g}, {window[1]:.6g}] Hartree"
        )
    ts = min(in_window, key=lambda p: p.width)
    for p in physical:
        labelled.append(replace(p, classification="TS" if p is ts else "DB"))
    return PoleSet(tuple(labelled), channel, grid, poles.thetas)


# ---------------------------------------------------------------------------
# transition dipole


def transition_dipole(ts: ResonancePole, db: ResonancePole, channel, grid: Grid) -> complex:
    """c-product sum psi_a(x) V_ad'(x e^{i theta}) psi_b(x) dx, no conjugation."""
    for p in (ts, db):
        if len(p.eigenvector) != grid.n_points or (p.grid is not None and p.grid != grid):
            raise GridMismatch("both poles must be sampled on the supplied grid")
    if ts.theta_used != db.theta_used:
        raise GridMismatch(f"poles come from different angles ({ts.theta_used} vs {db.theta_used})")
    z = rotated_points(grid, ScalingSpec(ts.theta_used))
    grad = np.asarray(channel.derivative(z), dtype=complex)
    # multiply in a canonical order: with fused multiply-add, a*b and b*a can
    # differ in the last bit, which would break exact symmetry
    first, second = sorted((ts, db), key=lambda p: (p.energy, p.width))
    return complex(np.sum(grad * (first.eigenvector * second.eigenvector)) * grid.spacing)


def c_overlap(a: ResonancePole, b: ResonancePole) -> complex:
    return complex(np.sum(a.eigenvector * b.eigenvector) * a.grid.spacing)
