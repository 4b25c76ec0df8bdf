"""Dark-cavity polariton model.

One cavity mode couples the transition-state pole to a dynamical-barrier pole
through the 2x2 complex-symmetric matrix

    [[E_TS - i G_TS/2,   alpha d               ],
     [alpha d,           E_DB + w - i G_DB/2   ]]

with alpha = epsilon / w^2.  The mixed decay rate weights each branch width by
the TS population |A^TS|^2 of its c-normalized eigenvector.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .errors import (
    ClosedFormMismatch,
    DegenerateWidths,
    DomainError,
    NoEmissionChannel,
    OffResonance,
)

SPEED_OF_LIGHT_AU = 1.0 / constants.fine_structure
HARTREE_IN_EV = constants.physical_constants["Hartree energy in eV"][0]
DETUNING_TOL = 1e-3
CLOSED_FORM_ATOL = 1e-12
MIRROR_CONVENTIONS = ("half_wavelength", "four_pi")


def mev_to_hartree(mev: float) -> float:
    return mev * 1e-3 / HARTREE_IN_EV


def hartree_to_mev(e: float) -> float:
    return e * HARTREE_IN_EV * 1e3


# ---------------------------------------------------------------------------
# cavity geometry


def cavity_frequency(ts, db) -> float:
    """Re E_TS - Re E_DB; the cavity photon carries exactly this energy."""
    omega = ts.energy - db.energy
    if not omega > 0:
        raise NoEmissionChannel(
            f"DB pole at {db.energy:.6g} Hartree is not below the TS pole at {ts.energy:.6g} Hartree; "
            "a cavity photon cannot bridge them and the rate is unchanged"
        )
    return omega


def mirror_distance(omega_cav: float, convention: str = "half_wavelength") -> float:
    """Mirror spacing supporting one mode at ``omega_cav`` (Bohr).

    ``half_wavelength`` gives L = pi c / omega; ``four_pi`` gives the
    alternative L = 4 pi c / omega.
    """
    if not omega_cav > 0:
        raise DomainError(f"omega_cav must be positive, got {omega_cav}")
    if convention == "half_wavelength":
        return math.pi * SPEED_OF_LIGHT_AU / omega_cav
    if convention == "four_pi":
        return 4.0 * math.pi * SPEED_OF_LIGHT_AU / omega_cav
    raise DomainError(f"unknown mirror convention {convention!r}; choose from {MIRROR_CONVENTIONS}")


def epsilon_from_geometry(omega_cav: float, length: float, area: float, n_molecules: int = 1) -> float:
    """Vacuum field amplitude sqrt(2 pi omega / (L A)) times sqrt(N)."""
    if not omega_cav > 0:
        raise DomainError(f"omega_cav must be positive, got {omega_cav}")
    if not (length > 0 and area > 0):
        raise DomainError("mirror distance and area must be positive")
    if int(n_molecules) != n_molecules or n_molecules < 1:
        raise DomainError(f"n_molecules must be a positive integer, got {n_molecules}")
    if math.isinf(length) or math.isinf(area):
        return 0.0
    return math.sqrt(2.0 * math.pi * omega_cav / (length * area)) * math.sqrt(n_molecules)


# ---------------------------------------------------------------------------
# setup and state


@dataclass(frozen=True)
class PolaritonSetup:
    """Bare poles, cavity frequency, field strength and transition dipole."""

    e_ts: float
    gamma_ts: float
    e_db: float
    gamma_db: float
    omega_cav: float
    epsilon_cav: float = 0.0
    dipole: complex = 1.0
    detuning_tol: float = DETUNING_TOL
    mirror_distance: float | None = None
    mirror_area: float | None = None
    n_molecules: int = 1

    def __post_init__(self):
        if not self.omega_cav > 0:
            raise DomainError(f"omega_cav must be positive, got {self.omega_cav}")
        if self.epsilon_cav < 0 or not math.isfinite(self.epsilon_cav):
            raise DomainError(f"epsilon_cav must be finite and non-negative, got {self.epsilon_cav}")
        if self.gamma_ts < 0 or self.gamma_db < 0:
            raise DomainError("pole widths must be non-negative")
        object.__setattr__(self, "dipole", complex(self.dipole))

    @classmethod
    def from_poles(cls, ts, db, dipole, epsilon_cav=0.0, omega_cav=None, **kw) -> "PolaritonSetup":
        omega = cavity_frequency(ts, db) if omega_cav is None else omega_cav
        return cls(ts.energy, ts.width, db.energy, db.width, omega, epsilon_cav, dipole, **kw)

    @property
    def alpha_cav(self) -> float:
        return self.epsilon_cav / self.omega_cav**2

    @property
    def coupling(self) -> complex:
        return self.alpha_cav * self.dipole

    @property
    def detuning(self) -> float:
        return self.e_db + self.omega_cav - self.e_ts

    def with_epsilon(self, epsilon: float) -> "PolaritonSetup":
        return PolaritonSetup(
            self.e_ts, self.gamma_ts, self.e_db, self.gamma_db, self.omega_cav, epsilon, self.dipole,
            self.detuning_tol, self.mirror_distance, self.mirror_area, self.n_molecules,
        )


@dataclass(frozen=True)
class PolaritonState:
    """Eigenvalues W+/W-, c-normalized eigenvectors and the mixed rate."""

    w_plus: complex
    w_minus: complex
    a_plus: tuple
    a_minus: tuple
    weight_plus: float
    weight_minus: float
    e_polariton: float
    gamma_polariton: float
    closed_form_error: float = 0.0
    condition: float = 1.0

    @property
    def gamma_plus(self) -> float:
        return -2.0 * self.w_plus.imag

    @property
    def gamma_minus(self) -> float:
        return -2.0 * self.w_minus.imag


def polariton_matrix(setup: PolaritonSetup) -> np.ndarray:
    if abs(setup.detuning) > setup.detuning_tol * setup.omega_cav:
        raise OffResonance(
            f"|E_DB + omega - E_TS| = {abs(setup.detuning):.3e} exceeds "
            f"{setup.detuning_tol:g} * omega_cav = {setup.detuning_tol * setup.omega_cav:.3e}"
        )
    g = setup.coupling
    return np.array(
        [
            [complex(setup.e_ts, -0.5 * setup.gamma_ts), g],
            [g, complex(setup.e_db + setup.omega_cav, -0.5 * setup.gamma_db)],
        ]
    )


def closed_form_eigenvalues(a: complex, b: complex, g: complex) -> tuple[complex, complex]:
    """Roots of [[a, g], [g, b]]: (a+b)/2 +- sqrt(((a-b)/2)^2 + g^2)."""
    mean = 0.5 * (a + b)
    root = np.sqrt(complex(0.25 * (a - b) ** 2 + g * g))
    return complex(mean + root), complex(mean - root)


def exceptional_point_alpha(gamma_ts: float, gamma_db: float, dipole: complex) -> float:
    """Coupling alpha at which the discriminant vanishes for real ``dipole``."""
    d = complex(dipole)
    if abs(d.imag) > 1e-14 * max(abs(d), 1e-300):
        raise DomainError("the exceptional-point formula needs a real transition dipole")
    if d == 0:
        raise DomainError("zero dipole never reaches an exceptional point")
    return abs(gamma_ts - gamma_db) / (4.0 * abs(d.real))


def _c_normalize(v: np.ndarray) -> np.ndarray:
    s = complex(v @ v)
    if abs(s) < 1e-13 * float(np.vdot(v, v).real):
        return np.full(2, np.nan + 0j)
    v = v / np.sqrt(s)
    k = int(np.argmax(np.abs(v)))
    return -v if v[k].real < 0 else v


def polariton_eigs(setup: PolaritonSetup, atol: float = CLOSED_FORM_ATOL) -> PolaritonState:
    """Closed-form W+- checked against a numeric 2x2 eigendecomposition.

    The agreement tolerance is max(atol max(1, ||M||), 100 kappa eps ||M||),
    where kappa is the eigenvalue condition number of the numeric solve; it
    reduces to ``atol`` for matrices of unit scale away from the exceptional
    point and widens only where the eigenvalues are genuinely ill-conditioned.
    """
    m = polariton_matrix(setup)
    w_plus, w_minus = closed_form_eigenvalues(m[0, 0], m[1, 1], m[0, 1])
    if m[0, 1] == 0:
        # uncoupled: branches are the bare poles with unit vectors
        a_plus, a_minus = np.array([1.0 + 0j, 0j]), np.array([0j, 1.0 + 0j])
        w_plus, w_minus = complex(m[0, 0]), complex(m[1, 1])
        err, kappa = 0.0, 1.0
    else:
        vals, vecs = np.linalg.eig(m)
        # pair numeric roots with the closed-form ones
        order = [0, 1] if abs(vals[0] - w_plus) + abs(vals[1] - w_minus) <= abs(vals[1] - w_plus) + abs(vals[0] - w_minus) else [1, 0]
        vals, vecs = vals[order], vecs[:, order]
        unit = vecs / np.linalg.norm(vecs, axis=0)
        kappa = float(max(1.0 / max(abs(unit[:, k] @ unit[:, k]), 1e-300) for k in range(2)))
        if kappa < 1e8:
            # c-Rayleigh quotient: second-order accurate for complex-symmetric M
            vals = np.array([(unit[:, k] @ m @ unit[:, k]) / (unit[:, k] @ unit[:, k]) for k in range(2)])
        err = float(max(abs(vals[0] - w_plus), abs(vals[1] - w_minus)))
        norm = np.linalg.norm(m, 2)
        tol = max(atol * max(1.0, norm), 100.0 * kappa * np.finfo(float).eps * norm)
        if err > tol:
            raise ClosedFormMismatch(f"closed-form and numeric eigenvalues differ by {err:.3e} (tolerance {tol:.3e})")
        a_plus, a_minus = _c_normalize(vecs[:, 0]), _c_normalize(vecs[:, 1])

    wp, wm = abs(a_plus[0]) ** 2, abs(a_minus[0]) ** 2
    e_pol = wp * w_plus.real + wm * w_minus.real
    g_pol = wp * (-2.0 * w_plus.imag) + wm * (-2.0 * w_minus.imag)
    if g_pol < 0:
        warnings.warn(f"mixed width {g_pol:.3e} is negative; clamping to 0", RuntimeWarning, stacklevel=2)
        g_pol = 0.0
    return PolaritonState(
        w_plus, w_minus, tuple(a_plus), tuple(a_minus), float(wp), float(wm),
        float(e_pol), float(g_pol), err, kappa,
    )


def gamma_polariton(setup: PolaritonSetup) -> tuple[float, float]:
    """(E_polariton, Gamma_polariton) from the TS-weighted branches."""
    state = polariton_eigs(setup)
    return state.e_polariton, state.gamma_polariton


# ---------------------------------------------------------------------------
# minimal-width formula


@dataclass(frozen=True)
class GammaMin:
    plus: complex
    minus: complex
    mixed: complex
    alpha: complex
    complex_branch: bool


def gamma_min_closed_form(setup: PolaritonSetup) -> GammaMin:
    """Minimal widths from the closed-form expression, evaluated verbatim.

    Gamma_min,+- = (G_TS + G_DB)/4 +- 2 sqrt(Re[d^2] Im[d^2] / (G_TS - G_DB)^2),
    applying at alpha^2 = Re[d^2] / (G_TS - G_DB)^2.  When either square root
    has a negative argument the result is complex and ``complex_branch`` is set.
    The mixed value weights the two branches with the TS populations at that
    alpha when alpha is real.
    """
    dg = setup.gamma_ts - setup.gamma_db
    if dg == 0:
        raise DegenerateWidths("Gamma_TS equals Gamma_DB; the minimal-width formula is singular")
    d2 = setup.dipole**2
    inner = complex(d2.real * d2.imag / dg**2)
    root = np.sqrt(inner)
    base = 0.25 * (setup.gamma_ts + setup.gamma_db)
    plus, minus = complex(base + 2 * root), complex(base - 2 * root)
    alpha = complex(np.sqrt(complex(d2.real / dg**2)))
    complex_branch = inner.real < 0 or d2.real < 0
    if alpha.imag == 0 and not complex_branch:
        state = polariton_eigs(setup.with_epsilon(alpha.real * setup.omega_cav**2))
        mixed = complex(state.weight_plus * plus + state.weight_minus * minus)
    else:
        mixed = complex(np.nan, np.nan)
    return GammaMin(plus, minus, mixed, alpha, bool(complex_branch))


# ---------------------------------------------------------------------------
# rate scans


@dataclass(frozen=True)
class RateScan:
    """Gamma_polariton and E_polariton sampled over epsilon at fixed omega_cav."""

    epsilon: tuple
    gamma: tuple
    energy: tuple
    omega_cav: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        eps = np.asarray(self.epsilon, dtype=float)
        if eps.size == 0 or 0.0 not in eps:
            raise DomainError("a rate scan must include epsilon = 0")
        if np.any(np.diff(eps) <= 0):
            raise DomainError("epsilon samples must be strictly increasing")

    def enhancement(self) -> np.ndarray:
        g = np.asarray(self.gamma)
        return g / g[list(self.epsilon).index(0.0)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# omega_cav_hartree={self.omega_cav!r}\n")
        for key, value in self.metadata.items():
            buf.write(f"# {key}={value}\n")
        buf.write("epsilon_au,gamma_hartree,energy_hartree\n")
        for e, g, en in zip(self.epsilon, self.gamma, self.energy):
            buf.write(f"{e:.12e},{g:.12e},{en:.12e}\n")
        return buf.getvalue()


def scan_rate(setup: PolaritonSetup, epsilon_values, metadata: dict | None = None) -> RateScan:
    """Evaluate the mixed rate at each epsilon, holding omega_cav fixed."""
    eps = [float(e) for e in epsilon_values]
    if any(e < 0 for e in eps):
        raise DomainError("epsilon values must be non-negative")
    if any(b < a for a, b in zip(eps, eps[1:])):
        raise DomainError("epsilon values must be sorted")
    if 0.0 not in eps:
        raise DomainError("epsilon values must include 0")
    # repeated zeros (an all-zero list) collapse to the single uncoupled sample
    eps = sorted(set(eps))
    energies, gammas = [], []
    for e in eps:
        en, g = gamma_polariton(setup.with_epsilon(e))
        energies.append(en)
        gammas.append(g)
    meta = {
        "dipole": repr(setup.dipole),
        "E_TS": repr(setup.e_ts),
        "Gamma_TS": repr(setup.gamma_ts),
        "E_DB": repr(setup.e_db),
        "Gamma_DB": repr(setup.gamma_db),
        "L_bohr": repr(setup.mirror_distance),
        "A_bohr2": repr(setup.mirror_area),
        "N": repr(setup.n_molecules),
    }
    meta.update(metadata or {})
    return RateScan(tuple(eps), tuple(gammas), tuple(energies), setup.omega_cav, meta)


def scan_minimum(scan: RateScan) -> tuple[float, float]:
    """(epsilon, Gamma) at the smallest finite sampled width."""
    g = np.asarray(scan.gamma, dtype=float)
    k = int(np.nanargmin(g))
    return scan.epsilon[k], float(g[k])
