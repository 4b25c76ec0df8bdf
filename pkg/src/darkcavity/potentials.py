"""Closed-form potentials and frequency profiles along the reaction coordinate.

Everything here evaluates on complex arguments so the same objects serve the
real-axis plots and the complex-scaled Hamiltonians.  Energies are Hartree,
lengths Bohr.

The static barrier is an asymmetric Eckart form,

    V_SB(X) = -a cosh^2(k s) [tanh(k (X + s)) - tanh(k s)]^2 + a exp(2 k s) + offset,

whose default parameters (a = 0.0180244, s = 0.05, k = 1, offset = 0) give a
barrier of about 0.02 Hartree with the reactant asymptote at zero.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import DomainError, FitDiverged, NonContinuableModel

FIT_BASES = ("tanh_plus_gaussians",)
PROFILE_VARIANTS = ("constant", "tanh_step", "gaussian_well", "fitted_tabulated")


def _arg(x):
    """Return ``x`` as a real array when it carries no imaginary part.

    Keeps real-axis evaluation bitwise identical whether the caller passes
    float or complex-with-zero-imaginary input.
    """
    x = np.asarray(x)
    if np.iscomplexobj(x) and not np.any(x.imag):
        return x.real
    return x


def _sech2(u):
    with np.errstate(over="ignore"):
        return 1.0 / np.cosh(u) ** 2


def _finish(value, x):
    # complex in -> complex out, even when evaluated on the real path
    return value.astype(complex) if np.iscomplexobj(np.asarray(x)) else value


# ---------------------------------------------------------------------------
# static barrier


@dataclass(frozen=True)
class EckartParams:
    """Asymmetric Eckart barrier; defaults give a ~0.02 Hartree barrier."""

    amplitude: float = 0.0180244
    shift: float = 0.05
    asymmetry_offset: float = 0.0
    steepness: float = 1.0

    continuable = True

    def __post_init__(self):
        if self.amplitude <= 0:
            raise DomainError(f"Eckart amplitude must be positive, got {self.amplitude}")
        if self.steepness <= 0:
            raise DomainError(f"Eckart steepness must be positive, got {self.steepness}")

    def __call__(self, x):
        return eval_static_barrier(self, x)

    def derivative(self, x):
        x0 = x
        x = _arg(x)
        ks = self.steepness * self.shift
        u = self.steepness * (x + self.shift)
        bracket = np.tanh(u) - math.tanh(ks)
        value = -2.0 * self.amplitude * self.steepness * math.cosh(ks) ** 2 * bracket * _sech2(u)
        return _finish(value, x0)

    @property
    def top(self) -> float:
        """Barrier maximum, reached where the bracket vanishes (X = 0)."""
        return self.amplitude * math.exp(2.0 * self.steepness * self.shift) + self.asymmetry_offset

    @property
    def asymptotes(self) -> tuple[float, float]:
        ks = self.steepness * self.shift
        left = -self.amplitude * math.cosh(ks) ** 2 * (1.0 + math.tanh(ks)) ** 2
        right = -self.amplitude * math.cosh(ks) ** 2 * (1.0 - math.tanh(ks)) ** 2
        top = self.amplitude * math.exp(2.0 * ks)
        return left + top + self.asymmetry_offset, right + top + self.asymmetry_offset


def eval_static_barrier(params: EckartParams, x):
    x0 = x
    x = _arg(x)
    ks = params.steepness * params.shift
    bracket = np.tanh(params.steepness * (x + params.shift)) - math.tanh(ks)
    value = (
        -params.amplitude * math.cosh(ks) ** 2 * bracket**2
        + params.amplitude * math.exp(2.0 * ks)
        + params.asymmetry_offset
    )
    return _finish(value, x0)


@dataclass(frozen=True)
class ClosedForm:
    """An arbitrary analytic potential given as a vectorised callable.

    ``derivative`` is optional; without it the gradient falls back to a
    central difference along the real direction, which is valid for any
    analytic function.
    """

    func: Callable = field(repr=False)
    derivative_func: Callable | None = field(default=None, repr=False)
    label: str = "closed_form"
    offset: float = 0.0

    continuable = True

    def __call__(self, x):
        x0 = x
        value = np.asarray(self.func(_arg(x))) + self.offset
        return _finish(value, x0)

    def derivative(self, x):
        x0 = x
        x = _arg(x)
        if self.derivative_func is not None:
            return _finish(np.asarray(self.derivative_func(x)), x0)
        h = 1e-5
        return (self.func(x + h) - self.func(x - h)) / (2 * h)

    def shifted(self, c: float) -> "ClosedForm":
        return replace(self, offset=self.offset + c)


def constant_potential(c: float = 0.0) -> ClosedForm:
    return ClosedForm(lambda x: np.zeros_like(x, dtype=float) + 0 * x, lambda x: 0 * x, "constant", c)


def harmonic_potential(omega: float = 1.0, mass: float = 1.0, center: float = 0.0) -> ClosedForm:
    k = mass * omega**2
    return ClosedForm(
        lambda x: 0.5 * k * (x - center) ** 2,
        lambda x: k * (x - center),
        f"harmonic(omega={omega})",
    )


def gaussian_damped_well(height: float = 0.8, decay: float = 0.1) -> ClosedForm:
    """(x^2/2 - J) exp(-lambda x^2) + J, the standard barrier-well benchmark.

    ``height=0`` gives the undressed (x^2/2) exp(-lambda x^2) form.
    """
    J, lam = height, decay

    def f(x):
        return (0.5 * x**2 - J) * np.exp(-lam * x**2) + J

    def df(x):
        return (x - 2 * lam * x * (0.5 * x**2 - J)) * np.exp(-lam * x**2)

    return ClosedForm(f, df, f"gaussian_damped_well(J={J}, lambda={lam})")


# ---------------------------------------------------------------------------
# frequency profiles


@dataclass(frozen=True)
class FrequencyProfile:
    """Perpendicular frequency Omega(X) in the tanh-plus-Gaussians family.

    Omega(X) = offset + step * tanh(steepness (X - center))
               + sum_i amp_i exp(-exponent_i (X - x_i)^2)

    ``constant``, ``tanh_step`` and ``gaussian_well`` are special cases built by
    the classmethods; ``fitted_tabulated`` comes out of :func:`fit_tabulated`.
    """

    variant: str
    offset: float
    step: float = 0.0
    steepness: float = 1.0
    center: float = 0.0
    gaussians: tuple = ()
    max_residual: float | None = None

    continuable = True

    def __post_init__(self):
        if self.variant not in PROFILE_VARIANTS:
            raise DomainError(f"unknown frequency profile variant {self.variant!r}")
        gs = tuple(tuple(float(v) for v in g) for g in self.gaussians)
        for amp, expo, _ in gs:
            if expo <= 0:
                raise DomainError(f"Gaussian exponent must be positive, got {expo}")
        object.__setattr__(self, "gaussians", gs)

    @classmethod
    def constant(cls, omega: float) -> "FrequencyProfile":
        return cls("constant", float(omega))

    @classmethod
    def tanh_step(cls, omega_left, omega_right, steepness=1.0, center=0.0) -> "FrequencyProfile":
        if steepness <= 0:
            raise DomainError("tanh_step steepness must be positive")
        return cls(
            "tanh_step",
            0.5 * (omega_left + omega_right),
            0.5 * (omega_right - omega_left),
            float(steepness),
            float(center),
        )

    @classmethod
    def gaussian_well(cls, omega_inf, depth, width, center=0.0) -> "FrequencyProfile":
        """omega_inf - depth exp(-((X - center)/width)^2); negative depth is a bump."""
        if width <= 0:
            raise DomainError("gaussian_well width must be positive")
        return cls("gaussian_well", float(omega_inf), gaussians=((-depth, 1.0 / width**2, center),))

    @property
    def limits(self) -> tuple[float, float]:
        return self.offset - self.step, self.offset + self.step

    def __call__(self, x):
        return eval_frequency(self, x)

    def derivative(self, x):
        x0 = x
        x = _arg(x)
        value = self.step * self.steepness * _sech2(self.steepness * (x - self.center))
        for amp, expo, xi in self.gaussians:
            value = value - 2.0 * amp * expo * (x - xi) * np.exp(-expo * (x - xi) ** 2)
        return _finish(np.asarray(value) + 0 * x, x0)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "offset": self.offset,
            "step": self.step,
            "steepness": self.steepness,
            "center": self.center,
            "gaussians": [list(g) for g in self.gaussians],
            "max_residual": self.max_residual,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyProfile":
        return cls(
            d["variant"],
            d["offset"],
            d.get("step", 0.0),
            d.get("steepness", 1.0),
            d.get("center", 0.0),
            tuple(tuple(g) for g in d.get("gaussians", ())),
            d.get("max_residual"),
        )


def eval_frequency(profile, x):
    if not getattr(profile, "continuable", True):
        raise NonContinuableModel("raw tabulated frequencies must be fitted before evaluation")
    x0 = x
    x = _arg(x)
    value = profile.offset + 0 * x
    if profile.step:
        value = value + profile.step * np.tanh(profile.steepness * (x - profile.center))
    for amp, expo, xi in profile.gaussians:
        value = value + amp * np.exp(-expo * (x - xi) ** 2)
    return _finish(np.asarray(value, dtype=np.result_type(x, float)), x0)


# ---------------------------------------------------------------------------
# adiabatic channel and 2D surface


def _profiles(frequency) -> tuple:
    if frequency is None:
        return ()
    if isinstance(frequency, (list, tuple)):
        return tuple(frequency)
    return (frequency,)


@dataclass(frozen=True)
class AdiabaticChannel:
    """V_ad(X) = V_SB(X) + sum_j Omega_j(X) (n_j + 1/2) with kinetic mass ``mu``.

    ``frequency`` may be a single profile, a tuple of profiles (one per
    perpendicular mode) or None for a bare static-barrier channel.
    """

    mu: float
    static_barrier: object
    frequency: object = None
    n_perp: int | tuple = 0

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"reduced mass must be positive, got {self.mu}")
        modes = _profiles(self.frequency)
        quanta = self.n_perp if isinstance(self.n_perp, tuple) else (self.n_perp,) * len(modes)
        if len(quanta) != len(modes):
            raise DomainError("n_perp must give one quantum number per perpendicular mode")
        if any(int(n) != n or n < 0 for n in quanta):
            raise DomainError(f"n_perp must be non-negative integers, got {self.n_perp}")

    @property
    def modes(self) -> tuple:
        modes = _profiles(self.frequency)
        quanta = self.n_perp if isinstance(self.n_perp, tuple) else (self.n_perp,) * len(modes)
        return tuple(zip(modes, quanta))

    @property
    def continuable(self) -> bool:
        parts = [self.static_barrier] + [p for p, _ in self.modes]
        return all(getattr(p, "continuable", True) for p in parts)

    def bare(self) -> "AdiabaticChannel":
        """Same channel with every perpendicular frequency switched off."""
        return AdiabaticChannel(self.mu, self.static_barrier, None, 0)

    def __call__(self, x):
        return eval_adiabatic(self, x)

    def derivative(self, x):
        return adiabatic_gradient(self, x)


def eval_adiabatic(channel: AdiabaticChannel, x):
    value = channel.static_barrier(x)
    for profile, n in channel.modes:
        value = value + eval_frequency(profile, x) * (n + 0.5)
    return value


def adiabatic_gradient(channel: AdiabaticChannel, x):
    """dV_ad/dX in closed form; valid on and off the real axis."""
    value = channel.static_barrier.derivative(x)
    for profile, n in channel.modes:
        value = value + profile.derivative(x) * (n + 0.5)
    return value


@dataclass(frozen=True)
class RphSurface:
    """Single-mode reaction-path surface V(X, Y) = V_SB(X) + mu Omega(X)^2 Y^2 / 2."""

    static_barrier: object
    frequency: FrequencyProfile
    mu: float

    def __post_init__(self):
        if not self.mu > 0:
            raise DomainError(f"reduced mass must be positive, got {self.mu}")

    def __call__(self, x, y):
        return eval_rph(self, x, y)

    def channel(self, n_perp: int = 0) -> AdiabaticChannel:
        return AdiabaticChannel(self.mu, self.static_barrier, self.frequency, n_perp)


def eval_rph(surface: RphSurface, x, y):
    omega = eval_frequency(surface.frequency, x)
    return surface.static_barrier(x) + 0.5 * surface.mu * omega**2 * np.asarray(y) ** 2


# ---------------------------------------------------------------------------
# tabulated input and fitting

MIN_TABLE_SAMPLES = 8


@dataclass(frozen=True)
class TabulatedCurve:
    """Sampled (x, value) pairs.  Not continuable until fitted."""

    x: np.ndarray
    values: np.ndarray

    continuable = False

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != v.shape:
            raise DomainError("tabulated x and values must be 1D arrays of equal length")
        if len(x) < MIN_TABLE_SAMPLES:
            raise DomainError(f"a tabulated curve needs at least {MIN_TABLE_SAMPLES} samples, got {len(x)}")
        if np.any(np.diff(x) <= 0):
            raise DomainError("tabulated abscissae must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise DomainError("tabulated curve contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        raise NonContinuableModel("raw tabulated curves cannot be evaluated; use fit_tabulated")


def read_tabulated_csv(path, reference_frequency: float = 0.0) -> TabulatedCurve:
    """Read a two-column ``x_bohr,value_hartree`` table.

    ``reference_frequency`` is added to every value, undoing tables that
    quote frequencies relative to the reactant vibration.
    """
    xs, vs = [], []
    with open(path, newline="") as fh:
        rows = csv.reader(line for line in fh if line.strip() and not line.lstrip().startswith("#"))
        header = next(rows, None)
        if header is None or [h.strip() for h in header] != ["x_bohr", "value_hartree"]:
            raise DomainError(f"{path}: expected header 'x_bohr,value_hartree', got {header}")
        for lineno, row in enumerate(rows, start=2):
            if len(row) != 2:
                raise DomainError(f"{path}: row {lineno} has {len(row)} columns, expected 2")
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except ValueError as exc:
                raise DomainError(f"{path}: row {lineno}: {exc}") from None
    return TabulatedCurve(np.array(xs), np.array(vs) + reference_frequency)


def write_tabulated_csv(path, curve: TabulatedCurve, comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write("x_bohr,value_hartree\n")
        for x, v in zip(curve.x, curve.values):
            fh.write(f"{x:.10g},{v:.17g}\n")


def _basis_columns(x, nonlin, n_terms):
    a, x0 = nonlin[0], nonlin[1]
    cols = [np.ones_like(x), np.tanh(a * (x - x0))]
    for i in range(n_terms):
        b, xi = nonlin[2 + 2 * i], nonlin[3 + 2 * i]
        cols.append(np.exp(-b * (x - xi) ** 2))
    return np.column_stack(cols)


def _linear_coeffs(x, y, nonlin, n_terms):
    A = _basis_columns(x, nonlin, n_terms)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef, A @ coef - y


def fit_tabulated(
    curve: TabulatedCurve,
    basis: str = "tanh_plus_gaussians",
    n_terms: int = 1,
    tolerance: float | None = None,
    min_exponent: float = 0.05,
    n_starts: int = 48,
    seed: int = 0,
) -> FrequencyProfile:
    """Least-squares fit of c0 + c1 tanh(a(x - x0)) + sum g_i exp(-b_i (x - x_i)^2).

    The linear coefficients are eliminated by variable projection; a seeded
    multi-start over the nonlinear parameters keeps the result deterministic.
    ``min_exponent`` bounds the Gaussian exponents from below: very wide
    Gaussians decay slowly once rotated into the complex plane.

    Raises FitDiverged if the max residual exceeds ``tolerance`` (default 1e-3
    of the sample range, floored at 1e-12).
    """
    if basis not in FIT_BASES:
        raise DomainError(f"unknown fit basis {basis!r}; choose from {FIT_BASES}")
    if int(n_terms) != n_terms or n_terms < 1:
        raise DomainError(f"n_terms must be a positive integer, got {n_terms}")
    x, y = curve.x, curve.values
    span = float(x[-1] - x[0])
    yrange = float(np.ptp(y))
    if tolerance is None:
        tolerance = max(1e-3 * yrange, 1e-12)

    lo = [1e-3 / span, x[0]] + [min_exponent, x[0]] * n_terms
    hi = [200.0 / span, x[-1]] + [1e4 / span**2 + min_exponent, x[-1]] * n_terms
    rng = np.random.default_rng(seed)

    def resid(p):
        return _linear_coeffs(x, y, p, n_terms)[1]

    def solve(p0, n):
        lo_n, hi_n = lo[: 2 + 2 * n], hi[: 2 + 2 * n]
        p0 = np.clip(p0, lo_n, hi_n)
        return least_squares(
            lambda p: _linear_coeffs(x, y, p, n)[1], p0, bounds=(lo_n, hi_n),
            x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000,
        )

    def greedy_start():
        # add one Gaussian at a time where the current residual peaks
        p = list(solve([4.0 / span, 0.5 * (x[0] + x[-1])], 0).x)
        for n in range(1, n_terms + 1):
            r = np.abs(_linear_coeffs(x, y, np.array(p), n - 1)[1])
            k = int(np.argmax(r))
            half = np.nonzero(r < 0.5 * r[k])[0]
            hw = np.min(np.abs(x[half] - x[k])) if half.size else 0.25 * span
            p = list(solve(p + [np.log(2.0) / max(hw, 1e-3 * span) ** 2, x[k]], n).x)
        return p

    best = None
    for start in range(n_starts):
        if start == 0:
            try:
                p0 = greedy_start()
            except (ValueError, np.linalg.LinAlgError):
                continue
        else:
            p0 = [10 ** rng.uniform(np.log10(lo[0]) + 1, np.log10(hi[0]) - 1), rng.uniform(x[0], x[-1])]
            for _ in range(n_terms):
                p0 += [10 ** rng.uniform(np.log10(lo[2]), np.log10(hi[2]) - 1), rng.uniform(x[0], x[-1])]
        p0 = np.clip(p0, lo, hi)
        try:
            sol = least_squares(resid, p0, bounds=(lo, hi), x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if best is None or sol.cost < best.cost:
            best = sol
        if np.max(np.abs(sol.fun), initial=0.0) < 1e-13 * max(yrange, 1.0):
            break
    if best is None:
        raise FitDiverged("least-squares fit failed for every start")

    coef, r = _linear_coeffs(x, y, best.x, n_terms)
    max_res = float(np.max(np.abs(r)))
    profile = FrequencyProfile(
        "fitted_tabulated",
        offset=float(coef[0]),
        step=float(coef[1]),
        steepness=float(best.x[0]),
        center=float(best.x[1]),
        gaussians=tuple(
            (float(coef[2 + i]), float(best.x[2 + 2 * i]), float(best.x[3 + 2 * i])) for i in range(n_terms)
        ),
        max_residual=max_res,
    )
    if max_res > tolerance:
        raise FitDiverged(f"fit residual {max_res:.3e} exceeds tolerance {tolerance:.3e}", residual=max_res)
    return profile


def sample_profile(profile: FrequencyProfile, x: Sequence[float]) -> TabulatedCurve:
    x = np.asarray(x, dtype=float)
    return TabulatedCurve(x, np.asarray(eval_frequency(profile, x), dtype=float))
