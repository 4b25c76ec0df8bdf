"""Exception hierarchy.

Every error raised on purpose by the toolkit derives from ``DarkCavityError``
so the CLI can map it to an exit code in one place.
"""


class DarkCavityError(Exception):
    """Base class for all toolkit errors."""


class DomainError(DarkCavityError, ValueError):
    """An argument violates a documented precondition."""


class NonContinuableModel(DarkCavityError):
    """A model has no closed form that can be evaluated off the real axis."""


class FitDiverged(DarkCavityError):
    """Least-squares fit of a tabulated curve missed the residual tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NoConvergence(DarkCavityError):
    """The dense eigensolver failed or produced inaccurate eigenpairs."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NoStablePoles(DarkCavityError):
    """No eigenvalue survived the theta-stability/localization filter."""


class NoTransitionState(DarkCavityError):
    """No physical pole lies inside the adiabatic barrier window."""


class NoEmissionChannel(DarkCavityError):
    """There is no physical DB pole below the TS pole to emit a photon into."""


class GridMismatch(DarkCavityError):
    """Two objects that must share a grid (or rotation angle) do not."""


class DimensionCap(DarkCavityError):
    """A matrix would exceed the configured dimension cap."""


class OffResonance(DarkCavityError):
    """E_DB + omega_cav differs from E_TS by more than the detuning tolerance."""


class ClosedFormMismatch(DarkCavityError):
    """Closed-form polariton eigenvalues disagree with the numeric 2x2 solve."""


class DegenerateWidths(DarkCavityError):
    """Gamma_TS == Gamma_DB, so the minimal-width formula is singular."""


class ConfigError(DarkCavityError):
    """A scenario configuration failed to parse or validate."""
