"""Complex-scaled resonance poles and the dark-cavity polariton rate model."""

__version__ = "0.1.0"
