"""Exception types raised by the spectemp library.

All library errors derive from :class:`SpectempError` so callers can catch
one base class at the CLI boundary and map it to an exit code.
"""

from __future__ import annotations


class SpectempError(Exception):
    """Base class for all library errors."""


class InvalidConfig(SpectempError):
    """A configuration value is out of range or inconsistent."""


class EmptySignal(SpectempError):
    """A signal has too few samples to be a signal at all (< 2)."""


class InvalidStep(SpectempError):
    """A sampling step is non-positive or larger than the signal span."""


class TooShort(SpectempError):
    """Input has too few samples for the requested operation."""


class LengthMismatch(SpectempError):
    """Paired arrays do not have equal length."""


class DegenerateSignal(SpectempError):
    """Signal statistics are degenerate for the requested estimator."""


class SilentSignal(SpectempError):
    """Signal has zero power where a spectral ratio is required."""


class MissingClass(SpectempError):
    """A class label expected in the data is absent."""


class DegenerateClass(SpectempError):
    """A single class has degenerate statistics (e.g. zero variance everywhere)."""


class DegenerateClasses(SpectempError):
    """The class structure is unusable (fewer than two classes, or a class too small)."""


class DegenerateGrid(SpectempError):
    """A sampling grid is unusable for correlation analysis."""


class DegenerateLabels(SpectempError):
    """Labels contain fewer than two distinct classes."""


class EmptyTrain(SpectempError):
    """A training split is empty."""


class ClassTooSmall(SpectempError):
    """A class has fewer members than the number of folds."""
