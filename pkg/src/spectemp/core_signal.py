"""Core signal containers and the resample / trim / windowize chain.

Every downstream stage consumes one of the three containers defined here:

* :class:`TimeSeries` -- raw (possibly non-uniform) samples ``(t, u)``.
* :class:`UniformSeries` -- samples on a uniform grid ``t0 + j*dt``.
* :class:`WindowSet` -- fixed-length windows cut from a uniform series.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySignal, InvalidConfig, InvalidStep, LengthMismatch, TooShort

__all__ = [
    "TimeSeries",
    "UniformSeries",
    "WindowSet",
    "resample",
    "trim",
    "windowize",
]


@dataclass
class TimeSeries:
    """A sampled signal with explicit time stamps.

    Parameters
    ----------
    t : ndarray
        Sample times in seconds, strictly increasing.
    u : ndarray
        Sample values, same length as ``t``.
    label : int or None
        Class label when the signal belongs to a labelled dataset.
    source_id : str
        Identifier used to trace windows and features back to the signal.
    """

    t: np.ndarray
    u: np.ndarray
    label: int | None = None
    source_id: str = ""

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        if self.t.ndim != 1 or self.u.ndim != 1:
            raise InvalidConfig("t and u must be one-dimensional")
        if len(self.t) != len(self.u):
            raise LengthMismatch(
                f"t has {len(self.t)} samples but u has {len(self.u)}"
            )
        if len(self.t) < 2:
            raise EmptySignal("a signal needs at least 2 samples")
        if not np.all(np.diff(self.t) > 0):
            raise InvalidConfig("t must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)

    @property
    def span(self) -> float:
        """Total duration ``t[-1] - t[0]`` in seconds."""
        return float(self.t[-1] - self.t[0])


@dataclass
class UniformSeries:
    """A signal on a uniform time grid ``t0 + j*dt``."""

    u: np.ndarray
    dt: float
    t0: float = 0.0
    label: int | None = None
    source_id: str = ""

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=float)
        if self.u.ndim != 1:
            raise InvalidConfig("u must be one-dimensional")
        if len(self.u) < 2:
            raise EmptySignal("a signal needs at least 2 samples")
        if not self.dt > 0:
            raise InvalidStep(f"dt must be positive, got {self.dt}")

    def __len__(self) -> int:
        return len(self.u)

    @property
    def t(self) -> np.ndarray:
        """Reconstructed time stamps of the grid."""
        return self.t0 + self.dt * np.arange(len(self.u))

    @property
    def span(self) -> float:
        return float(self.dt * (len(self.u) - 1))


@dataclass
class WindowSet:
    """Fixed-length windows cut from one uniform series.

    ``windows[m]`` holds source samples ``[m*hop, m*hop + window_len)``.
    """

    windows: np.ndarray  # shape (M, L)
    window_len: int
    hop: int
    dt: float
    t0: float = 0.0
    label: int | None = None
    source_id: str = ""

    def __post_init__(self) -> None:
        self.windows = np.asarray(self.windows, dtype=float)
        if self.windows.ndim != 2:
            raise InvalidConfig("windows must be a 2-D array")
        if self.windows.shape[1] != self.window_len:
            raise LengthMismatch(
                f"windows have {self.windows.shape[1]} columns, expected {self.window_len}"
            )

    def __len__(self) -> int:
        return self.windows.shape[0]

    @property
    def n_windows(self) -> int:
        return self.windows.shape[0]


def resample(signal: TimeSeries, dt: float) -> UniformSeries:
    """Resample a signal onto a uniform grid by linear interpolation.

    The grid starts at ``t[0]`` and uses step ``dt``; the last grid point is
    the largest ``t[0] + j*dt`` that does not exceed ``t[-1]`` (no
    extrapolation).

    Parameters
    ----------
    signal : TimeSeries
        Input samples; ``t`` strictly increasing.
    dt : float
        Target sampling interval in seconds.

    Returns
    -------
    UniformSeries

    Raises
    ------
    InvalidStep
        If ``dt <= 0`` or ``dt`` exceeds the signal span.
    """
    if len(signal.t) < 2:
        raise EmptySignal("cannot resample fewer than 2 samples")
    span = signal.span
    if not dt > 0:
        raise InvalidStep(f"dt must be positive, got {dt}")
    if dt > span:
        raise InvalidStep(f"dt={dt} exceeds signal span {span}")
    # Small slack so spans that are exact multiples of dt keep the last point.
    n = int(np.floor(span / dt + 1e-9)) + 1
    grid = signal.t[0] + dt * np.arange(n)
    u = np.interp(grid, signal.t, signal.u)
    return UniformSeries(
        u=u, dt=float(dt), t0=float(signal.t[0]), label=signal.label, source_id=signal.source_id
    )


def trim(series: UniformSeries, alpha: float) -> UniformSeries:
    """Drop ``floor(alpha*N)`` samples from each end of a uniform series.

    Parameters
    ----------
    series : UniformSeries
    alpha : float
        Boundary fraction in ``[0, 0.5)``.

    Returns
    -------
    UniformSeries
        The central portion; ``t0`` advances by the dropped duration.

    Raises
    ------
    InvalidConfig
        If ``alpha`` is outside ``[0, 0.5)``.
    TooShort
        If fewer than 2 samples remain.
    """
    if not 0.0 <= alpha < 0.5:
        raise InvalidConfig(f"alpha must be in [0, 0.5), got {alpha}")
    n = len(series.u)
    k = int(np.floor(alpha * n))
    kept = series.u[k : n - k]
    if len(kept) < 2:
        raise TooShort(f"trim(alpha={alpha}) leaves {len(kept)} samples")
    return UniformSeries(
        u=kept.copy(),
        dt=series.dt,
        t0=series.t0 + k * series.dt,
        label=series.label,
        source_id=series.source_id,
    )


def windowize(series: UniformSeries, window_len: int, hop: int) -> WindowSet:
    """Cut a uniform series into fixed-length windows.

    Produces ``M = floor((N - L)/hop) + 1`` windows; trailing samples that do
    not fill a whole window are discarded.

    Parameters
    ----------
    series : UniformSeries
    window_len : int
        Window length ``L`` in samples, at least 2.
    hop : int
        Stride between window starts, ``1 <= hop <= window_len``.

    Returns
    -------
    WindowSet

    Raises
    ------
    InvalidConfig
        If ``window_len`` or ``hop`` is out of range.
    TooShort
        If the series has fewer than ``window_len`` samples.
    """
    if window_len < 2:
        raise InvalidConfig(f"window_len must be >= 2, got {window_len}")
    if not 1 <= hop <= window_len:
        raise InvalidConfig(f"hop must be in [1, window_len], got {hop}")
    n = len(series.u)
    if n < window_len:
        raise TooShort(f"series has {n} samples, window needs {window_len}")
    m = (n - window_len) // hop + 1
    idx = hop * np.arange(m)[:, None] + np.arange(window_len)[None, :]
    return WindowSet(
        windows=series.u[idx],
        window_len=window_len,
        hop=hop,
        dt=series.dt,
        t0=series.t0,
        label=series.label,
        source_id=series.source_id,
    )
