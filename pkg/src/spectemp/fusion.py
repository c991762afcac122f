"""Dataset representations: raw baseline, aligned windows, and hybrid rows.

Three builders turn labelled signals into classifier-ready samples:

* ``base`` -- short raw subsequences, no resampling, no features.
* ``sta`` -- resample at a common interval, trim boundaries, stack windows.
* ``hstf`` -- the ``sta`` windows with the six spectral features appended
  to every row.

Every sample is a ``(M, D)`` matrix; all samples in one representation
share ``M`` and ``D``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_signal import TimeSeries, resample, trim, windowize
from .errors import InvalidConfig, TooShort
from .spectral import FeatureConfig, window_features

__all__ = [
    "FusedSample",
    "Representation",
    "resolve_window_len",
    "build_base",
    "build_sta",
    "build_hstf",
]


@dataclass
class FusedSample:
    """One classifier sample: a token matrix with its label."""

    matrix: np.ndarray  # (M, D)
    label: int
    source_id: str = ""


@dataclass
class Representation:
    """A full dataset of equally-shaped samples.

    ``n_feature_cols`` counts trailing feature columns that a classifier
    should standardize fold-locally (6 for ``hstf``, 0 otherwise).
    """

    kind: str  # "base" | "sta" | "hstf"
    samples: list[FusedSample]
    tau: float | None = None
    n_feature_cols: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("base", "sta", "hstf"):
            raise InvalidConfig(f"unknown representation kind {self.kind!r}")
        if not self.samples:
            raise InvalidConfig("a representation needs at least one sample")
        shape = self.samples[0].matrix.shape
        for s in self.samples:
            if s.matrix.shape != shape:
                raise InvalidConfig(
                    f"sample shapes differ: {s.matrix.shape} vs {shape}"
                )

    @property
    def shape(self) -> tuple[int, int]:
        """Shared ``(M, D)`` of every sample."""
        return self.samples[0].matrix.shape

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.samples])


def resolve_window_len(n_resampled: int, win_dur_ratio: float) -> int:
    """Window length in samples: ``round(ratio * N)``, at least 8."""
    if not 0 < win_dur_ratio < 1:
        raise InvalidConfig(f"win_dur_ratio must be in (0, 1), got {win_dur_ratio}")
    return max(8, int(round(win_dur_ratio * n_resampled)))


def build_base(
    signals: list[TimeSeries],
    timesteps: int = 24,
    start_row: int = 4000,
    sampling_ratio: float = 0.3,
) -> Representation:
    """Raw-subsequence baseline.

    From each signal, consecutive non-overlapping runs of ``timesteps`` raw
    samples are cut starting at ``start_row``; a uniformly spaced
    ``sampling_ratio`` fraction of them is kept.  Each kept run becomes one
    ``(1, timesteps)`` sample.

    Raises
    ------
    TooShort
        If a signal yields no complete run.
    """
    if timesteps < 2:
        raise InvalidConfig(f"timesteps must be >= 2, got {timesteps}")
    if start_row < 0:
        raise InvalidConfig(f"start_row must be >= 0, got {start_row}")
    if not 0 < sampling_ratio <= 1:
        raise InvalidConfig(f"sampling_ratio must be in (0, 1], got {sampling_ratio}")
    samples: list[FusedSample] = []
    for sig in signals:
        n_total = (len(sig) - start_row) // timesteps
        if n_total < 1:
            raise TooShort(
                f"signal {sig.source_id!r} has no complete run of {timesteps} "
                f"samples after row {start_row}"
            )
        n_keep = max(1, int(np.floor(n_total * sampling_ratio + 1e-9)))
        picks = np.round(np.linspace(0, n_total - 1, n_keep)).astype(int)
        for j, p in enumerate(picks):
            lo = start_row + p * timesteps
            seq = sig.u[lo : lo + timesteps]
            samples.append(
                FusedSample(
                    matrix=seq[None, :].astype(float),
                    label=int(sig.label),
                    source_id=f"{sig.source_id}#{j}",
                )
            )
    return Representation(kind="base", samples=samples, tau=None, n_feature_cols=0)


def _sta_windows(sig: TimeSeries, tau: float, alpha: float, window_len: int, hop: int):
    series = trim(resample(sig, tau), alpha)
    return windowize(series, window_len, hop)


def build_sta(
    signals: list[TimeSeries],
    tau: float,
    alpha: float = 0.02,
    window_len: int | None = None,
    hop: int | None = None,
    win_dur_ratio: float = 0.04,
) -> Representation:
    """Aligned raw windows at a common sampling interval.

    Each signal is resampled at ``tau``, boundary-trimmed by ``alpha``, and
    cut into ``window_len``-sample windows (hop defaults to the window
    length, i.e. non-overlapping).  When ``window_len`` is omitted it is
    resolved from ``win_dur_ratio`` and the shortest resampled length.
    Matrices are truncated to the smallest window count so all samples
    share one shape.
    """
    window_len, hop = _resolve_geometry(signals, tau, alpha, window_len, hop, win_dur_ratio)
    sets = [_sta_windows(sig, tau, alpha, window_len, hop) for sig in signals]
    m = min(ws.n_windows for ws in sets)
    if m < 1:
        raise TooShort("no signal yields a complete window")
    samples = [
        FusedSample(
            matrix=ws.windows[:m].astype(float),
            label=int(sig.label),
            source_id=sig.source_id,
        )
        for sig, ws in zip(signals, sets)
    ]
    return Representation(kind="sta", samples=samples, tau=float(tau), n_feature_cols=0)


def build_hstf(
    signals: list[TimeSeries],
    tau: float,
    alpha: float = 0.02,
    window_len: int | None = None,
    hop: int | None = None,
    win_dur_ratio: float = 0.04,
    feature_cfg: FeatureConfig | None = None,
) -> Representation:
    """Hybrid rows: each window concatenated with its six spectral features.

    The displacement part of every row is bitwise identical to the
    corresponding ``sta`` row; the feature columns are left raw here and
    standardized fold-locally by the classifier stage.
    """
    feature_cfg = feature_cfg or FeatureConfig()
    window_len, hop = _resolve_geometry(signals, tau, alpha, window_len, hop, win_dur_ratio)
    sets = [_sta_windows(sig, tau, alpha, window_len, hop) for sig in signals]
    m = min(ws.n_windows for ws in sets)
    if m < 1:
        raise TooShort("no signal yields a complete window")
    samples: list[FusedSample] = []
    for sig, ws in zip(signals, sets):
        windows = ws.windows[:m].astype(float)
        feats = np.array(
            [window_features(w, ws.dt, feature_cfg).as_array() for w in windows]
        )
        samples.append(
            FusedSample(
                matrix=np.hstack([windows, feats]),
                label=int(sig.label),
                source_id=sig.source_id,
            )
        )
    return Representation(kind="hstf", samples=samples, tau=float(tau), n_feature_cols=6)


def _resolve_geometry(signals, tau, alpha, window_len, hop, win_dur_ratio):
    if not signals:
        raise InvalidConfig("no signals given")
    if window_len is None:
        n_res = min(len(resample(sig, tau)) for sig in signals)
        window_len = resolve_window_len(n_res, win_dur_ratio)
    if hop is None:
        hop = window_len
    return int(window_len), int(hop)
