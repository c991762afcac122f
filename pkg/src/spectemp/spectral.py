"""Spectral features of fixed-length windows.

A window is treated as a single short-time frame: its Hann-windowed DFT
magnitude yields the dominant amplitude (z1), sideband energy symmetry
(z2), second-peak frequency offset (z3), and harmonic ratio (z4).  A Morlet
wavelet transform yields the maximum time-scale modulus (z5), and a staged
noise-assisted empirical mode decomposition yields the oscillatory energy
ratio (z6).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import get_window

from .core_signal import UniformSeries, windowize
from .errors import InvalidConfig, SilentSignal, TooShort

__all__ = [
    "Spectrogram",
    "SpectralFeatures",
    "ImfSet",
    "FeatureConfig",
    "stft",
    "dominant_amplitude",
    "sideband_symmetry",
    "second_peak_offset",
    "harmonic_ratio",
    "default_scales",
    "morlet_cwt",
    "cwt_max",
    "emd",
    "ceemdan",
    "ceemdan_energy_ratio",
    "window_features",
]

MORLET_W0 = 6.0


@dataclass
class Spectrogram:
    """Magnitude STFT, frames along the first axis."""

    magnitudes: np.ndarray  # (n_frames, K)
    freqs: np.ndarray  # (K,)
    frame_times: np.ndarray  # (n_frames,) window start times
    window_len: int
    hop: int


@dataclass
class SpectralFeatures:
    """The six spectral features of one window."""

    z1: float
    z2: float
    z3: float
    z4: float
    z5: float
    z6: float
    k1: int = 0
    z6_fallback: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.z3, self.z4, self.z5, self.z6], dtype=float)


@dataclass
class ImfSet:
    """Intrinsic mode functions and the final residue of one signal."""

    imfs: np.ndarray  # (n_imfs, N); may be empty
    residue: np.ndarray  # (N,)
    converged: bool = True

    @property
    def n_imfs(self) -> int:
        return self.imfs.shape[0]


@dataclass
class FeatureConfig:
    """Knobs of the per-window feature extractor."""

    delta_bins: int = 5
    guard_bins: int = 1
    n_scales: int = 32
    window: str = "hann"
    ceemdan_min_len: int = 64
    ensemble_size: int = 50
    noise_scale: float = 0.2
    max_imfs: int = 10
    seed: int = 0


def stft(series: UniformSeries, window_len: int, hop: int, window: str = "hann") -> Spectrogram:
    """Magnitude short-time Fourier transform (one-sided).

    Frames are cut with :func:`windowize`, tapered, and transformed; the
    result has ``K = window_len // 2 + 1`` frequency bins per frame.
    """
    ws = windowize(series, window_len, hop)
    taper = get_window(window, window_len, fftbins=True)
    mags = np.abs(np.fft.rfft(ws.windows * taper[None, :], axis=1))
    freqs = np.fft.rfftfreq(window_len, d=series.dt)
    frame_times = series.t0 + series.dt * hop * np.arange(ws.n_windows)
    return Spectrogram(
        magnitudes=mags, freqs=freqs, frame_times=frame_times, window_len=window_len, hop=hop
    )


def frame_magnitude(window_values: np.ndarray, window: str = "hann") -> np.ndarray:
    """One-sided DFT magnitude of a single tapered frame."""
    u = np.asarray(window_values, dtype=float)
    if len(u) < 4:
        raise TooShort(f"frame needs at least 4 samples, got {len(u)}")
    taper = get_window(window, len(u), fftbins=True)
    return np.abs(np.fft.rfft(u * taper))


def dominant_amplitude(magnitudes: np.ndarray) -> tuple[float, int]:
    """Largest non-DC magnitude and its bin index.

    Returns ``(0.0, 1)`` for an all-zero spectrum.
    """
    mag = np.asarray(magnitudes, dtype=float)
    if len(mag) < 2:
        raise TooShort("spectrum needs at least 2 bins")
    k1 = 1 + int(np.argmax(mag[1:]))
    return float(mag[k1]), k1


def sideband_symmetry(magnitudes: np.ndarray, k1: int, delta_bins: int = 5) -> float:
    """Normalized left/right energy asymmetry around the dominant bin.

    ``E_L`` sums squared magnitudes over ``[k1-delta, k1)`` and ``E_R`` over
    ``(k1, k1+delta]``, both clipped to the spectrum; the result is
    ``|E_L - E_R| / (E_L + E_R)``, or 0 when both sides are silent.
    """
    mag = np.asarray(magnitudes, dtype=float)
    k = len(mag)
    lo = max(0, k1 - delta_bins)
    hi = min(k - 1, k1 + delta_bins)
    e_left = float((mag[lo:k1] ** 2).sum())
    e_right = float((mag[k1 + 1 : hi + 1] ** 2).sum())
    total = e_left + e_right
    if total == 0:
        return 0.0
    return abs(e_left - e_right) / total


def second_peak_offset(
    magnitudes: np.ndarray, k1: int, freqs: np.ndarray, guard_bins: int = 1
) -> float:
    """Frequency distance from the dominant bin to the next-largest peak.

    Bins within ``guard_bins`` of ``k1`` and the DC bin are excluded.
    Returns 0 when no candidate bin exists or the spectrum is silent.
    """
    mag = np.asarray(magnitudes, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    candidates = np.ones(len(mag), dtype=bool)
    candidates[0] = False
    lo = max(0, k1 - guard_bins)
    candidates[lo : k1 + guard_bins + 1] = False
    if not candidates.any():
        return 0.0
    idx = np.flatnonzero(candidates)
    k2 = idx[int(np.argmax(mag[idx]))]
    if mag[k2] == 0:
        return 0.0
    return float(abs(freqs[k2] - freqs[k1]))


def harmonic_ratio(magnitudes: np.ndarray, f1: float, freqs: np.ndarray) -> float:
    """Magnitude at twice the dominant frequency relative to the dominant.

    Returns 0 when ``2*f1`` exceeds the spectrum or the spectrum is silent.
    """
    mag = np.asarray(magnitudes, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    if 2.0 * f1 > freqs[-1]:
        return 0.0
    a1, _ = dominant_amplitude(mag)
    if a1 == 0:
        return 0.0
    k = int(np.argmin(np.abs(freqs - 2.0 * f1)))
    return float(mag[k] / a1)


def default_scales(dt: float, n_samples: int, n_scales: int = 32) -> np.ndarray:
    """Log-spaced wavelet scales from two samples up to a quarter window."""
    if n_samples < 8:
        raise TooShort(f"need at least 8 samples for a scale range, got {n_samples}")
    return np.geomspace(2.0 * dt, n_samples * dt / 4.0, n_scales)


def morlet_cwt(u: np.ndarray, dt: float, scales: np.ndarray) -> np.ndarray:
    """Continuous wavelet transform with an analytic Morlet (omega0 = 6).

    Computed in the frequency domain, one scale per row, with the
    ``1/sqrt(a)`` time-domain normalization (``sqrt(a)`` on the spectrum) so
    moduli are comparable across scales.

    Returns
    -------
    ndarray, shape (n_scales, len(u))
        Complex transform values.
    """
    u = np.asarray(u, dtype=float)
    scales = np.asarray(scales, dtype=float)
    if len(scales) == 0:
        raise InvalidConfig("scales must be non-empty")
    if np.any(scales <= 0):
        raise InvalidConfig("scales must be positive")
    n = len(u)
    spec = np.fft.fft(u)
    omega = 2.0 * np.pi * np.fft.fftfreq(n, d=dt)
    arg = scales[:, None] * omega[None, :]
    psi_hat = np.pi**-0.25 * np.exp(-0.5 * (arg - MORLET_W0) ** 2) * (arg > 0)
    return np.fft.ifft(spec[None, :] * np.sqrt(scales)[:, None] * np.conj(psi_hat), axis=1)


def cwt_max(u: np.ndarray, dt: float, scales: np.ndarray) -> float:
    """Maximum wavelet modulus over all scales and positions."""
    return float(np.abs(morlet_cwt(u, dt, scales)).max())


def _local_extrema(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict local maxima and minima."""
    d = np.diff(u)
    rising = d > 0
    falling = d < 0
    maxima = np.flatnonzero(rising[:-1] & falling[1:]) + 1
    minima = np.flatnonzero(falling[:-1] & rising[1:]) + 1
    return maxima, minima


def _mirrored_envelope(pos: np.ndarray, val: np.ndarray, n: int) -> np.ndarray:
    """Cubic-spline envelope through extrema, mirrored at both boundaries."""
    nb = min(2, len(pos))
    left_p = -pos[:nb][::-1]
    left_v = val[:nb][::-1]
    right_p = 2 * (n - 1) - pos[-nb:][::-1]
    right_v = val[-nb:][::-1]
    p = np.concatenate([left_p, pos, right_p]).astype(float)
    v = np.concatenate([left_v, val, right_v])
    p, keep = np.unique(p, return_index=True)
    v = v[keep]
    spline = CubicSpline(p, v)
    return spline(np.arange(n))


def _sift(u: np.ndarray, max_sift: int = 50, sd_thresh: float = 0.2) -> tuple[np.ndarray, bool]:
    """Extract one mode by iterated envelope-mean removal.

    Returns the mode and whether the Cauchy criterion was met before the
    iteration cap.
    """
    h = u.astype(float).copy()
    for _ in range(max_sift):
        maxima, minima = _local_extrema(h)
        if len(maxima) < 2 or len(minima) < 2:
            return h, True
        upper = _mirrored_envelope(maxima, h[maxima], len(h))
        lower = _mirrored_envelope(minima, h[minima], len(h))
        mean = 0.5 * (upper + lower)
        h_new = h - mean
        denom = float((h**2).sum())
        sd = float(((h - h_new) ** 2).sum()) / denom if denom > 0 else 0.0
        h = h_new
        if sd < sd_thresh:
            return h, True
    return h, False


def _decomposable(u: np.ndarray) -> bool:
    maxima, minima = _local_extrema(u)
    return len(maxima) + len(minima) >= 3


def emd(
    u: np.ndarray, max_imfs: int = 10, max_sift: int = 50, sd_thresh: float = 0.2
) -> ImfSet:
    """Plain empirical mode decomposition.

    Repeatedly sifts the residue until it has fewer than three extrema or
    the mode budget is exhausted.  Reconstruction is exact by construction:
    the residue is the input minus the sum of modes.
    """
    u = np.asarray(u, dtype=float)
    if len(u) < 8:
        raise TooShort(f"EMD needs at least 8 samples, got {len(u)}")
    imfs = []
    residue = u.copy()
    converged = True
    for _ in range(max_imfs):
        if not _decomposable(residue):
            break
        mode, ok = _sift(residue, max_sift, sd_thresh)
        converged = converged and ok
        imfs.append(mode)
        residue = residue - mode
    stack = np.array(imfs) if imfs else np.empty((0, len(u)))
    return ImfSet(imfs=stack, residue=residue, converged=converged)


def ceemdan(
    u: np.ndarray,
    ensemble_size: int = 50,
    noise_scale: float = 0.2,
    seed: int = 0,
    max_imfs: int = 10,
    max_sift: int = 50,
    sd_thresh: float = 0.2,
) -> ImfSet:
    """Staged noise-assisted decomposition with complementary ensembles.

    Stage ``k`` extracts the next mode as the ensemble mean of the first
    sifted mode of ``residue + eps_k * E_k(w_i)``, where ``E_k(w_i)`` is the
    k-th plain-EMD mode of the i-th unit noise realization and ``eps_k``
    scales with the current residue.  Each mode is subtracted from the
    running residue, so the modes plus the final residue reproduce the
    input exactly (up to float roundoff).

    Parameters
    ----------
    u : ndarray
    ensemble_size : int
        Number of noise realizations.
    noise_scale : float
        Noise amplitude as a fraction of the residue's standard deviation.
    seed : int
    max_imfs : int

    Returns
    -------
    ImfSet
        ``converged`` is False when any sift hit the iteration cap.
    """
    u = np.asarray(u, dtype=float)
    n = len(u)
    if n < 8:
        raise TooShort(f"CEEMDAN needs at least 8 samples, got {n}")
    if ensemble_size < 1:
        raise InvalidConfig("ensemble_size must be >= 1")
    if not _decomposable(u):
        return ImfSet(imfs=np.empty((0, n)), residue=u.copy(), converged=True)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((ensemble_size, n))
    noise_modes = [emd(w, max_imfs, max_sift, sd_thresh) for w in noise]

    imfs = []
    residue = u.copy()
    converged = True
    for k in range(max_imfs):
        if not _decomposable(residue):
            break
        eps = noise_scale * float(np.std(residue))
        acc = np.zeros(n)
        for i in range(ensemble_size):
            if k < noise_modes[i].n_imfs and eps > 0:
                perturbed = residue + eps * noise_modes[i].imfs[k]
            else:
                perturbed = residue
            mode, ok = _sift(perturbed, max_sift, sd_thresh)
            converged = converged and ok
            acc += mode
        imf = acc / ensemble_size
        imfs.append(imf)
        residue = residue - imf
    stack = np.array(imfs) if imfs else np.empty((0, n))
    return ImfSet(imfs=stack, residue=residue, converged=converged)


def ceemdan_energy_ratio(u: np.ndarray, modes: ImfSet) -> float:
    """Energy captured by the modes relative to the signal (residue excluded).

    Raises
    ------
    SilentSignal
        If the signal has zero energy.
    """
    u = np.asarray(u, dtype=float)
    total = float((u**2).sum())
    if total <= 0:
        raise SilentSignal("zero-energy signal has no energy ratio")
    if modes.n_imfs == 0:
        return 0.0
    return float((modes.imfs**2).sum() / total)


def window_features(
    window_values: np.ndarray, dt: float, cfg: FeatureConfig | None = None
) -> SpectralFeatures:
    """All six spectral features of one window.

    The window is treated as a single STFT frame for z1 to z4.  z6 falls
    back to 0 (flagged) when the window is shorter than
    ``cfg.ceemdan_min_len`` or carries no energy.
    """
    cfg = cfg or FeatureConfig()
    u = np.asarray(window_values, dtype=float)
    if len(u) < 8:
        raise TooShort(f"window features need at least 8 samples, got {len(u)}")
    if dt <= 0:
        raise InvalidConfig(f"dt must be positive, got {dt}")
    mag = frame_magnitude(u, cfg.window)
    freqs = np.fft.rfftfreq(len(u), d=dt)
    z1, k1 = dominant_amplitude(mag)
    if z1 == 0:
        z2 = z3 = z4 = 0.0
    else:
        z2 = sideband_symmetry(mag, k1, cfg.delta_bins)
        z3 = second_peak_offset(mag, k1, freqs, cfg.guard_bins)
        z4 = harmonic_ratio(mag, float(freqs[k1]), freqs)
    z5 = cwt_max(u, dt, default_scales(dt, len(u), cfg.n_scales))
    z6 = 0.0
    z6_fallback = True
    if len(u) >= cfg.ceemdan_min_len and float((u**2).sum()) > 0:
        modes = ceemdan(
            u,
            ensemble_size=cfg.ensemble_size,
            noise_scale=cfg.noise_scale,
            seed=cfg.seed,
            max_imfs=cfg.max_imfs,
        )
        z6 = ceemdan_energy_ratio(u, modes)
        z6_fallback = False
    return SpectralFeatures(
        z1=z1, z2=z2, z3=z3, z4=z4, z5=z5, z6=z6, k1=k1, z6_fallback=z6_fallback
    )
