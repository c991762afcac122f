"""Signal descriptors and class-overlap analysis.

Seven scalar descriptors summarise each signal: sample entropy, permutation
entropy, Higuchi fractal dimension, spectral flatness, spectral centroid,
RMS, and the 95th percentile of absolute amplitude.  Stacked per class, the
descriptor vectors support centroid-distance and Gaussian-overlap estimates
of how separable the classes are.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.spatial import cKDTree

from .core_signal import UniformSeries
from .errors import (
    DegenerateClass,
    DegenerateClasses,
    DegenerateSignal,
    SilentSignal,
    TooShort,
)

__all__ = [
    "DescriptorParams",
    "DescriptorVector",
    "ClassStats",
    "sample_entropy",
    "permutation_entropy",
    "higuchi_fd",
    "spectral_flatness",
    "spectral_centroid",
    "rms",
    "p95_abs",
    "descriptor_vector",
    "minmax_normalize",
    "class_centroids_and_distances",
    "overlap_omega",
]

DESCRIPTOR_NAMES = ("sampen", "permen", "hfd", "sflat", "scent", "rms", "p95")

#: Finite stand-in for -ln(0/B) when no template pair survives at length m+1.
SAMPEN_CAP = 20.0


@dataclass
class DescriptorParams:
    """Hyperparameters of the descriptor block.

    ``r`` is the sample-entropy tolerance as a fraction of the signal's
    standard deviation.  ``max_len`` optionally stride-decimates long signals
    before the entropy and fractal estimators (the spectral descriptors
    always see the full signal).
    """

    m: int = 2
    r: float = 0.2
    order: int = 3
    delay: int = 1
    kmax: int = 10
    max_len: int | None = None

    def validate(self) -> None:
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.r <= 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if self.order < 2:
            raise ValueError(f"order must be >= 2, got {self.order}")
        if self.delay < 1:
            raise ValueError(f"delay must be >= 1, got {self.delay}")
        if self.kmax < 2:
            raise ValueError(f"kmax must be >= 2, got {self.kmax}")


@dataclass
class DescriptorVector:
    """The seven descriptors of one signal, in a fixed order."""

    sampen: float
    permen: float
    hfd: float
    sflat: float
    scent: float
    rms: float
    p95: float
    label: int | None = None
    source_id: str = ""

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.as_array())):
            raise DegenerateSignal("descriptor vector contains non-finite values")

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.sampen, self.permen, self.hfd, self.sflat, self.scent, self.rms, self.p95],
            dtype=float,
        )


@dataclass
class ClassStats:
    """Per-class summary over normalized descriptor vectors."""

    label: int
    centroid: np.ndarray  # (7,)
    x_min: np.ndarray  # dataset-wide per-feature minimum (7,)
    x_max: np.ndarray  # dataset-wide per-feature maximum (7,)
    count: int


def _embed(u: np.ndarray, m: int) -> np.ndarray:
    """All length-``m`` templates of ``u`` as rows."""
    return sliding_window_view(u, m)


def sample_entropy(u: np.ndarray, m: int = 2, r: float = 0.2) -> float:
    """Sample entropy with Chebyshev distance and self-matches excluded.

    Counts template pairs within tolerance ``r * std(u)`` at lengths ``m``
    and ``m + 1`` (the same ``N - m`` templates at both lengths) and returns
    ``-ln(A/B)``.  A constant signal yields 0; if no pair survives at length
    ``m + 1`` the finite cap ``SAMPEN_CAP`` is returned.

    Parameters
    ----------
    u : ndarray
        Signal values.
    m : int
        Template length.
    r : float
        Tolerance as a fraction of the standard deviation.

    Raises
    ------
    TooShort
        If ``len(u) < m + 2``.
    DegenerateSignal
        If no template pair exists even at length ``m``.
    """
    u = np.asarray(u, dtype=float)
    n = len(u)
    if n < m + 2:
        raise TooShort(f"sample entropy needs at least {m + 2} samples, got {n}")
    tol = r * float(np.std(u))
    xm = _embed(u, m)[: n - m]
    xm1 = _embed(u, m + 1)
    b = _chebyshev_pairs(xm, tol)
    if b == 0:
        raise DegenerateSignal("no template pair within tolerance at length m")
    a = _chebyshev_pairs(xm1, tol)
    if a == 0:
        return SAMPEN_CAP
    return float(-np.log(a / b))


def _chebyshev_pairs(templates: np.ndarray, tol: float) -> int:
    """Ordered template pairs (i != j) with Chebyshev distance <= tol."""
    n = len(templates)
    if n < 2:
        return 0
    if n <= 512:
        d = np.abs(templates[:, None, :] - templates[None, :, :]).max(axis=2)
        return int((d <= tol).sum()) - n
    tree = cKDTree(templates)
    total = tree.count_neighbors(tree, tol, p=np.inf)
    return int(total) - n


def permutation_entropy(u: np.ndarray, order: int = 3, delay: int = 1) -> float:
    """Normalized permutation entropy of ordinal patterns.

    Each window of ``order`` samples spaced ``delay`` apart maps to the
    permutation that sorts it (ties broken by earlier index first).  The
    Shannon entropy of the pattern histogram is normalized by ``ln(order!)``
    so the result lies in ``[0, 1]``.

    Raises
    ------
    TooShort
        If no complete window fits.
    """
    u = np.asarray(u, dtype=float)
    n = len(u)
    n_windows = n - (order - 1) * delay
    if n_windows < 1:
        raise TooShort(
            f"permutation entropy needs {(order - 1) * delay + 1} samples, got {n}"
        )
    idx = np.arange(n_windows)[:, None] + delay * np.arange(order)[None, :]
    patterns = np.argsort(u[idx], axis=1, kind="stable")
    # Encode each permutation as a single integer to histogram it.
    codes = (patterns * (order ** np.arange(order))[None, :]).sum(axis=1)
    _, counts = np.unique(codes, return_counts=True)
    p = counts / counts.sum()
    h = -np.sum(p * np.log(p))
    return float(h / math.log(math.factorial(order)))


def higuchi_fd(u: np.ndarray, kmax: int = 10) -> float:
    """Higuchi fractal dimension.

    Builds the normalized curve lengths ``L(k)`` for ``k = 1..kmax`` and
    returns the slope of ``ln L(k)`` against ``ln(1/k)``.

    Raises
    ------
    TooShort
        If ``len(u) < 2 * kmax``.
    """
    u = np.asarray(u, dtype=float)
    n = len(u)
    if n < 2 * kmax:
        raise TooShort(f"higuchi needs at least {2 * kmax} samples, got {n}")
    lk = np.empty(kmax)
    for k in range(1, kmax + 1):
        lengths = []
        for m in range(k):
            sub = u[m::k]
            n_seg = len(sub) - 1
            if n_seg < 1:
                continue
            dist = np.abs(np.diff(sub)).sum()
            lengths.append(dist * (n - 1) / (n_seg * k) / k)
        lk[k - 1] = np.mean(lengths)
    if np.any(lk <= 0):
        raise DegenerateSignal("constant signal has no curve length")
    k = np.arange(1, kmax + 1)
    slope = np.polyfit(np.log(1.0 / k), np.log(lk), 1)[0]
    return float(slope)


def _power_spectrum(u: np.ndarray) -> np.ndarray:
    """One-sided power spectrum without the DC bin."""
    spec = np.abs(np.fft.rfft(u)) ** 2
    return spec[1:]


def spectral_flatness(u: np.ndarray) -> float:
    """Geometric over arithmetic mean of the one-sided power spectrum.

    The DC bin is excluded and bins are floored at 1e-20 before the
    geometric mean.  Near 1 for white noise, near 0 for a pure tone.

    Raises
    ------
    SilentSignal
        If the spectrum carries no power at all.
    """
    u = np.asarray(u, dtype=float)
    if len(u) < 4:
        raise TooShort(f"spectral flatness needs at least 4 samples, got {len(u)}")
    p = _power_spectrum(u)
    if p.sum() <= 0:
        raise SilentSignal("zero spectral power")
    p = np.maximum(p, 1e-20)
    geo = np.exp(np.mean(np.log(p)))
    return float(geo / np.mean(p))


def spectral_centroid(u: np.ndarray, dt: float) -> float:
    """Power-weighted mean frequency of the one-sided spectrum (DC excluded).

    Raises
    ------
    SilentSignal
        If the spectrum carries no power.
    """
    u = np.asarray(u, dtype=float)
    if len(u) < 4:
        raise TooShort(f"spectral centroid needs at least 4 samples, got {len(u)}")
    p = _power_spectrum(u)
    total = p.sum()
    if total <= 0:
        raise SilentSignal("zero spectral power")
    freqs = np.fft.rfftfreq(len(u), d=dt)[1:]
    return float((freqs * p).sum() / total)


def rms(u: np.ndarray) -> float:
    """Root mean square amplitude."""
    u = np.asarray(u, dtype=float)
    if len(u) == 0:
        raise TooShort("rms of an empty signal")
    return float(np.sqrt(np.mean(u**2)))


def p95_abs(u: np.ndarray) -> float:
    """95th percentile of ``|u|`` with linear (type-7) interpolation."""
    u = np.asarray(u, dtype=float)
    if len(u) == 0:
        raise TooShort("percentile of an empty signal")
    return float(np.percentile(np.abs(u), 95))


def descriptor_vector(
    series: UniformSeries, params: DescriptorParams | None = None
) -> DescriptorVector:
    """Compute all seven descriptors of one uniform series.

    Parameters
    ----------
    series : UniformSeries
    params : DescriptorParams, optional
        Estimator hyperparameters; defaults are used when omitted.
    """
    p = params or DescriptorParams()
    p.validate()
    u = series.u
    u_short = u
    if p.max_len is not None and len(u) > p.max_len:
        stride = int(np.ceil(len(u) / p.max_len))
        u_short = u[::stride]
    return DescriptorVector(
        sampen=sample_entropy(u_short, p.m, p.r),
        permen=permutation_entropy(u_short, p.order, p.delay),
        hfd=higuchi_fd(u_short, p.kmax),
        sflat=spectral_flatness(u),
        scent=spectral_centroid(u, series.dt),
        rms=rms(u),
        p95=p95_abs(u),
        label=series.label,
        source_id=series.source_id,
    )


def minmax_normalize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Column-wise min-max normalization to ``[0, 1]``.

    Columns with zero range map to 0.

    Returns
    -------
    (normalized, x_min, x_max)
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("expected a non-empty 2-D array of descriptor vectors")
    x_min = x.min(axis=0)
    x_max = x.max(axis=0)
    rng = x_max - x_min
    safe = np.where(rng > 0, rng, 1.0)
    xn = (x - x_min) / safe
    xn[:, rng == 0] = 0.0
    return xn, x_min, x_max


def class_centroids_and_distances(
    x: np.ndarray, labels: np.ndarray
) -> tuple[dict[int, ClassStats], np.ndarray]:
    """Class centroids in normalized descriptor space and their distances.

    Parameters
    ----------
    x : ndarray, shape (n, 7)
        Raw descriptor vectors.
    labels : ndarray, shape (n,)
        Integer class labels.

    Returns
    -------
    (stats, dist)
        ``stats`` maps each label to its :class:`ClassStats`; ``dist`` is the
        symmetric Euclidean distance matrix between centroids, indexed by the
        sorted label order.
    """
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    if len(x) != len(labels):
        raise DegenerateClasses("labels and vectors differ in length")
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise DegenerateClasses(f"need at least 2 classes, got {len(uniq)}")
    xn, x_min, x_max = minmax_normalize(x)
    stats: dict[int, ClassStats] = {}
    centroids = []
    for lab in uniq:
        mask = labels == lab
        centroid = xn[mask].mean(axis=0)
        stats[int(lab)] = ClassStats(
            label=int(lab),
            centroid=centroid,
            x_min=x_min,
            x_max=x_max,
            count=int(mask.sum()),
        )
        centroids.append(centroid)
    c = np.asarray(centroids)
    diff = c[:, None, :] - c[None, :, :]
    dist = np.sqrt((diff**2).sum(axis=2))
    return stats, dist


def overlap_omega(
    x: np.ndarray,
    labels: np.ndarray,
    n_mc: int = 100_000,
    seed: int = 0,
) -> tuple[np.ndarray, float]:
    """Pairwise Gaussian class-overlap estimates by importance sampling.

    Each class is modelled as a diagonal-covariance Gaussian over its
    vectors.  For a pair ``(i, j)`` the overlap is
    ``integral of min(p_i, p_j)``, estimated by sampling from the equal
    mixture ``(p_i + p_j) / 2``; the integrand ``min/q`` is bounded in
    ``[0, 1]`` so the estimate is stable.  Diagonal entries are exactly 1.

    Parameters
    ----------
    x : ndarray, shape (n, d)
        Descriptor vectors (already normalized or raw; the measure is
        affine-invariant only through the fitted Gaussians).
    labels : ndarray, shape (n,)
    n_mc : int
        Monte Carlo draws per pair.
    seed : int

    Returns
    -------
    (omega, total)
        ``omega`` is the symmetric pairwise matrix in sorted label order;
        ``total`` sums the off-diagonal entries over ordered pairs.

    Raises
    ------
    DegenerateClasses
        If fewer than 2 classes or a class has fewer than 2 vectors.
    DegenerateClass
        If a class has zero variance in every feature.
    """
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise DegenerateClasses(f"need at least 2 classes, got {len(uniq)}")
    means = []
    variances = []
    for lab in uniq:
        grp = x[labels == lab]
        if len(grp) < 2:
            raise DegenerateClasses(f"class {lab} has fewer than 2 vectors")
        var = grp.var(axis=0)
        if np.all(var == 0):
            raise DegenerateClass(f"class {lab} has zero variance in all features")
        means.append(grp.mean(axis=0))
        variances.append(np.maximum(var, 1e-9))
    k = len(uniq)
    omega = np.eye(k)
    rng = np.random.default_rng(seed)
    for i in range(k):
        for j in range(i + 1, k):
            omega[i, j] = omega[j, i] = _pair_overlap(
                means[i], variances[i], means[j], variances[j], n_mc, rng
            )
    total = float(omega[~np.eye(k, dtype=bool)].sum())
    return omega, total


def _log_gauss(x: np.ndarray, mean: np.ndarray, var: np.ndarray) -> np.ndarray:
    return -0.5 * (((x - mean) ** 2) / var + np.log(2 * np.pi * var)).sum(axis=1)


def _pair_overlap(m1, v1, m2, v2, n_mc, rng) -> float:
    half = n_mc // 2
    s1 = m1 + np.sqrt(v1) * rng.standard_normal((half, len(m1)))
    s2 = m2 + np.sqrt(v2) * rng.standard_normal((n_mc - half, len(m2)))
    samples = np.vstack([s1, s2])
    lp1 = _log_gauss(samples, m1, v1)
    lp2 = _log_gauss(samples, m2, v2)
    lmin = np.minimum(lp1, lp2)
    lmax = np.maximum(lp1, lp2)
    # min(p1,p2) / (0.5*(p1+p2)) computed in log space for stability
    gap = np.minimum(lmax - lmin, 700.0)
    ratio = 2.0 / (1.0 + np.exp(gap))
    return float(np.mean(ratio))
