"""Data-driven selection of the sampling interval.

The pipeline estimates a critical frequency from class-averaged PSDs, spans
a bounded candidate band around the implied Nyquist interval, and scores
each candidate interval by a discriminability-versus-redundancy objective.
Per-class curves yield a best (argmax) and a knee (diminishing-returns)
interval; score-weighted means of those give the dataset-level choices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import welch

from .core_signal import TimeSeries, UniformSeries, resample
from .errors import (
    DegenerateClasses,
    DegenerateLabels,
    InvalidConfig,
    SilentSignal,
    TooShort,
)

__all__ = [
    "PsdEstimate",
    "TauParams",
    "TauScoreCurve",
    "CommonTau",
    "TauSelection",
    "estimate_psd",
    "critical_frequency",
    "nyquist_band",
    "anova_f_score",
    "redundancy_penalty",
    "combined_score",
    "sweep_tau",
    "sweep_classes",
    "common_tau",
    "select_intervals",
]


@dataclass
class PsdEstimate:
    """One-sided Welch power spectral density."""

    freqs: np.ndarray
    power: np.ndarray

    def __post_init__(self) -> None:
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.power = np.asarray(self.power, dtype=float)
        if self.freqs.shape != self.power.shape or self.freqs.ndim != 1:
            raise InvalidConfig("freqs and power must be equal-length 1-D arrays")

    @property
    def total_power(self) -> float:
        return float(self.power.sum())


@dataclass
class TauParams:
    """Knobs of the interval search."""

    energy_fraction: float = 0.95
    beta: float = 0.5
    gamma: float = 3.0
    n_candidates: int = 32
    lambda_r: float = 0.5
    lambda_m: float = 0.001
    epsilon: float = 1e-12
    nperseg: int = 4096

    def validate(self) -> None:
        if not 0 < self.energy_fraction <= 1:
            raise InvalidConfig(f"energy_fraction must be in (0, 1], got {self.energy_fraction}")
        if not 0 < self.beta < self.gamma:
            raise InvalidConfig("need 0 < beta < gamma")
        if self.n_candidates < 2:
            raise InvalidConfig("need at least 2 candidate intervals")
        if self.lambda_r < 0 or self.lambda_m < 0:
            raise InvalidConfig("penalty weights must be non-negative")


@dataclass
class TauScoreCurve:
    """Score curve of one class over the candidate intervals."""

    class_label: int
    taus: np.ndarray  # ascending candidate intervals (s)
    scores: np.ndarray  # combined score in [0, 1] per candidate
    best_tau: float
    best_score: float
    knee_tau: float
    nyquist_dt: float

    def __post_init__(self) -> None:
        self.taus = np.asarray(self.taus, dtype=float)
        self.scores = np.asarray(self.scores, dtype=float)


@dataclass
class CommonTau:
    """Score-weighted dataset-level intervals."""

    tau_best: float
    tau_knee: float
    constraint_floor: float


@dataclass
class TauSelection:
    """Full result of the interval search."""

    f_star: float
    f_star_by_class: dict[int, float]
    nyquist_dt: float
    band: tuple[float, float]
    curves: list[TauScoreCurve]
    common: CommonTau


def estimate_psd(series: UniformSeries, nperseg: int = 4096) -> PsdEstimate:
    """Welch PSD with a Hann window and 50% overlap (one-sided density).

    The density scaling makes the integral of the PSD match the signal
    variance, so white noise yields a flat expected spectrum.
    """
    n = len(series.u)
    if n < 8:
        raise TooShort(f"PSD needs at least 8 samples, got {n}")
    nper = min(int(nperseg), n)
    freqs, power = welch(
        series.u,
        fs=1.0 / series.dt,
        window="hann",
        nperseg=nper,
        noverlap=nper // 2,
        detrend="constant",
        scaling="density",
    )
    return PsdEstimate(freqs=freqs, power=power)


def critical_frequency(psd: PsdEstimate, fraction: float = 0.95) -> float:
    """Frequency below which ``fraction`` of the total power lies.

    The cumulative power is linearly interpolated between bins, so the
    result falls within one bin of the exact crossing.

    Raises
    ------
    SilentSignal
        If the PSD carries no power.
    """
    if not 0 < fraction <= 1:
        raise InvalidConfig(f"fraction must be in (0, 1], got {fraction}")
    cum = np.cumsum(psd.power)
    total = cum[-1]
    if total <= 0:
        raise SilentSignal("PSD has zero total power")
    target = fraction * total
    k = int(np.searchsorted(cum, target, side="left"))
    if k == 0:
        return float(psd.freqs[0])
    f0, f1 = psd.freqs[k - 1], psd.freqs[k]
    c0, c1 = cum[k - 1], cum[k]
    if c1 == c0:
        return float(f1)
    return float(f0 + (target - c0) / (c1 - c0) * (f1 - f0))


def nyquist_band(
    f_star: float, beta: float = 0.5, gamma: float = 3.0
) -> tuple[float, tuple[float, float]]:
    """Nyquist interval for ``f_star`` and the candidate band around it.

    Returns
    -------
    (dt_nyq, (lo, hi))
        ``dt_nyq = 1 / (2 * f_star)``, band ``[beta*dt_nyq, gamma*dt_nyq]``.
    """
    if f_star <= 0:
        raise InvalidConfig(f"f_star must be positive, got {f_star}")
    if not 0 < beta < gamma:
        raise InvalidConfig("need 0 < beta < gamma")
    dt_nyq = 1.0 / (2.0 * f_star)
    return dt_nyq, (beta * dt_nyq, gamma * dt_nyq)


def anova_f_score(values_by_class, epsilon: float = 1e-12) -> float:
    """Between-class over within-class sum of squares (no dof scaling).

    ``F = sum_c N_c*(mu_c - mu)^2 / (sum_c sum_i (x_ci - mu_c)^2 + epsilon)``,
    capped at ``1/epsilon`` when the within-class scatter vanishes.

    Raises
    ------
    DegenerateClasses
        With fewer than two groups or any group smaller than two.
    """
    groups = [np.asarray(g, dtype=float) for g in values_by_class]
    if len(groups) < 2:
        raise DegenerateClasses(f"need at least 2 groups, got {len(groups)}")
    if any(len(g) < 2 for g in groups):
        raise DegenerateClasses("every group needs at least 2 samples")
    pooled = np.concatenate(groups)
    mu = pooled.mean()
    between = sum(len(g) * (g.mean() - mu) ** 2 for g in groups)
    within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    return float(min(between / (within + epsilon), 1.0 / epsilon))


def redundancy_penalty(grid_values: np.ndarray, taus: np.ndarray, ell: float) -> float:
    """Mean distance-weighted absolute correlation between grid points.

    ``R = 2/(M*(M-1)) * sum_{i<j} |r(tau_i, tau_j)| * exp(-|tau_i-tau_j|/ell)``
    where ``r`` is the Pearson correlation across samples.  Grid points with
    zero variance contribute zero correlation.

    Parameters
    ----------
    grid_values : ndarray, shape (M, n_samples)
        Signal values of each sample at every grid point.
    taus : ndarray, shape (M,)
        Grid point times.
    ell : float
        Correlation decay length in seconds.
    """
    v = np.asarray(grid_values, dtype=float)
    taus = np.asarray(taus, dtype=float)
    if v.ndim != 2 or len(taus) != v.shape[0]:
        raise InvalidConfig("grid_values must be (M, n) with one row per tau")
    if ell <= 0:
        raise InvalidConfig(f"ell must be positive, got {ell}")
    m = v.shape[0]
    if m < 2:
        return 0.0
    if v.shape[1] < 2:
        raise DegenerateClasses("correlation needs at least 2 samples")
    centered = v - v.mean(axis=1, keepdims=True)
    std = centered.std(axis=1)
    z = np.where(std[:, None] > 0, centered / np.where(std[:, None] > 0, std[:, None], 1.0), 0.0)
    corr = (z @ z.T) / v.shape[1]
    w = np.exp(-np.abs(taus[:, None] - taus[None, :]) / ell)
    weighted = np.abs(corr) * w
    off = weighted.sum() - np.trace(weighted)
    return float(off / (m * (m - 1)))


def combined_score(
    mean_f: float,
    redundancy: float,
    m: int,
    t_span: float,
    lambda_r: float = 0.5,
    lambda_m: float = 0.001,
) -> float:
    """Squashed combination of discriminability and the two penalties.

    ``raw = mean_f - lambda_r*redundancy - lambda_m*(m/t_span)`` mapped to
    ``(0, 1)`` by the logistic function.
    """
    if t_span <= 0:
        raise InvalidConfig(f"t_span must be positive, got {t_span}")
    raw = mean_f - lambda_r * redundancy - lambda_m * (m / t_span)
    return float(1.0 / (1.0 + np.exp(-raw)))


def _knee_index(taus: np.ndarray, scores: np.ndarray) -> int:
    """Index of maximum perpendicular distance from the curve's chord.

    Both axes are normalized to [0, 1] (log scale on tau, since candidates
    are log-spaced) before measuring distances, so the geometry does not
    depend on units.
    """
    x = np.log(taus)
    x = (x - x[0]) / (x[-1] - x[0])
    lo, hi = scores.min(), scores.max()
    y = (scores - lo) / (hi - lo) if hi > lo else np.zeros_like(scores)
    x0, y0 = x[0], y[0]
    dx, dy = x[-1] - x0, y[-1] - y0
    norm = np.hypot(dx, dy)
    if norm == 0:
        return 0
    dist = np.abs(dy * (x - x0) - dx * (y - y0)) / norm
    return int(np.argmax(dist))


def _candidate_grid(band: tuple[float, float], n_candidates: int) -> np.ndarray:
    lo, hi = band
    if not 0 < lo < hi:
        raise InvalidConfig(f"invalid candidate band {band}")
    return np.geomspace(lo, hi, n_candidates)


def _values_at(signals: list[TimeSeries], dtau: float) -> np.ndarray:
    """Matrix of resampled values, one column per signal, rows = grid points."""
    columns = [resample(s, dtau).u for s in signals]
    m = min(len(c) for c in columns)
    return np.stack([c[:m] for c in columns], axis=1)


def _class_mean_f(values: np.ndarray, mask: np.ndarray, epsilon: float) -> float:
    """Mean one-vs-rest F score over all grid points (vectorized)."""
    n1 = int(mask.sum())
    n2 = values.shape[1] - n1
    g1 = values[:, mask]
    g2 = values[:, ~mask]
    mu1 = g1.mean(axis=1)
    mu2 = g2.mean(axis=1)
    mu = values.mean(axis=1)
    between = n1 * (mu1 - mu) ** 2 + n2 * (mu2 - mu) ** 2
    within = ((g1 - mu1[:, None]) ** 2).sum(axis=1) + ((g2 - mu2[:, None]) ** 2).sum(axis=1)
    f = np.minimum(between / (within + epsilon), 1.0 / epsilon)
    return float(f.mean())


def sweep_tau(
    signals: list[TimeSeries],
    target_label: int,
    band: tuple[float, float],
    nyquist_dt: float,
    params: TauParams | None = None,
) -> TauScoreCurve:
    """Score curve of one class over log-spaced candidate intervals.

    At each candidate the signals are resampled, the one-vs-rest F score of
    the target class is averaged over the grid, and the redundancy of the
    target class's own samples is penalized together with the grid size.

    Parameters
    ----------
    signals : list of TimeSeries
        The whole labelled dataset (all classes).
    target_label : int
        Class whose curve is computed.
    band : (lo, hi)
        Candidate interval range in seconds.
    nyquist_dt : float
        Nyquist interval; also the correlation decay length.
    params : TauParams, optional
    """
    p = params or TauParams()
    p.validate()
    labels = np.array([s.label for s in signals])
    if target_label not in labels:
        raise DegenerateLabels(f"no signal carries label {target_label}")
    candidates = _candidate_grid(band, p.n_candidates)
    cache = {dtau: _values_at(signals, dtau) for dtau in candidates}
    return _curve_for_class(signals, labels, target_label, candidates, cache, nyquist_dt, p)


def sweep_classes(
    signals: list[TimeSeries],
    band: tuple[float, float],
    nyquist_dt: float,
    params: TauParams | None = None,
) -> list[TauScoreCurve]:
    """Score curves for every class, sharing the resampling work."""
    p = params or TauParams()
    p.validate()
    labels = np.array([s.label for s in signals])
    uniq = sorted(int(lab) for lab in np.unique(labels))
    if len(uniq) < 2:
        raise DegenerateClasses(f"need at least 2 classes, got {len(uniq)}")
    candidates = _candidate_grid(band, p.n_candidates)
    cache = {dtau: _values_at(signals, dtau) for dtau in candidates}
    return [
        _curve_for_class(signals, labels, lab, candidates, cache, nyquist_dt, p)
        for lab in uniq
    ]


def _curve_for_class(signals, labels, target_label, candidates, cache, nyquist_dt, p):
    t_span = min(s.span for s in signals)
    mask_all = labels == target_label
    scores = np.empty(len(candidates))
    for i, dtau in enumerate(candidates):
        values = cache[dtau]
        m = values.shape[0]
        taus = dtau * np.arange(m)
        mean_f = _class_mean_f(values, mask_all, p.epsilon)
        red = redundancy_penalty(values[:, mask_all], taus, ell=nyquist_dt)
        scores[i] = combined_score(mean_f, red, m, t_span, p.lambda_r, p.lambda_m)
    best = int(np.argmax(scores))
    knee = _knee_index(candidates, scores)
    return TauScoreCurve(
        class_label=int(target_label),
        taus=candidates,
        scores=scores,
        best_tau=float(candidates[best]),
        best_score=float(scores[best]),
        knee_tau=float(candidates[knee]),
        nyquist_dt=float(nyquist_dt),
    )


def common_tau(curves: list[TauScoreCurve]) -> CommonTau:
    """Score-weighted mean of per-class intervals, floored at the Nyquist dt.

    Weights are each curve's best score; the floor is the largest per-class
    Nyquist interval so no class is undersampled.
    """
    if not curves:
        raise DegenerateClasses("no curves given")
    weights = np.array([c.best_score for c in curves])
    best = np.array([c.best_tau for c in curves])
    knee = np.array([c.knee_tau for c in curves])
    floor = max(c.nyquist_dt for c in curves)
    wsum = weights.sum()
    if wsum <= 0:
        raise DegenerateClasses("all curve scores are zero")
    tau_best = float(max(floor, (best * weights).sum() / wsum))
    tau_knee = float(max(floor, (knee * weights).sum() / wsum))
    return CommonTau(tau_best=tau_best, tau_knee=tau_knee, constraint_floor=float(floor))


def select_intervals(
    signals: list[TimeSeries], params: TauParams | None = None
) -> TauSelection:
    """Full interval search over a labelled dataset.

    Averages Welch PSDs within each class, takes the largest per-class
    critical frequency to fix the Nyquist interval and candidate band, then
    sweeps every class and combines the curves.
    """
    p = params or TauParams()
    p.validate()
    labels = np.array([s.label for s in signals])
    uniq = sorted(int(lab) for lab in np.unique(labels))
    if len(uniq) < 2:
        raise DegenerateClasses(f"need at least 2 classes, got {len(uniq)}")
    f_star_by_class: dict[int, float] = {}
    for lab in uniq:
        members = [s for s in signals if s.label == lab]
        psds = []
        for s in members:
            series = resample(s, s.span / (len(s) - 1))
            psds.append(estimate_psd(series, p.nperseg))
        mean_power = np.mean([q.power for q in psds], axis=0)
        f_star_by_class[lab] = critical_frequency(
            PsdEstimate(freqs=psds[0].freqs, power=mean_power), p.energy_fraction
        )
    f_star = max(f_star_by_class.values())
    dt_nyq, band = nyquist_band(f_star, p.beta, p.gamma)
    curves = sweep_classes(signals, band, dt_nyq, p)
    common = common_tau(curves)
    return TauSelection(
        f_star=f_star,
        f_star_by_class=f_star_by_class,
        nyquist_dt=dt_nyq,
        band=band,
        curves=curves,
        common=common,
    )
