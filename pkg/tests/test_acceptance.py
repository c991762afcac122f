"""Acceptance gate: one test per headline guarantee, at pinned tolerances.

Run with ``pytest tests/test_acceptance.py -v`` to get one pass/fail line
per criterion; each test also prints a short ``[acceptance]`` verdict with
the measured numbers (visible with ``-s`` or ``-rA``).
"""

import json
import time

import numpy as np
import numpy.testing as npt
import pytest
from scipy.stats import norm

from spectemp.classify import (
    StabilityReport,
    macro_f1,
    run_cv,
    softmax_loss_and_grad,
)
from spectemp.core_signal import UniformSeries
from spectemp.descriptors import (
    overlap_omega,
    permutation_entropy,
    rms,
    p95_abs,
    sample_entropy,
)
from spectemp.fusion import build_base, build_hstf, build_sta
from spectemp.spectral import FeatureConfig, ceemdan, stft, window_features
from spectemp.synthgen import BeamConfig, generate
from spectemp.tau_select import (
    TauParams,
    TauScoreCurve,
    anova_f_score,
    common_tau,
    estimate_psd,
    select_intervals,
)


def _verdict(line: str) -> None:
    print(f"[acceptance] {line}")


# ---------------------------------------------------------------------------
# 1. score-weighted common interval on the reference per-class table
# ---------------------------------------------------------------------------


def test_common_interval_from_reference_score_table():
    best = (0.021, 0.020, 0.020, 0.018, 0.019)
    knee = (0.007, 0.010, 0.007, 0.008, 0.008)
    s_star = (0.507, 0.491, 0.523, 0.563, 0.581)
    nyq = 0.007
    curves = [
        TauScoreCurve(
            class_label=i,
            taus=np.array([k, b]),
            scores=np.array([s / 2, s]),
            best_tau=b,
            best_score=s,
            knee_tau=k,
            nyquist_dt=nyq,
        )
        for i, (b, k, s) in enumerate(zip(best, knee, s_star))
    ]
    result = common_tau(curves)

    # independent arithmetic: plain-Python weighted means
    w_total = sum(s_star)
    exp_best = sum(s * b for s, b in zip(s_star, best)) / w_total
    exp_knee = sum(s * k for s, k in zip(s_star, knee)) / w_total
    assert result.tau_best == pytest.approx(exp_best, rel=1e-12)
    assert result.tau_knee == pytest.approx(exp_knee, rel=1e-12)

    # headline values at the stated tolerance
    assert abs(result.tau_best - 0.0196) <= 1e-4
    assert abs(result.tau_knee - 0.00798) <= 1e-4

    # the per-class floor sits below both outputs, so it stays inactive
    assert result.constraint_floor == nyq
    assert result.tau_knee > result.constraint_floor

    elapsed = min(
        _timed(lambda: common_tau(curves)) for _ in range(5)
    )
    assert elapsed < 1e-3
    _verdict(
        f"common interval: best={result.tau_best:.17g} knee={result.tau_knee:.17g} "
        f"({elapsed * 1e6:.0f} us)"
    )


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


# ---------------------------------------------------------------------------
# 2. balanced-score table from the reference mean/CV summaries
# ---------------------------------------------------------------------------


def test_balanced_score_table_reproduction():
    methods = ["raw_runs", "aligned_20ms", "aligned_8ms", "hybrid_20ms", "hybrid_8ms"]
    mean = [
        [0.657, 0.608, 0.861],
        [0.933, 0.928, 0.974],
        [0.914, 0.910, 0.973],
        [0.950, 0.950, 0.987],
        [0.954, 0.953, 0.989],
    ]
    cv = [
        [0.344, 0.447, 0.121],
        [0.114, 0.125, 0.057],
        [0.113, 0.123, 0.058],
        [0.070, 0.070, 0.020],
        [0.055, 0.056, 0.019],
    ]
    expected = np.array(
        [
            [0.431, 0.336, 0.757],
            [0.826, 0.812, 0.919],
            [0.811, 0.798, 0.917],
            [0.883, 0.883, 0.967],
            [0.902, 0.900, 0.970],
        ]
    )
    report = StabilityReport.from_mean_cv(methods, ["acc", "f1", "auc"], mean, cv)
    npt.assert_allclose(report.balanced, expected, atol=0.0015)
    assert report.ranking()[0] == "hybrid_8ms"
    worst = float(np.abs(report.balanced - expected).max())
    _verdict(f"balanced-score table: 15/15 cells within 0.0015 (worst |err|={worst:.5f})")


# ---------------------------------------------------------------------------
# 3. representation quality ordering on the synthetic rig, three root seeds
# ---------------------------------------------------------------------------


def test_hybrid_windows_beat_aligned_and_baseline_across_seeds():
    t_start = time.perf_counter()
    for root_seed in (42, 43, 44):
        signals = generate(BeamConfig(seed=root_seed))
        assert len(signals) == 200
        selection = select_intervals(signals, TauParams())
        tau_knee = selection.common.tau_knee

        reps = {
            "base": build_base(signals),
            "sta": build_sta(signals, tau_knee),
            "hstf": build_hstf(signals, tau_knee),
        }
        acc = {}
        for name, rep in reps.items():
            results = run_cv(rep, name, n_splits=5, seed=root_seed, models=("softmax",))
            acc[name] = float(np.mean([r.acc for r in results]))
        assert acc["hstf"] >= acc["sta"] >= acc["base"], (root_seed, acc)
        assert acc["hstf"] >= 0.90, (root_seed, acc)
        assert acc["base"] <= 0.80, (root_seed, acc)
        _verdict(
            f"seed {root_seed}: tau_knee={tau_knee:.4g}s "
            f"base={acc['base']:.3f} sta={acc['sta']:.3f} hstf={acc['hstf']:.3f}"
        )
    elapsed = time.perf_counter() - t_start
    assert elapsed < 600.0
    _verdict(f"three-seed pipeline finished in {elapsed:.1f}s (< 600s)")


# ---------------------------------------------------------------------------
# 4. independent oracles agree with the implementations
# ---------------------------------------------------------------------------


def _brute_sample_entropy(u: np.ndarray, m: int, r: float) -> float:
    u = np.asarray(u, dtype=float)
    tol = r * float(np.std(u))
    n = len(u)

    def count(mm: int) -> int:
        total = 0
        n_t = n - m  # same template count at both lengths
        for i in range(n_t):
            for j in range(n_t):
                if i == j:
                    continue
                if np.max(np.abs(u[i : i + mm] - u[j : j + mm])) <= tol:
                    total += 1
        return total

    b = count(m)
    a = count(m + 1)
    if b == 0:
        raise AssertionError("degenerate brute case")
    if a == 0:
        return 20.0
    return float(-np.log(a / b))


def _brute_permutation_entropy(u: np.ndarray, order: int, delay: int) -> float:
    from itertools import permutations
    from math import factorial, log

    u = np.asarray(u, dtype=float)
    counts: dict[tuple, int] = {}
    for i in range(len(u) - (order - 1) * delay):
        window = u[i : i + (order - 1) * delay + 1 : delay]
        pattern = tuple(sorted(range(order), key=lambda idx: (window[idx], idx)))
        counts[pattern] = counts.get(pattern, 0) + 1
    total = sum(counts.values())
    h = -sum((c / total) * log(c / total) for c in counts.values())
    return h / log(factorial(order))


def _two_pass_anova(groups) -> float:
    all_x = np.concatenate(groups)
    grand = all_x.mean()
    between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    within = sum(((g - g.mean()) ** 2).sum() for g in groups)
    eps = 1e-12
    return min(between / (within + eps), 1.0 / eps)


def test_independent_oracles_agree_with_implementations():
    rng = np.random.default_rng(12)

    # variance-ratio score vs a textbook two-pass computation
    worst_f = 0.0
    for _ in range(20):
        groups = [rng.standard_normal(rng.integers(5, 30)) + rng.uniform(-1, 1)
                  for _ in range(4)]
        got = anova_f_score(groups)
        want = _two_pass_anova(groups)
        worst_f = max(worst_f, abs(got - want) / want)
    assert worst_f < 1e-10

    # entropies vs brute-force O(N^2) references on short signals
    for n in (60, 150, 200):
        u = rng.standard_normal(n)
        assert sample_entropy(u, m=2, r=0.2) == _brute_sample_entropy(u, 2, 0.2)
        assert permutation_entropy(u, 3, 1) == pytest.approx(
            _brute_permutation_entropy(u, 3, 1), abs=1e-15
        )

    # macro-F1 vs confusion-matrix hand arithmetic
    y_true = np.array([1, 1, 1, 1, 1, 0, 0, 0, 0, 0])
    y_pred = np.array([1, 1, 1, 0, 0, 1, 0, 0, 0, 0])
    assert macro_f1(y_true, y_pred, 2) == pytest.approx(23 / 33, abs=1e-15)

    # Monte-Carlo class overlap vs the 1-D two-Gaussian closed form
    sigma, d = 0.05, 0.1
    x0 = rng.normal(0.30, sigma, 4000)
    x1 = rng.normal(0.30 + d, sigma, 4000)
    x = np.concatenate([x0, x1])[:, None]
    labels = np.repeat([0, 1], 4000)
    omega, _ = overlap_omega(x, labels, n_mc=100_000, seed=5)
    closed = 2.0 * norm.cdf(-d / (2 * sigma))
    assert omega[0, 1] == pytest.approx(closed, abs=0.02)
    _verdict(
        f"oracles: anova rel={worst_f:.2e}, entropies exact, "
        f"overlap {omega[0, 1]:.4f} vs closed form {closed:.4f}"
    )


# ---------------------------------------------------------------------------
# 5. numerical integrity bounds
# ---------------------------------------------------------------------------


def test_numerical_integrity_bounds():
    rng = np.random.default_rng(3)

    # softmax gradient vs central differences
    x = rng.standard_normal((15, 3))
    y = rng.integers(0, 3, 15)
    w = 0.4 * rng.standard_normal((3, 3))
    b = 0.1 * rng.standard_normal(3)
    _, gw, gb = softmax_loss_and_grad(w, b, x, y, 1e-3)
    h = 1e-6
    worst_grad = 0.0
    for arr, grad in ((w, gw), (b, gb)):
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            ix = it.multi_index
            orig = arr[ix]
            arr[ix] = orig + h
            lp = softmax_loss_and_grad(w, b, x, y, 1e-3)[0]
            arr[ix] = orig - h
            lm = softmax_loss_and_grad(w, b, x, y, 1e-3)[0]
            arr[ix] = orig
            num = (lp - lm) / (2 * h)
            worst_grad = max(worst_grad, abs(grad[ix] - num) / max(abs(num), 1e-8))
    assert worst_grad < 1e-5

    # noise-assisted decomposition reconstructs its input
    t = np.arange(512) / 1000.0
    u = np.sin(2 * np.pi * 50 * t) + np.sin(2 * np.pi * 5 * t)
    dec = ceemdan(u, ensemble_size=20, seed=3)
    recon_err = float(np.abs(dec.imfs.sum(axis=0) + dec.residue - u).max() / np.abs(u).max())
    assert recon_err < 1e-6

    # one-sided short-time magnitudes conserve per-frame energy
    from scipy.signal import get_window

    sig = UniformSeries(u=rng.standard_normal(256), dt=0.01)
    spec = stft(sig, window_len=64, hop=64, window="hann")
    taper = get_window("hann", 64, fftbins=True)
    worst_pars = 0.0
    for m in range(spec.magnitudes.shape[0]):
        frame = sig.u[m * 64 : m * 64 + 64] * taper
        mags = spec.magnitudes[m]
        spectral = (mags[0] ** 2 + 2 * (mags[1:-1] ** 2).sum() + mags[-1] ** 2) / 64
        worst_pars = max(worst_pars, abs(spectral - (frame**2).sum()))
    assert worst_pars < 1e-9

    # spectral density integrates back to the signal variance
    noise = rng.standard_normal(2**15)
    series = UniformSeries(u=noise, dt=1 / 2000.0)
    psd = estimate_psd(series, nperseg=1024)
    integral = float(np.trapezoid(psd.power, psd.freqs))
    assert integral == pytest.approx(float(np.var(noise)), rel=0.05)
    _verdict(
        f"numerics: grad rel={worst_grad:.2e}, recon rel={recon_err:.2e}, "
        f"parseval abs={worst_pars:.2e}, psd integral rel="
        f"{abs(integral - np.var(noise)) / np.var(noise):.3f}"
    )


# ---------------------------------------------------------------------------
# 6. byte-identical artifacts under a fixed config hash and seed
# ---------------------------------------------------------------------------


def test_cli_reruns_are_byte_identical(tmp_path):
    from spectemp.cli import main

    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(
        json.dumps(
            {
                "duration": 1.0,
                "n_trials": 5,
                "seed": 11,
                "start_row_index": 2000,
                "n_candidates": 8,
                "epochs": 100,
            }
        )
    )
    dataset = tmp_path / "dataset"
    assert main(["--config", str(cfg_path), "gen", "--out", str(dataset)]) == 0

    pairs = []
    for run in ("a", "b"):
        tau_out = tmp_path / f"tau_{run}.json"
        assert main(["--config", str(cfg_path), "tau",
                     "--in", str(dataset), "--out", str(tau_out)]) == 0
        run_out = tmp_path / f"run_{run}"
        assert main(["--config", str(cfg_path), "run",
                     "--in", str(dataset), "--method", "sta",
                     "--tau", "0.01", "--out", str(run_out)]) == 0
        pairs.append((tau_out.read_bytes(), (run_out / "results.csv").read_bytes()))
    assert pairs[0][0] == pairs[1][0], "tau.json differs between identical runs"
    assert pairs[0][1] == pairs[1][1], "results.csv differs between identical runs"
    _verdict("reruns: tau.json and results.csv byte-identical")


# ---------------------------------------------------------------------------
# 7. exact scaling behavior under amplitude doubling
# ---------------------------------------------------------------------------


def test_amplitude_doubling_scales_features_exactly():
    rng = np.random.default_rng(8)
    u = rng.standard_normal(256)
    k = 2.0
    cfg = FeatureConfig(ensemble_size=10)  # 256 >= ceemdan_min_len: z6 active
    a = window_features(u, 0.001, cfg)
    b = window_features(k * u, 0.001, cfg)
    assert not a.z6_fallback and not b.z6_fallback

    # linear features scale with the amplitude, bit for bit
    assert b.z1 == k * a.z1
    assert b.z5 == k * a.z5
    assert rms(k * u) == k * rms(u)
    assert p95_abs(k * u) == k * p95_abs(u)

    # normalized features are exactly invariant
    assert b.z2 == a.z2
    assert b.z3 == a.z3
    assert b.z4 == a.z4
    assert b.z6 == a.z6
    assert permutation_entropy(k * u, 3, 1) == permutation_entropy(u, 3, 1)
    _verdict("amplitude doubling: z1/z5/rms/p95 double, z2/z3/z4/z6/permen invariant")
