"""Command-line interface.

Subcommands cover the whole pipeline::

    spectemp gen          synthesize a labelled dataset directory
    spectemp descriptors  per-signal descriptors and class-overlap summary
    spectemp tau          sampling-interval search -> tau.json
    spectemp features     per-window spectral features at a given interval
    spectemp build        materialize a representation as CSV
    spectemp run          cross-validated classification -> results.csv
    spectemp report       aggregate results into the stability report

Exit codes: 0 on success, 2 on invalid configuration or inputs, 1 on
unexpected runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from . import classify, descriptors, fusion, synthgen, tau_select
from .config import PipelineConfig, load_config
from .core_signal import TimeSeries, resample, trim, windowize
from .dataio import atomic_write_json, atomic_write_text, load_dataset, write_dataset
from .errors import InvalidConfig, SpectempError
from .spectral import FeatureConfig, window_features

THREADS_ENV = "SPECTEMP_THREADS"


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidConfig(f"{THREADS_ENV} must be an integer, got {env!r}")
    return os.cpu_count() or 1


def parallel_map(fn, items, threads: int):
    """Ordered map over items, optionally on a bounded thread pool."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _stamp(cfg: PipelineConfig) -> str:
    return f"# config_hash={cfg.config_hash()} seed={cfg.seed}\n"


def _write_csv(path: Path, frame: pd.DataFrame, cfg: PipelineConfig) -> None:
    text = _stamp(cfg) + frame.to_csv(index=False, float_format="%.10g")
    atomic_write_text(path, text)


def _feature_config(cfg: PipelineConfig) -> FeatureConfig:
    return FeatureConfig(
        delta_bins=cfg.delta_bins,
        guard_bins=cfg.guard_bins,
        n_scales=cfg.n_scales,
        ceemdan_min_len=cfg.ceemdan_min_len,
        ensemble_size=cfg.ceemdan_ensemble,
        noise_scale=cfg.ceemdan_noise,
        seed=cfg.seed,
    )


def _tau_params(cfg: PipelineConfig) -> tau_select.TauParams:
    return tau_select.TauParams(
        energy_fraction=cfg.energy_fraction,
        beta=cfg.beta,
        gamma=cfg.gamma,
        n_candidates=cfg.n_candidates,
        lambda_r=cfg.lambda_r,
        lambda_m=cfg.lambda_m,
        nperseg=cfg.nperseg,
    )


def _softmax_params(cfg: PipelineConfig) -> classify.SoftmaxParams:
    return classify.SoftmaxParams(
        epochs=cfg.epochs,
        eta=cfg.eta,
        lam=cfg.lam,
        batch_size=cfg.batch_size,
        max_steps=cfg.max_steps,
    )


def _resolve_tau(spec: str | None, tau_file: str | None) -> float:
    """Turn a --tau flag into seconds, reading tau.json for symbolic names."""
    if spec is None:
        raise InvalidConfig("--tau is required for this method")
    if spec in ("common_best", "common_knee"):
        if not tau_file:
            raise InvalidConfig(f"--tau {spec} requires --tau-file")
        with open(tau_file) as fh:
            doc = json.load(fh)
        key = "tau_best" if spec == "common_best" else "tau_knee"
        try:
            return float(doc["common"][key])
        except KeyError:
            raise InvalidConfig(f"{tau_file} has no common.{key}")
    try:
        value = float(spec)
    except ValueError:
        raise InvalidConfig(f"--tau must be seconds or common_best/common_knee, got {spec!r}")
    if value <= 0:
        raise InvalidConfig(f"--tau must be positive, got {value}")
    return value


def _build_representation(
    signals: list[TimeSeries], method: str, tau: float | None, cfg: PipelineConfig
) -> fusion.Representation:
    if method == "base":
        return fusion.build_base(
            signals,
            timesteps=cfg.timesteps,
            start_row=cfg.start_row_index,
            sampling_ratio=cfg.sampling_ratio,
        )
    if tau is None:
        raise InvalidConfig(f"method {method!r} needs --tau")
    if method == "sta":
        return fusion.build_sta(
            signals, tau, alpha=cfg.trim_alpha, win_dur_ratio=cfg.win_dur_ratio
        )
    if method == "hstf":
        return fusion.build_hstf(
            signals, tau, alpha=cfg.trim_alpha, win_dur_ratio=cfg.win_dur_ratio,
            feature_cfg=_feature_config(cfg),
        )
    raise InvalidConfig(f"unknown method {method!r}")


def _method_label(method: str, tau: float | None) -> str:
    if method == "base" or tau is None:
        return "base"
    return f"{method}({tau:.4g})"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen(args, cfg: PipelineConfig) -> int:
    beam = synthgen.BeamConfig(
        fs=cfg.fs,
        duration=cfg.duration,
        n_trials=cfg.n_trials,
        seed=cfg.seed,
        noise_snr_db=cfg.noise_snr_db,
    )
    signals = synthgen.generate(beam)
    threads = args.threads
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    from .dataio import write_signal_csv

    def _write(sig: TimeSeries) -> dict:
        name = f"{sig.source_id}.csv"
        write_signal_csv(out / name, sig)
        return {"path": name, "label": sig.label, "source_id": sig.source_id}

    entries = parallel_map(_write, signals, threads)
    atomic_write_json(
        out / "manifest.json",
        {
            "signals": entries,
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "class_names": list(synthgen.CLASS_NAMES),
            "generator": {
                "fs": beam.fs,
                "duration": beam.duration,
                "n_trials": beam.n_trials,
                "noise_snr_db": beam.noise_snr_db,
                "modal_freqs": list(beam.modal_freqs),
                "modal_damping": list(beam.modal_damping),
                "modal_gains": list(beam.modal_gains),
                "class_freq_offsets": list(beam.class_freq_offsets),
                "static_scale": beam.static_scale,
            },
        },
    )
    print(f"wrote {len(signals)} signals to {out}")
    return 0


def cmd_descriptors(args, cfg: PipelineConfig) -> int:
    signals = load_dataset(args.in_dir)
    params = descriptors.DescriptorParams(
        m=cfg.sampen_m,
        r=cfg.sampen_r,
        order=cfg.permen_order,
        delay=cfg.permen_delay,
        kmax=cfg.higuchi_kmax,
        max_len=cfg.descriptor_max_len,
    )

    def _one(sig: TimeSeries) -> descriptors.DescriptorVector:
        series = resample(sig, sig.span / (len(sig) - 1))
        return descriptors.descriptor_vector(series, params)

    vectors = parallel_map(_one, signals, args.threads)
    frame = pd.DataFrame(
        {
            "source_id": [v.source_id for v in vectors],
            "label": [v.label for v in vectors],
            **{
                name: [getattr(v, name) for v in vectors]
                for name in descriptors.DESCRIPTOR_NAMES
            },
        }
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    x = np.array([v.as_array() for v in vectors])
    labels = np.array([v.label for v in vectors])
    stats, dist = descriptors.class_centroids_and_distances(x, labels)
    omega, omega_total = descriptors.overlap_omega(
        descriptors.minmax_normalize(x)[0], labels, n_mc=cfg.overlap_n_mc, seed=cfg.seed
    )
    radar = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "features": list(descriptors.DESCRIPTOR_NAMES),
        "classes": {
            str(lab): {"centroid": st.centroid.tolist(), "count": st.count}
            for lab, st in sorted(stats.items())
        },
        "centroid_distances": dist.tolist(),
        "overlap": omega.tolist(),
        "overlap_total": omega_total,
    }
    if args.format == "json":
        atomic_write_json(out / "descriptors.json", {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "rows": frame.to_dict(orient="records"),
        })
    else:
        _write_csv(out / "descriptors.csv", frame, cfg)
    atomic_write_json(out / "radar.json", radar)
    print(f"descriptors for {len(vectors)} signals -> {out}")
    return 0


def cmd_tau(args, cfg: PipelineConfig) -> int:
    signals = load_dataset(args.in_dir)
    selection = tau_select.select_intervals(signals, _tau_params(cfg))
    doc = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "f_star": selection.f_star,
        "f_star_by_class": {str(k): v for k, v in selection.f_star_by_class.items()},
        "nyquist_dt": selection.nyquist_dt,
        "band": list(selection.band),
        "per_class": [
            {
                "label": c.class_label,
                "nyquist_dt": c.nyquist_dt,
                "best_tau": c.best_tau,
                "best_score": c.best_score,
                "knee_tau": c.knee_tau,
            }
            for c in selection.curves
        ],
        "common": {
            "tau_best": selection.common.tau_best,
            "tau_knee": selection.common.tau_knee,
            "constraint_floor": selection.common.constraint_floor,
        },
    }
    atomic_write_json(args.out, doc)
    if args.curves:
        rows = []
        for c in selection.curves:
            for tau, score in zip(c.taus, c.scores):
                rows.append({"label": c.class_label, "tau": tau, "score": score})
        _write_csv(Path(args.curves), pd.DataFrame(rows), cfg)
    print(
        f"tau_best={selection.common.tau_best:.6g}s "
        f"tau_knee={selection.common.tau_knee:.6g}s -> {args.out}"
    )
    return 0


def cmd_features(args, cfg: PipelineConfig) -> int:
    signals = load_dataset(args.in_dir)
    tau = _resolve_tau(args.tau, args.tau_file)
    n_res = min(len(resample(sig, tau)) for sig in signals)
    window_len = fusion.resolve_window_len(n_res, cfg.win_dur_ratio)
    feature_cfg = _feature_config(cfg)

    def _one(sig: TimeSeries):
        ws = windowize(trim(resample(sig, tau), cfg.trim_alpha), window_len, window_len)
        rows = []
        for m, w in enumerate(ws.windows):
            f = window_features(w, ws.dt, feature_cfg)
            rows.append(
                {
                    "source_id": sig.source_id,
                    "label": sig.label,
                    "window_index": m,
                    "z1": f.z1, "z2": f.z2, "z3": f.z3,
                    "z4": f.z4, "z5": f.z5, "z6": f.z6,
                }
            )
        return rows

    all_rows = [r for rows in parallel_map(_one, signals, args.threads) for r in rows]
    frame = pd.DataFrame(all_rows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "features.csv", frame.drop(columns=["label"]), cfg)
    means = {
        f"z{i}": {
            str(lab): float(grp[f"z{i}"].mean())
            for lab, grp in frame.groupby("label")
        }
        for i in range(1, 7)
    }
    atomic_write_json(
        out / "class_means.json",
        {"config_hash": cfg.config_hash(), "seed": cfg.seed, "tau": tau, "means": means},
    )
    print(f"features for {len(signals)} signals at tau={tau:.6g}s -> {out}")
    return 0


def cmd_build(args, cfg: PipelineConfig) -> int:
    signals = load_dataset(args.in_dir)
    tau = None if args.method == "base" else _resolve_tau(args.tau, args.tau_file)
    rep = _build_representation(signals, args.method, tau, cfg)
    m, d = rep.shape
    rows = []
    for i, sample in enumerate(rep.samples):
        for r in range(m):
            rows.append(
                [i, r, *sample.matrix[r], sample.label]
            )
    frame = pd.DataFrame(
        rows, columns=["sample_id", "row_index", *[f"c{j}" for j in range(d)], "label"]
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "dataset.csv", frame, cfg)
    atomic_write_json(
        out / "dataset.json",
        {
            "config_hash": cfg.config_hash(),
            "seed": cfg.seed,
            "method": args.method,
            "tau": tau,
            "n_samples": len(rep.samples),
            "tokens_per_sample": m,
            "row_dim": d,
            "n_feature_cols": rep.n_feature_cols,
        },
    )
    print(f"{args.method}: {len(rep.samples)} samples of shape ({m}, {d}) -> {out}")
    return 0


def cmd_run(args, cfg: PipelineConfig) -> int:
    signals = load_dataset(args.in_dir)
    tau = None if args.method == "base" else _resolve_tau(args.tau, args.tau_file)
    rep = _build_representation(signals, args.method, tau, cfg)
    method_label = _method_label(args.method, tau)
    results = classify.run_cv(
        rep,
        method_label,
        n_splits=cfg.n_splits,
        seed=cfg.seed,
        softmax_params=_softmax_params(cfg),
        knn_k=cfg.knn_k,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [
            {"model": r.model, "method": r.method, "fold": r.fold,
             "acc": r.acc, "f1": r.f1, "auc": r.auc}
            for r in results
        ]
    )
    _write_csv(out / "results.csv", frame, cfg)
    summary = (
        frame.groupby(["model", "method"], as_index=False)
        .agg(
            acc_mean=("acc", "mean"), acc_std=("acc", "std"),
            f1_mean=("f1", "mean"), f1_std=("f1", "std"),
            auc_mean=("auc", "mean"), auc_std=("auc", "std"),
        )
        .sort_values(["model", "method"])
    )
    _write_csv(out / "summary.csv", summary, cfg)
    report = classify.stability_report(results)
    atomic_write_json(out / "stability.json", _stability_doc(report, cfg))
    for _, row in summary.iterrows():
        print(
            f"{row['model']:8s} {row['method']:14s} "
            f"acc={row['acc_mean']:.3f}±{row['acc_std']:.3f} "
            f"f1={row['f1_mean']:.3f} auc={row['auc_mean']:.3f}"
        )
    return 0


def _stability_doc(report: classify.StabilityReport, cfg: PipelineConfig) -> dict:
    def cell(arr, i, j):
        v = arr[i, j]
        return None if not np.isfinite(v) else float(v)

    return {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "metrics": report.metrics,
        "methods": {
            m: {
                "mean": {k: cell(report.mean, i, j) for j, k in enumerate(report.metrics)},
                "std": {k: cell(report.std, i, j) for j, k in enumerate(report.metrics)},
                "cv": {k: cell(report.cv, i, j) for j, k in enumerate(report.metrics)},
                "balanced_score": {
                    k: cell(report.balanced, i, j) for j, k in enumerate(report.metrics)
                },
            }
            for i, m in enumerate(report.methods)
        },
        "ranking": report.ranking(),
    }


def cmd_report(args, cfg: PipelineConfig) -> int:
    frames = []
    for path in args.results:
        frames.append(pd.read_csv(path, comment="#"))
    table = pd.concat(frames, ignore_index=True)
    results = [
        classify.FoldResult(
            model=row["model"], method=row["method"], fold=int(row["fold"]),
            acc=float(row["acc"]), f1=float(row["f1"]), auc=float(row["auc"]),
        )
        for _, row in table.iterrows()
    ]
    report = classify.stability_report(results)
    atomic_write_json(args.out, _stability_doc(report, cfg))
    print("ranking: " + " > ".join(report.ranking()))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectemp",
        description="Spectro-temporal vibration classification pipeline",
    )
    parser.add_argument("--config", help="JSON file with PipelineConfig overrides")
    parser.add_argument("--seed", type=int, help="root random seed")
    parser.add_argument(
        "--threads", type=int, default=None,
        help=f"worker threads (default: ${THREADS_ENV} or CPU count)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="synthesize a labelled dataset")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.add_argument("--trials", type=int, help="trials per class")
    p.add_argument("--duration", type=float, help="trial duration in seconds")
    p.add_argument("--fs", type=float, help="sampling rate in Hz")
    p.add_argument("--snr", type=float, help="measurement SNR in dB")

    p = sub.add_parser("descriptors", help="per-signal descriptors and overlap")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("tau", help="sampling-interval search")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True, help="output tau.json path")
    p.add_argument("--curves", help="optional CSV of the full score curves")

    p = sub.add_parser("features", help="per-window spectral features")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--tau", required=True, help="seconds, or common_best/common_knee")
    p.add_argument("--tau-file", help="tau.json for symbolic --tau values")
    p.add_argument("--out", required=True)

    p = sub.add_parser("build", help="materialize a representation")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--method", choices=("base", "sta", "hstf"), required=True)
    p.add_argument("--tau", help="seconds, or common_best/common_knee")
    p.add_argument("--tau-file", help="tau.json for symbolic --tau values")
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="cross-validated classification")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--method", choices=("base", "sta", "hstf"), required=True)
    p.add_argument("--tau", help="seconds, or common_best/common_knee")
    p.add_argument("--tau-file", help="tau.json for symbolic --tau values")
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="aggregate results into stability report")
    p.add_argument("--results", nargs="+", required=True, help="results.csv paths")
    p.add_argument("--out", required=True, help="output stability.json path")

    return parser


HANDLERS = {
    "gen": cmd_gen,
    "descriptors": cmd_descriptors,
    "tau": cmd_tau,
    "features": cmd_features,
    "build": cmd_build,
    "run": cmd_run,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides: dict = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.command == "gen":
            for flag, key in (("trials", "n_trials"), ("duration", "duration"),
                              ("fs", "fs"), ("snr", "noise_snr_db")):
                value = getattr(args, flag)
                if value is not None:
                    overrides[key] = value
        cfg = load_config(args.config, overrides)
        if args.threads is None:
            args.threads = default_threads()
        elif args.threads < 1:
            raise InvalidConfig(f"--threads must be >= 1, got {args.threads}")
        return HANDLERS[args.command](args, cfg)
    except (SpectempError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
