"""File formats: per-signal CSV, the dataset manifest, and atomic writes.

A dataset directory holds one ``t,u`` CSV per signal plus ``manifest.json``
listing every file with its label and source id.  All writers go through a
temp-file-and-rename so partially written artifacts never appear under
their final name.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd

from .core_signal import TimeSeries
from .errors import InvalidConfig

__all__ = [
    "atomic_write_text",
    "atomic_write_json",
    "write_signal_csv",
    "read_signal_csv",
    "write_dataset",
    "load_dataset",
]

FLOAT_FMT = "%.10g"


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to ``path`` via a temp file in the same directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: str | Path, obj) -> None:
    """Serialize ``obj`` as deterministic JSON (sorted keys) and write it."""
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_signal_csv(path: str | Path, signal: TimeSeries) -> None:
    """Write one signal as a two-column ``t,u`` CSV."""
    frame = pd.DataFrame({"t": signal.t, "u": signal.u})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        frame.to_csv(tmp, index=False, float_format=FLOAT_FMT)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_signal_csv(path: str | Path, label: int | None = None, source_id: str = "") -> TimeSeries:
    """Read a ``t,u`` CSV back into a TimeSeries."""
    frame = pd.read_csv(path, comment="#")
    if "t" not in frame.columns or "u" not in frame.columns:
        raise InvalidConfig(f"{path}: expected columns 't' and 'u'")
    return TimeSeries(
        t=frame["t"].to_numpy(dtype=float),
        u=frame["u"].to_numpy(dtype=float),
        label=label,
        source_id=source_id or Path(path).stem,
    )


def write_dataset(dirpath: str | Path, signals: list[TimeSeries], extra: dict | None = None) -> None:
    """Write every signal and a manifest into a directory.

    The manifest lists relative paths, labels and source ids; ``extra``
    entries (e.g. the generator config echo) are merged in.
    """
    dirpath = Path(dirpath)
    dirpath.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, sig in enumerate(signals):
        name = f"{sig.source_id or f'signal_{i:04d}'}.csv"
        write_signal_csv(dirpath / name, sig)
        entries.append({"path": name, "label": sig.label, "source_id": sig.source_id})
    manifest = {"signals": entries}
    if extra:
        manifest.update(extra)
    atomic_write_json(dirpath / "manifest.json", manifest)


def load_dataset(dirpath: str | Path) -> list[TimeSeries]:
    """Load all signals listed in a directory's manifest."""
    dirpath = Path(dirpath)
    manifest_path = dirpath / "manifest.json"
    if not manifest_path.exists():
        raise InvalidConfig(f"no manifest.json in {dirpath}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if "signals" not in manifest:
        raise InvalidConfig(f"{manifest_path}: missing 'signals' key")
    signals = []
    for entry in manifest["signals"]:
        label = entry.get("label")
        signals.append(
            read_signal_csv(
                dirpath / entry["path"],
                label=int(label) if label is not None else None,
                source_id=entry.get("source_id", ""),
            )
        )
    return signals
