import json

import numpy as np
import numpy.testing as npt
import pytest

from spectemp.config import PipelineConfig, load_config
from spectemp.core_signal import TimeSeries
from spectemp.dataio import (
    atomic_write_json,
    atomic_write_text,
    load_dataset,
    read_signal_csv,
    write_dataset,
    write_signal_csv,
)
from spectemp.errors import InvalidConfig


# ---------------------------------------------------------------------------
# atomic writers
# ---------------------------------------------------------------------------


def test_atomic_write_text_roundtrip(tmp_path):
    target = tmp_path / "deep" / "nested" / "out.txt"
    atomic_write_text(target, "hello\n")
    assert target.read_text() == "hello\n"
    leftovers = [p for p in target.parent.iterdir() if p.suffix == ".tmp"]
    assert leftovers == []


def test_atomic_write_text_overwrites(tmp_path):
    target = tmp_path / "out.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text() == "second"


def test_atomic_write_json_sorted_and_stable(tmp_path):
    target = tmp_path / "obj.json"
    atomic_write_json(target, {"zeta": 1, "alpha": {"b": 2, "a": 3}})
    text = target.read_text()
    assert text.index('"alpha"') < text.index('"zeta"')
    assert text.endswith("\n")
    assert json.loads(text) == {"zeta": 1, "alpha": {"b": 2, "a": 3}}
    atomic_write_json(tmp_path / "again.json", {"zeta": 1, "alpha": {"b": 2, "a": 3}})
    assert (tmp_path / "again.json").read_text() == text


# ---------------------------------------------------------------------------
# signal CSV
# ---------------------------------------------------------------------------


def _sig(n=50, seed=3, label=2, source_id="sig_a"):
    rng = np.random.default_rng(seed)
    t = np.arange(n) * (1.0 / 3.0)  # awkward non-terminating step
    return TimeSeries(t=t, u=rng.standard_normal(n), label=label, source_id=source_id)


def test_signal_csv_roundtrip_fidelity(tmp_path):
    sig = _sig()
    path = tmp_path / "sig_a.csv"
    write_signal_csv(path, sig)
    back = read_signal_csv(path, label=sig.label, source_id=sig.source_id)
    # ten significant digits survive the trip
    npt.assert_allclose(back.t, sig.t, rtol=1e-9, atol=0)
    npt.assert_allclose(back.u, sig.u, rtol=1e-9, atol=0)
    assert back.label == 2
    assert back.source_id == "sig_a"


def test_read_signal_csv_defaults_source_to_stem(tmp_path):
    path = tmp_path / "trial_007.csv"
    write_signal_csv(path, _sig())
    assert read_signal_csv(path).source_id == "trial_007"


def test_read_signal_csv_rejects_wrong_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(InvalidConfig):
        read_signal_csv(path)


# ---------------------------------------------------------------------------
# dataset directory
# ---------------------------------------------------------------------------


def test_dataset_roundtrip(tmp_path):
    signals = [_sig(seed=i, label=i % 3, source_id=f"c{i % 3}_t{i}") for i in range(6)]
    write_dataset(tmp_path / "ds", signals, extra={"seed": 42})
    back = load_dataset(tmp_path / "ds")
    assert len(back) == 6
    for orig, got in zip(signals, back):
        assert got.label == orig.label
        assert got.source_id == orig.source_id
        npt.assert_allclose(got.u, orig.u, rtol=1e-9)
    manifest = json.loads((tmp_path / "ds" / "manifest.json").read_text())
    assert manifest["seed"] == 42
    assert [e["path"] for e in manifest["signals"]] == [f"{s.source_id}.csv" for s in signals]


def test_load_dataset_requires_manifest(tmp_path):
    with pytest.raises(InvalidConfig):
        load_dataset(tmp_path)
    atomic_write_json(tmp_path / "manifest.json", {"other": 1})
    with pytest.raises(InvalidConfig):
        load_dataset(tmp_path)


# ---------------------------------------------------------------------------
# pipeline config
# ---------------------------------------------------------------------------


def test_config_hash_is_stable_and_sensitive():
    a = PipelineConfig()
    b = PipelineConfig()
    assert a.canonical_json() == b.canonical_json()
    assert a.config_hash() == b.config_hash()
    assert len(a.config_hash()) == 16
    assert all(c in "0123456789abcdef" for c in a.config_hash())
    c = a.replace(seed=43)
    assert c.config_hash() != a.config_hash()
    assert a.seed == 42  # replace does not mutate


def test_canonical_json_sorts_keys():
    keys = list(json.loads(PipelineConfig().canonical_json()))
    assert keys == sorted(keys)


def test_load_config_precedence(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 7, "n_trials": 4}))
    cfg = load_config(path)
    assert (cfg.seed, cfg.n_trials) == (7, 4)
    cfg = load_config(path, overrides={"seed": 9, "duration": None})
    assert cfg.seed == 9  # flag beats file
    assert cfg.n_trials == 4  # file beats default
    assert cfg.duration == 10.0  # None override is ignored


def test_load_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"sed": 7}))
    with pytest.raises(InvalidConfig, match="sed"):
        load_config(path)
    with pytest.raises(InvalidConfig):
        load_config(overrides={"not_a_knob": 1})


def test_load_config_rejects_non_object(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("[1, 2]")
    with pytest.raises(InvalidConfig):
        load_config(path)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        PipelineConfig(n_splits=1).validate()
    with pytest.raises(InvalidConfig):
        PipelineConfig(sampling_ratio=0.0).validate()
    with pytest.raises(InvalidConfig):
        PipelineConfig(trim_alpha=0.5).validate()
    with pytest.raises(InvalidConfig):
        PipelineConfig(win_dur_ratio=1.0).validate()
    PipelineConfig().validate()
