"""Parameter container round trips and corruption handling."""

import numpy as np
import pytest

from mpad.numcore import CheckpointError, load_checkpoint, save_checkpoint


def test_round_trip_is_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {
        "layer.weight": rng.standard_normal((4, 3)),
        "layer.bias": rng.standard_normal((1, 3)),
        "big": rng.standard_normal((17, 9)),
    }
    meta = {"config": {"hidden_dim": 3}, "note": "round trip"}
    path = tmp_path / "model.mpad"
    save_checkpoint(path, arrays, meta)
    loaded, loaded_meta = load_checkpoint(path)
    assert set(loaded) == set(arrays)
    for name in arrays:
        np.testing.assert_array_equal(loaded[name], arrays[name])
    assert loaded_meta["config"] == {"hidden_dim": 3}
    assert loaded_meta["note"] == "round trip"


def test_same_content_same_bytes(tmp_path):
    arrays = {"w": np.arange(6.0).reshape(2, 3)}
    a, b = tmp_path / "a.mpad", tmp_path / "b.mpad"
    save_checkpoint(a, arrays, {"k": 1})
    save_checkpoint(b, arrays, {"k": 1})
    assert a.read_bytes() == b.read_bytes()


def test_truncated_file_rejected(tmp_path):
    path = tmp_path / "model.mpad"
    save_checkpoint(path, {"w": np.ones((8, 8))}, {})
    blob = path.read_bytes()
    path.write_bytes(blob[:-16])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "model.mpad"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_trailing_garbage_rejected(tmp_path):
    path = tmp_path / "model.mpad"
    save_checkpoint(path, {"w": np.ones((2, 2))}, {})
    path.write_bytes(path.read_bytes() + b"extra")
    with pytest.raises(CheckpointError, match="trailing"):
        load_checkpoint(path)


def test_non_2d_entry_rejected(tmp_path):
    with pytest.raises(ValueError, match="2-D"):
        save_checkpoint(tmp_path / "x.mpad", {"v": np.ones(3)}, {})
