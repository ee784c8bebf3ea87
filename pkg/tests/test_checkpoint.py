import numpy as np
import pytest

from cordseg import unet
from cordseg.unet import (CheckpointDimError, CheckpointError, CheckpointMagicError,
                          CheckpointTruncatedError, CheckpointVersionError, UNetConfig)


@pytest.fixture
def saved(tmp_path):
    cfg = UNetConfig(depth=2, base_channels=4)
    params = unet.init_params(cfg, 77)
    path = tmp_path / "model.ckpt"
    unet.save_checkpoint(params, cfg, path)
    return params, cfg, path


def test_round_trip_is_bitwise_identity(saved):
    params, cfg, path = saved
    loaded, loaded_cfg = unet.load_checkpoint(path)
    assert loaded_cfg == cfg
    for a, b in zip(params, loaded):
        assert np.array_equal(a.weights, b.weights)
        assert a.weights.dtype == b.weights.dtype == np.float32
        assert np.array_equal(a.bias, b.bias)


def test_save_twice_gives_identical_bytes(saved, tmp_path):
    params, cfg, path = saved
    other = tmp_path / "again.ckpt"
    unet.save_checkpoint(params, cfg, other)
    assert path.read_bytes() == other.read_bytes()


def test_header_layout(saved):
    _, cfg, path = saved
    blob = path.read_bytes()
    assert blob[:4] == b"UNET"
    assert int.from_bytes(blob[4:8], "little") == 1
    assert int.from_bytes(blob[8:12], "little") == cfg.depth
    assert int.from_bytes(blob[12:16], "little") == cfg.base_channels


def test_bad_magic(saved, tmp_path):
    _, _, path = saved
    corrupt = tmp_path / "bad.ckpt"
    corrupt.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(CheckpointMagicError):
        unet.load_checkpoint(corrupt)


def test_unsupported_version(saved, tmp_path):
    _, _, path = saved
    blob = bytearray(path.read_bytes())
    blob[4:8] = (9).to_bytes(4, "little")
    corrupt = tmp_path / "v9.ckpt"
    corrupt.write_bytes(bytes(blob))
    with pytest.raises(CheckpointVersionError):
        unet.load_checkpoint(corrupt)


def test_truncated_mid_tensor_names_tensor_index(saved, tmp_path):
    _, _, path = saved
    blob = path.read_bytes()
    corrupt = tmp_path / "short.ckpt"
    corrupt.write_bytes(blob[: len(blob) - len(blob) // 3])
    with pytest.raises(CheckpointTruncatedError) as err:
        unet.load_checkpoint(corrupt)
    assert "tensor" in str(err.value)


def test_dim_overflow(saved, tmp_path):
    _, _, path = saved
    blob = bytearray(path.read_bytes())
    # first tensor: rank field sits right after the 24-byte header
    rank_at = 24
    dim_at = rank_at + 4
    blob[dim_at:dim_at + 4] = (1 << 31).to_bytes(4, "little")
    corrupt = tmp_path / "dims.ckpt"
    corrupt.write_bytes(bytes(blob))
    with pytest.raises(CheckpointDimError):
        unet.load_checkpoint(corrupt)


def test_dim_product_overflow_rejected(saved, tmp_path):
    # each dim passes the per-dim bound but the product must still be caught
    _, _, path = saved
    blob = bytearray(path.read_bytes())
    big = (1 << 30).to_bytes(4, "little")
    for slot in range(4):
        at = 24 + 4 + 4 * slot
        blob[at:at + 4] = big
    corrupt = tmp_path / "wrap.ckpt"
    corrupt.write_bytes(bytes(blob))
    with pytest.raises(CheckpointDimError):
        unet.load_checkpoint(corrupt)


def test_trailing_bytes_rejected(saved, tmp_path):
    _, _, path = saved
    corrupt = tmp_path / "extra.ckpt"
    corrupt.write_bytes(path.read_bytes() + b"\0\0")
    with pytest.raises(CheckpointError):
        unet.load_checkpoint(corrupt)


def test_missing_file_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        unet.load_checkpoint(tmp_path / "nope.ckpt")
