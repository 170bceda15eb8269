import json

import numpy as np
import pytest

import sensesim as ss
from sensesim.errors import (
    GeometryMismatch,
    MissingFile,
    ShapeMismatch,
    ValueOverflow,
)
from sensesim.model import crop_hw, pad_hw


def test_synth_exact_zero_count():
    for s in (0.0, 0.25, 0.5, 0.832, 1.0):
        t = ss.synth_tensor((6, 9, 9), s, seed=2)
        n = t.data.size
        want_zeros = int(np.floor(s * n + 0.5))
        assert n - np.count_nonzero(t.data) == want_zeros


def test_synth_value_range_and_determinism():
    a = ss.synth_tensor((500,), 0.4, value_range=(-5, 5), seed=9).data
    nz = a[a != 0]
    assert nz.min() >= -5 and nz.max() <= 5
    b = ss.synth_tensor((500,), 0.4, value_range=(-5, 5), seed=9).data
    assert np.array_equal(a, b)
    c = ss.synth_tensor((500,), 0.4, value_range=(-5, 5), seed=10).data
    assert not np.array_equal(a, c)


def test_tensor_rejects_out_of_range():
    with pytest.raises(ValueOverflow):
        ss.Tensor(np.array([40000], dtype=np.int32))
    with pytest.raises(ValueOverflow):
        ss.Tensor(np.array([-33000], dtype=np.int64))


def test_raw_tensor_roundtrip(tmp_path):
    a = ss.synth_tensor((3, 5, 4), 0.3, seed=1).data
    p = tmp_path / "t.bin"
    ss.write_raw_tensor(p, a)
    assert p.stat().st_size == a.size * 2
    b = ss.read_raw_tensor(p, (3, 5, 4))
    assert np.array_equal(a, b)
    with pytest.raises(ShapeMismatch):
        ss.read_raw_tensor(p, (3, 5, 5))


def test_pad_crop_inverse():
    a = ss.synth_tensor((2, 4, 4), 0.5, seed=3).data
    p = pad_hw(a, 2)
    assert p.shape == (2, 8, 8)
    assert p[:, :2].sum() == 0 and p[:, -2:].sum() == 0
    assert np.array_equal(crop_hw(p, 2), a)


def test_layer_config_output_dims():
    cfg = ss.LayerConfig(kind="CONV", C_i=3, C_o=8, H_i=14, W_i=14, H_k=5, W_k=5,
                         stride=2, pad=1)
    # padded 16x16, windows at stride 2: (16-5)//2+1
    assert cfg.H_p == 16 and cfg.H_o == 6 and cfg.W_o == 6
    with pytest.raises(GeometryMismatch):
        ss.LayerConfig(kind="CONV", C_i=1, C_o=1, H_i=2, W_i=2, H_k=5, W_k=5,
                       stride=1, pad=0)


def test_fc_config_is_vector_shaped():
    cfg = ss.LayerConfig(kind="FC", C_i=128, C_o=10)
    assert cfg.ifm_dims() == (128,)
    assert cfg.weight_dims() == (10, 128)


def test_network_roundtrip(net_dir, tmp_path):
    net = ss.load_network(net_dir)
    assert len(net.layers) == 2
    assert net.layers[0].ifm.data.shape == (3, 10, 10)  # pad=1 materialized
    assert net.layers[1].ifm is None  # chained at simulation time

    out = tmp_path / "saved"
    ss.save_network(net, out)
    again = ss.load_network(out / "network.json")
    assert np.array_equal(again.layers[0].ifm.data, net.layers[0].ifm.data)
    assert np.array_equal(again.layers[0].weights.data, net.layers[0].weights.data)
    # on-disk tensor is the unpadded original
    raw = ss.read_raw_tensor(out / net.layers[0].ifm_file, (3, 8, 8))
    assert np.array_equal(raw, crop_hw(net.layers[0].ifm.data, 1))


def test_load_network_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        ss.load_network(tmp_path / "nope.json")


def test_chain_mismatch_warns(tmp_path):
    layers = [
        dict(kind="CONV", C_i=2, C_o=3, H_i=6, W_i=6, H_k=3, W_k=3, weight_file="a.bin"),
        dict(kind="CONV", C_i=5, C_o=2, H_i=4, W_i=4, H_k=3, W_k=3, weight_file="b.bin"),
    ]
    ss.write_raw_tensor(tmp_path / "a.bin", ss.synth_tensor((3, 2, 3, 3), 0.5, seed=1).data)
    ss.write_raw_tensor(tmp_path / "b.bin", ss.synth_tensor((2, 5, 3, 3), 0.5, seed=2).data)
    p = tmp_path / "net.json"
    p.write_text(json.dumps({"layers": layers}))
    with pytest.warns(UserWarning, match="does not chain"):
        ss.load_network(p)


def test_sparsity_statistics_ignore_padding():
    rec = ss.LayerRecord(
        ss.LayerConfig(kind="CONV", C_i=1, C_o=1, H_i=2, W_i=2, H_k=1, W_k=1, pad=1),
        ss.Tensor(pad_hw(np.array([[[1, 0], [2, 3]]], dtype=np.int16), 1)),
        ss.Tensor(np.ones((1, 1, 1, 1), dtype=np.int16)),
    )
    assert rec.ifm_sparsity == 0.25
    assert rec.weight_sparsity == 0.0
