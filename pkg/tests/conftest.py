"""Shared fixtures: the golden single-channel trace pair and a network factory."""

import json

import numpy as np
import pytest

from sensesim import LayerConfig, Tensor, synth_tensor, write_raw_tensor
from sensesim.model import pad_hw


def golden_pair():
    """Diagonal 4x4 IFM against a 2-NZE 2x2 kernel; the worked trace example."""
    ifm = np.zeros((4, 4), dtype=np.int16)
    ifm[0, 0], ifm[1, 1], ifm[2, 2], ifm[3, 3] = 10, 20, 30, 40
    ker = np.zeros((2, 2), dtype=np.int16)
    ker[0, 0], ker[1, 1] = 10, 20
    return ifm, ker


# (cycle, i_val, w_val, addr) with None for invalid pairs; weight-outer order.
GOLDEN_EVENTS = [
    (0, 10, 10, 0),
    (1, 20, 10, 4),
    (2, 30, 10, 8),
    (3, 40, 10, None),
    (4, 10, 20, None),
    (5, 20, 20, 0),
    (6, 30, 20, 4),
    (7, 40, 20, 8),
]

GOLDEN_PSUM = {0: 500, 4: 800, 8: 1100}


@pytest.fixture
def golden():
    return golden_pair()


def make_conv_record(c_i, c_o, h, w, h_k, w_k, stride=1, pad=0, ifm_sparsity=0.5,
                     weight_sparsity=0.5, seed=0, name="conv"):
    from sensesim import LayerRecord

    cfg = LayerConfig(kind="CONV", C_i=c_i, C_o=c_o, H_i=h, W_i=w, H_k=h_k, W_k=w_k,
                      stride=stride, pad=pad, name=name)
    ifm = synth_tensor(cfg.ifm_dims(), ifm_sparsity, seed=seed, roles=cfg.ifm_roles())
    wt = synth_tensor(cfg.weight_dims(), weight_sparsity, seed=seed + 1,
                      roles=cfg.weight_roles())
    return LayerRecord(cfg, Tensor(pad_hw(ifm.data, pad), ifm.roles), wt)


@pytest.fixture
def net_dir(tmp_path):
    """Two-layer CONV network on disk; the second layer chains from the first."""
    c1 = dict(kind="CONV", C_i=3, C_o=4, H_i=8, W_i=8, H_k=3, W_k=3, stride=1, pad=1,
              name="c1", ifm_file="c1_ifm.bin", weight_file="c1_w.bin")
    c2 = dict(kind="CONV", C_i=4, C_o=2, H_i=8, W_i=8, H_k=3, W_k=3, stride=1, pad=1,
              name="c2", weight_file="c2_w.bin")
    write_raw_tensor(tmp_path / "c1_ifm.bin", synth_tensor((3, 8, 8), 0.5, seed=11).data)
    write_raw_tensor(tmp_path / "c1_w.bin", synth_tensor((4, 3, 3, 3), 0.6, seed=12).data)
    write_raw_tensor(tmp_path / "c2_w.bin", synth_tensor((2, 4, 3, 3), 0.6, seed=13).data)
    desc = tmp_path / "net.json"
    desc.write_text(json.dumps({"name": "two", "layers": [c1, c2]}))
    return desc
