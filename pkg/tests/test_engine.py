import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sensesim as ss
from sensesim.errors import ColumnMismatch, GeometryMismatch, ValueOverflow
from sensesim.model import pad_hw

from conftest import GOLDEN_EVENTS, GOLDEN_PSUM, make_conv_record


# --- reference oracles -------------------------------------------------------

def ref_conv(ifm, weights, stride=1, pad=0):
    """Six explicit loops, no vectorization; the definition of convolution."""
    c_o, c_i, h_k, w_k = weights.shape
    a = np.pad(ifm, ((0, 0), (pad, pad), (pad, pad))).astype(np.int64)
    h_o = (a.shape[1] - h_k) // stride + 1
    w_o = (a.shape[2] - w_k) // stride + 1
    out = np.zeros((c_o, h_o, w_o), dtype=np.int64)
    for o in range(c_o):
        for i in range(c_i):
            for x in range(h_o):
                for y in range(w_o):
                    for u in range(h_k):
                        for v in range(w_k):
                            out[o, x, y] += a[i, x * stride + u, y * stride + v] * int(
                                weights[o, i, u, v]
                            )
    return out


def ref_wrap16(x):
    return ((int(x) + 2**15) % 2**16) - 2**15


def test_dense_oracle_matches_literal_loops():
    rng = np.random.default_rng(42)
    for _ in range(25):
        c_i, c_o = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        h_k, w_k = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        stride = int(rng.choice([1, 2, 3]))
        pad = int(rng.integers(0, 3))
        h = int(rng.integers(max(1, h_k - 2 * pad), 8))
        w = int(rng.integers(max(1, w_k - 2 * pad), 8))
        if h + 2 * pad < h_k or w + 2 * pad < w_k:
            continue
        ifm = rng.integers(-9, 10, size=(c_i, h, w)).astype(np.int16)
        wt = rng.integers(-9, 10, size=(c_o, c_i, h_k, w_k)).astype(np.int16)
        assert np.array_equal(
            ss.dense_conv_oracle(ifm, wt, stride, pad), ref_conv(ifm, wt, stride, pad)
        )


# --- golden trace ------------------------------------------------------------

def test_golden_trace_events(golden):
    ifm, ker = golden
    psum, events = ss.sparse_conv_tile(ss.compress(ifm), ss.compress(ker), 3, 3)
    assert [(e.cycle, e.i_val, e.w_val, e.addr) for e in events] == GOLDEN_EVENTS
    assert sum(e.valid for e in events) == 6
    assert {i: int(v) for i, v in enumerate(psum) if v} == GOLDEN_PSUM
    # one cycle per weight/IFM nonzero pair, invalid pairs included
    assert len(events) == 4 * 2


def test_golden_trace_matches_dense(golden):
    ifm, ker = golden
    psum, _ = ss.sparse_conv_tile(ss.compress(ifm), ss.compress(ker), 3, 3)
    want = ss.dense_conv_oracle(ifm[None], ker[None, None])
    assert np.array_equal(psum.reshape(3, 3), want[0])


def test_tile_geometry_errors(golden):
    ifm, ker = golden
    with pytest.raises(GeometryMismatch):
        ss.sparse_conv_tile(ss.compress(ker), ss.compress(ifm), 3, 3)  # kernel > block
    with pytest.raises(GeometryMismatch):
        ss.sparse_conv_tile(ss.compress(ifm), ss.compress(ker), 0, 3)


def test_trace_length_invariant():
    rng = np.random.default_rng(3)
    for _ in range(10):
        ifm = ss.synth_tensor((6, 6), float(rng.uniform(0, 1)), seed=int(rng.integers(999))).data
        ker = ss.synth_tensor((3, 3), float(rng.uniform(0, 1)), seed=int(rng.integers(999))).data
        _, events = ss.sparse_conv_tile(ss.compress(ifm), ss.compress(ker), 4, 4)
        assert len(events) == np.count_nonzero(ifm) * np.count_nonzero(ker)


def test_stride_divisibility_filters_pairs():
    # nonzero at (1,1) with kernel nonzero at (0,0): offset (1,1) is not a
    # multiple of stride 2, so the pair must be rejected
    ifm = np.zeros((5, 5), dtype=np.int16)
    ifm[1, 1] = 3
    ifm[2, 2] = 4
    ker = np.zeros((3, 3), dtype=np.int16)
    ker[0, 0] = 2
    psum, events = ss.sparse_conv_tile(ss.compress(ifm), ss.compress(ker), 2, 2, stride=2)
    flags = [e.valid for e in events]
    assert flags == [False, True]
    assert psum.reshape(2, 2)[1, 1] == 8


def test_sparse_layer_matches_oracle_grid():
    for stride in (1, 2, 4):
        for pad in (0, 1, 2):
            rec = make_conv_record(3, 4, 9, 9, 3, 3, stride=stride, pad=pad,
                                   ifm_sparsity=0.4, weight_sparsity=0.6, seed=stride * 10 + pad)
            ifm_unpadded = rec.ifm_interior()
            got, stats = ss.sparse_conv_layer(rec.ifm.data, rec.weights.data, stride)
            want = ss.dense_conv_oracle(ifm_unpadded, rec.weights.data, stride, pad)
            assert np.array_equal(got, want)
            assert stats["valid_pairs"] <= stats["executed_pairs"]


def test_executed_pairs_count():
    rec = make_conv_record(2, 3, 6, 6, 3, 3, seed=5)
    _, stats = ss.sparse_conv_layer(rec.ifm.data, rec.weights.data, 1)
    nzei = [np.count_nonzero(rec.ifm.data[c]) for c in range(2)]
    nzew = np.count_nonzero(rec.weights.data.reshape(3, 2, -1), axis=2)
    want = sum(nzei[c] * int(nzew[o, c]) for o in range(3) for c in range(2))
    assert stats["executed_pairs"] == want


def test_all_zero_inputs():
    ifm = np.zeros((2, 5, 5), dtype=np.int16)
    w = ss.synth_tensor((3, 2, 3, 3), 0.5, seed=1).data
    got, stats = ss.sparse_conv_layer(ifm, w, 1)
    assert not got.any()
    assert stats["executed_pairs"] == 0


def test_fc_matches_oracle():
    rng = np.random.default_rng(8)
    for _ in range(15):
        c_i, c_o = int(rng.integers(1, 120)), int(rng.integers(1, 80))
        x = ss.synth_tensor((c_i,), float(rng.uniform(0, 1)), seed=int(rng.integers(999))).data
        w = ss.synth_tensor((c_o, c_i), float(rng.uniform(0, 1)), seed=int(rng.integers(999))).data
        got, stats = ss.sparse_fc_layer(x, w)
        assert np.array_equal(got, ss.dense_fc_oracle(x, w))
        assert stats["executed_pairs"] == sum(
            np.count_nonzero(w[:, j]) for j in np.flatnonzero(x)
        )


def test_fc_column_step_validation():
    with pytest.raises(ColumnMismatch):
        ss.sparse_fc_column_step(1, 0, ss.compress(np.ones((2, 2), np.int16)), np.zeros(2, np.int64))
    cb = ss.compress_fc_column(np.array([1, 0, 2], np.int16))
    with pytest.raises(ColumnMismatch):
        ss.sparse_fc_column_step(1, 0, cb, np.zeros(4, np.int64))


def test_truncation_wraps_like_int16():
    # two large products on one address overflow 16 bits
    ifm = np.array([[300, 300]], dtype=np.int16)
    ker = np.array([[200, 200]], dtype=np.int16)
    psum, _ = ss.sparse_conv_tile(ss.compress(ifm), ss.compress(ker), 1, 1, truncate=True)
    assert psum[0] == ref_wrap16(300 * 200 + 300 * 200)

    rec = make_conv_record(2, 2, 6, 6, 3, 3, ifm_sparsity=0.0, weight_sparsity=0.0, seed=2)
    exact = ss.dense_conv_oracle(rec.ifm_interior(), rec.weights.data, 1, 0)
    wrapped, _ = ss.sparse_conv_layer(rec.ifm.data, rec.weights.data, 1, truncate=True)
    ref = np.vectorize(ref_wrap16)(exact)
    assert np.array_equal(wrapped, ref)


def test_int32_overflow_detected():
    # 3 * 32767^2 is just past the int32 ceiling
    ifm = np.full((1, 1, 4), 32767, dtype=np.int16)
    w = np.full((1, 1, 1, 3), 32767, dtype=np.int16)
    with pytest.raises(ValueOverflow):
        ss.sparse_conv_layer(ifm, w, 1)
    got, _ = ss.sparse_conv_layer(ifm, w, 1, truncate=True)
    assert got[0, 0, 0] == ref_wrap16(3 * 32767 * 32767)


def test_run_layer_dispatch(golden):
    rec = make_conv_record(2, 2, 6, 6, 3, 3, seed=9)
    sparse, _ = ss.run_layer(rec, "sparse")
    dense, _ = ss.run_layer(rec, "dense")
    assert np.array_equal(sparse, dense)  # modes only change timing, not math


def test_run_scheduled_equals_run_layer():
    for trial, (stride, pad, n_is, n_pe, reuse) in enumerate([
        (1, 0, 7, 32, "auto"),
        (1, 1, 4, 8, "rif"),
        (2, 1, 7, 8, "rwf"),
        (2, 2, 5, 16, "auto"),
        (4, 0, 3, 8, "rif"),
    ]):
        rec = make_conv_record(5, 6, 11, 11, 3, 3, stride=stride, pad=pad, seed=trial)
        cap = 0 if reuse == "rwf" else 10**12
        sch = ss.build_schedule(rec, n_is=n_is, n_pe=n_pe, reuse=reuse,
                                weight_buffer_capacity=cap)
        got, _ = ss.run_scheduled(rec, sch)
        want, _ = ss.run_layer(rec)
        assert np.array_equal(got, want)


def test_helpers():
    a = np.array([[-3, 5], [7, -1]], dtype=np.int32)
    assert np.array_equal(ss.relu(a), [[0, 5], [7, 0]])
    assert ss.saturate_int16(np.array([70000, -70000, 12])).tolist() == [32767, -32768, 12]

    m = np.arange(32, dtype=np.int32).reshape(2, 4, 4)
    pooled = ss.maxpool2d(m, 2)
    # manual 2x2 max pooling of channel 0
    assert pooled[0].tolist() == [[5, 7], [13, 15]]
    assert pooled.shape == (2, 2, 2)


@settings(max_examples=120, deadline=None)
@given(
    c_i=st.integers(1, 3),
    c_o=st.integers(1, 3),
    h=st.integers(3, 8),
    h_k=st.integers(1, 3),
    stride=st.sampled_from([1, 2, 4]),
    pad=st.integers(0, 1),
    s_i=st.floats(0.0, 1.0),
    s_w=st.floats(0.0, 1.0),
    seed=st.integers(0, 9999),
)
def test_sparse_equals_dense_property(c_i, c_o, h, h_k, stride, pad, s_i, s_w, seed):
    if h + 2 * pad < h_k:
        return
    ifm = ss.synth_tensor((c_i, h, h), s_i, seed=seed).data
    w = ss.synth_tensor((c_o, c_i, h_k, h_k), s_w, seed=seed + 1).data
    got, _ = ss.sparse_conv_layer(pad_hw(ifm, pad), w, stride)
    assert np.array_equal(got, ss.dense_conv_oracle(ifm, w, stride, pad))
