"""Functionally-correct sparse compute paths plus dense integer references.

Sparse convolution pairs each nonzero weight (outer loop) against every
nonzero IFM element of the block (inner loop). For a pair at IFM coordinate
(I_row, I_col) and kernel coordinate (W_row, W_col) the output address is
derived from the coordinate difference:

    Psum_row = (I_row - W_row) / stride
    Psum_col = (I_col - W_col) / stride
    Psum_addr = Psum_row * W_o + Psum_col

A pair is valid iff both differences are nonnegative, divisible by the
stride, and the quotients land inside the output window; invalid pairs still
consume a cycle but write nothing, so the trace length per (IFM block,
kernel) pair is exactly N_NZEI * N_NZEW.

Fully-connected layers run as an outer product: one nonzero input element
against its compressed weight column, accumulating at Psum_addr = W_row.

Accumulation is exact in 64-bit internally and must fit signed 32 bits
unless the 16-bit truncation flag is set, in which case results wrap to
int16 (wrapping at the end equals wrapping every step, since mod-2^16
arithmetic is a ring homomorphism).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .bitmap import CompressedBlock, compress_fc_column, decompress_coords, decompress_fc_column
from .errors import ColumnMismatch, GeometryMismatch, IncompleteInputs, ValueOverflow
from .model import CONV, FC, INT16_MAX, INT16_MIN, LayerRecord

INT32_MIN = -(2**31)
INT32_MAX = 2**31 - 1


@dataclass
class MacEvent:
    """One pair operation of the systolic trace."""

    cycle: int
    pe_row: int
    pe_col: int
    i_val: int
    w_val: int
    addr: int | None  # None when the pair is invalid
    valid: bool


@dataclass
class PsumBuffer:
    """Partial-sum accumulators for one (tile, OC) unit."""

    data: np.ndarray  # int32, flat, length H_o*W_o (CONV) or C_o (FC)
    tile: tuple[int, int] | None = None
    oc: int | None = None


def conv_out_dims(h_in: int, w_in: int, h_k: int, w_k: int, stride: int) -> tuple[int, int]:
    h_o = (h_in - h_k) // stride + 1
    w_o = (w_in - w_k) // stride + 1
    if h_k > h_in or w_k > w_in or h_o < 1 or w_o < 1:
        raise GeometryMismatch(
            f"kernel {h_k}x{w_k} with stride {stride} does not fit input {h_in}x{w_in}"
        )
    return h_o, w_o


def _wrap16(a: np.ndarray) -> np.ndarray:
    return ((a + 32768) & 0xFFFF) - 32768


def _finalize(psum64: np.ndarray, truncate: bool) -> np.ndarray:
    if truncate:
        return _wrap16(psum64).astype(np.int32)
    if psum64.size and (psum64.max() > INT32_MAX or psum64.min() < INT32_MIN):
        raise ValueOverflow("partial sum exceeds signed 32 bits")
    return psum64.astype(np.int32)


def sparse_conv_tile(
    ifm_block: CompressedBlock,
    kernel_block: CompressedBlock,
    h_o: int,
    w_o: int,
    stride: int = 1,
    pe: tuple[int, int] = (0, 0),
    truncate: bool = False,
) -> tuple[np.ndarray, list[MacEvent]]:
    """Traced sparse convolution of one IFM block against one kernel.

    Returns (psum delta of length h_o*w_o as int32, full event trace).
    """
    if h_o < 1 or w_o < 1 or stride < 1:
        raise GeometryMismatch(f"bad output geometry h_o={h_o}, w_o={w_o}, stride={stride}")
    if (
        kernel_block.block_dims[0] > ifm_block.block_dims[0]
        or kernel_block.block_dims[1] > ifm_block.block_dims[1]
    ):
        raise GeometryMismatch(
            f"kernel {kernel_block.block_dims} larger than IFM block {ifm_block.block_dims}"
        )
    icoords = decompress_coords(ifm_block)
    wcoords = decompress_coords(kernel_block)
    ivals = ifm_block.values
    wvals = kernel_block.values

    psum = np.zeros(h_o * w_o, dtype=np.int64)
    events: list[MacEvent] = []
    cycle = 0
    for (w_row, w_col), w_val in zip(wcoords, wvals):
        for (i_row, i_col), i_val in zip(icoords, ivals):
            dr = int(i_row) - int(w_row)
            dc = int(i_col) - int(w_col)
            valid = dr >= 0 and dc >= 0 and dr % stride == 0 and dc % stride == 0
            if valid:
                p_row, p_col = dr // stride, dc // stride
                valid = p_row < h_o and p_col < w_o
            if valid:
                addr = p_row * w_o + p_col
                psum[addr] += int(w_val) * int(i_val)
                events.append(MacEvent(cycle, pe[0], pe[1], int(i_val), int(w_val), addr, True))
            else:
                events.append(MacEvent(cycle, pe[0], pe[1], int(i_val), int(w_val), None, False))
            cycle += 1
    return _finalize(psum, truncate), events


def _accumulate_pairs(
    psum64: np.ndarray,
    i_rows: np.ndarray,
    i_cols: np.ndarray,
    i_vals: np.ndarray,
    w_rows: np.ndarray,
    w_cols: np.ndarray,
    w_vals: np.ndarray,
    w_o: int,
    stride: int,
    window: tuple[int, int, int, int],
) -> tuple[int, int]:
    """Vectorized pair accumulation; window bounds the accepted output rows/cols.

    Returns (executed pair count, valid pair count).
    """
    r_lo, r_hi, c_lo, c_hi = window
    dr = i_rows[None, :] - w_rows[:, None]
    dc = i_cols[None, :] - w_cols[:, None]
    ok = (dr >= 0) & (dc >= 0)
    if stride > 1:
        ok &= (dr % stride == 0) & (dc % stride == 0)
    p_row = dr // stride
    p_col = dc // stride
    ok &= (p_row >= r_lo) & (p_row < r_hi) & (p_col >= c_lo) & (p_col < c_hi)
    if ok.any():
        prod = w_vals[:, None] * i_vals[None, :]
        np.add.at(psum64, (p_row * w_o + p_col)[ok], prod[ok])
    return dr.size, int(np.count_nonzero(ok))


def sparse_conv_layer(
    ifm_padded: np.ndarray,
    weights: np.ndarray,
    stride: int = 1,
    truncate: bool = False,
) -> tuple[np.ndarray, dict]:
    """Whole-layer sparse convolution (padding already materialized).

    Accumulates over input channels; bit-equal to dense_conv_oracle.
    """
    c_o, c_i, h_k, w_k = weights.shape
    if ifm_padded.ndim != 3 or ifm_padded.shape[0] != c_i:
        raise GeometryMismatch(
            f"IFM shape {ifm_padded.shape} does not match weights {weights.shape}"
        )
    h_o, w_o = conv_out_dims(ifm_padded.shape[1], ifm_padded.shape[2], h_k, w_k, stride)
    psum = np.zeros((c_o, h_o * w_o), dtype=np.int64)
    window = (0, h_o, 0, w_o)

    channel_nz = []
    for c in range(c_i):
        rows, cols = np.nonzero(ifm_padded[c])
        channel_nz.append((rows, cols, ifm_padded[c][rows, cols].astype(np.int64)))

    executed = valid = 0
    for o in range(c_o):
        acc = psum[o]
        for c in range(c_i):
            i_rows, i_cols, i_vals = channel_nz[c]
            if i_rows.size == 0:
                continue
            w_rows, w_cols = np.nonzero(weights[o, c])
            if w_rows.size == 0:
                continue
            w_vals = weights[o, c][w_rows, w_cols].astype(np.int64)
            e, v = _accumulate_pairs(
                acc, i_rows, i_cols, i_vals, w_rows, w_cols, w_vals, w_o, stride, window
            )
            executed += e
            valid += v
    ofm = _finalize(psum, truncate).reshape(c_o, h_o, w_o)
    return ofm, {"executed_pairs": executed, "valid_pairs": valid}


def dense_conv_oracle(
    ifm: np.ndarray, weights: np.ndarray, stride: int = 1, pad: int = 0
) -> np.ndarray:
    """Direct evaluation of O[o,x,y] = sum_i sum_a sum_b I[i,x*s+a,y*s+b] * W[o,i,a,b].

    Exact int64 arithmetic; this is the correctness reference for the sparse
    path.
    """
    c_o, c_i, h_k, w_k = weights.shape
    a = np.asarray(ifm)
    if a.ndim != 3 or a.shape[0] != c_i:
        raise GeometryMismatch(f"IFM shape {a.shape} does not match weights {weights.shape}")
    if pad:
        a = np.pad(a, ((0, 0), (pad, pad), (pad, pad)))
    conv_out_dims(a.shape[1], a.shape[2], h_k, w_k, stride)
    win = sliding_window_view(a, (h_k, w_k), axis=(1, 2))[:, ::stride, ::stride]
    return np.einsum(
        "oiab,ixyab->oxy", weights.astype(np.int64), win.astype(np.int64)
    )


def sparse_fc_column_step(
    value: int, col_index: int, column_block: CompressedBlock, psum64: np.ndarray
) -> int:
    """Accumulate one nonzero input element against its compressed column.

    Psum_addr is simply the stored row index; returns the pair count executed.
    """
    if column_block.block_dims[1] != 1:
        raise ColumnMismatch(f"block dims {column_block.block_dims} are not a column")
    if column_block.block_dims[0] != psum64.size:
        raise ColumnMismatch(
            f"column length {column_block.block_dims[0]} != psum length {psum64.size}"
        )
    rows, vals = decompress_fc_column(column_block)
    psum64[rows] += int(value) * vals.astype(np.int64)
    return int(rows.size)


def sparse_fc_layer(
    x: np.ndarray, weights: np.ndarray, truncate: bool = False
) -> tuple[np.ndarray, dict]:
    """Outer-product sparse FC: stream nonzero inputs against their columns."""
    c_o, c_i = weights.shape
    if x.shape != (c_i,):
        raise GeometryMismatch(f"input shape {x.shape} does not match weights {weights.shape}")
    psum = np.zeros(c_o, dtype=np.int64)
    executed = 0
    for j in np.flatnonzero(x):
        block = compress_fc_column(weights[:, j])
        executed += sparse_fc_column_step(int(x[j]), int(j), block, psum)
    out = _finalize(psum, truncate)
    return out, {"executed_pairs": executed, "valid_pairs": executed}


def dense_fc_oracle(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return weights.astype(np.int64) @ x.astype(np.int64)


def run_layer(record: LayerRecord, mode: str = "sparse", truncate: bool = False):
    """Compute one layer's OFM; sparse and dense modes are bit-identical."""
    cfg = record.config
    if record.ifm is None or record.weights is None:
        raise IncompleteInputs(f"layer {cfg.name!r} is missing tensors")
    if cfg.kind == CONV:
        if mode == "dense":
            out64 = dense_conv_oracle(record.ifm.data, record.weights.data, cfg.stride)
            ofm = _finalize(out64.reshape(cfg.C_o, -1), truncate).reshape(out64.shape)
            stats = {"executed_pairs": int(out64.size) * cfg.H_k * cfg.W_k * cfg.C_i,
                     "valid_pairs": int(out64.size) * cfg.H_k * cfg.W_k * cfg.C_i}
            return ofm, stats
        return sparse_conv_layer(record.ifm.data, record.weights.data, cfg.stride, truncate)
    if mode == "dense":
        out64 = dense_fc_oracle(record.ifm.data, record.weights.data)
        macs = cfg.C_o * cfg.C_i
        return _finalize(out64, truncate), {"executed_pairs": macs, "valid_pairs": macs}
    return sparse_fc_layer(record.ifm.data, record.weights.data, truncate)


def run_scheduled(record: LayerRecord, schedule, truncate: bool = False):
    """Walk a resolved schedule's loop nest (tile/OC-batch order per the reuse
    strategy, IC groups per the clustering order) and accumulate the OFM.

    Every valid pair belongs to exactly one output window and every window to
    exactly one tile, so any loop order produces the identical OFM.
    """
    cfg = record.config
    if cfg.kind == FC:
        return sparse_fc_layer(record.ifm.data, record.weights.data, truncate)
    ifm = record.ifm.data
    weights = record.weights.data
    h_o, w_o = cfg.H_o, cfg.W_o
    psum = np.zeros((cfg.C_o, h_o * w_o), dtype=np.int64)

    channel_nz = []
    for c in range(cfg.C_i):
        rows, cols = np.nonzero(ifm[c])
        channel_nz.append((rows, cols, ifm[c][rows, cols].astype(np.int64)))

    tiles = [t for t in schedule.plan.tiles if t.has_windows]
    if schedule.t_oc_outer == 1:
        units = [(t, ocb) for t in tiles for ocb in schedule.oc_batches]
    else:
        units = [(t, ocb) for ocb in schedule.oc_batches for t in tiles]

    executed = valid = 0
    for tile, ocb in units:
        window = (tile.out_r0, tile.out_r1, tile.out_c0, tile.out_c1)
        for icg in schedule.ic_groups:
            for o in ocb:
                for c in icg:
                    i_rows, i_cols, i_vals = channel_nz[c]
                    box = (
                        (i_rows >= tile.r0)
                        & (i_rows < tile.r1)
                        & (i_cols >= tile.c0)
                        & (i_cols < tile.c1)
                    )
                    if not box.any():
                        continue
                    w_rows, w_cols = np.nonzero(weights[o, c])
                    if w_rows.size == 0:
                        continue
                    w_vals = weights[o, c][w_rows, w_cols].astype(np.int64)
                    e, v = _accumulate_pairs(
                        psum[o],
                        i_rows[box],
                        i_cols[box],
                        i_vals[box],
                        w_rows,
                        w_cols,
                        w_vals,
                        w_o,
                        cfg.stride,
                        window,
                    )
                    executed += e
                    valid += v
    ofm = _finalize(psum, truncate).reshape(cfg.C_o, h_o, w_o)
    return ofm, {"executed_pairs": executed, "valid_pairs": valid}


def relu(a: np.ndarray) -> np.ndarray:
    return np.maximum(a, 0)


def maxpool2d(a: np.ndarray, k: int = 2, stride: int | None = None) -> np.ndarray:
    """Max pooling over the trailing two dims (channels preserved)."""
    s = stride or k
    if a.shape[-2] < k or a.shape[-1] < k:
        raise GeometryMismatch(f"pool window {k} does not fit {a.shape}")
    win = sliding_window_view(a, (k, k), axis=(-2, -1))[..., ::s, ::s, :, :]
    return win.max(axis=(-2, -1))


def saturate_int16(a: np.ndarray) -> np.ndarray:
    return np.clip(a, INT16_MIN, INT16_MAX).astype(np.int16)
