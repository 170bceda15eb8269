"""Tiling, DRAM reuse strategies, and per-layer schedule construction.

IFMs are split into square cells of at most N_is x N_is on the padded map;
an output window belongs to the cell containing its start coordinate, and a
cell's compute extent stretches past its core by up to H_k - stride rows and
columns so every owned window sees its full receptive field. Channels are
batched N_PE at a time on both the input and output side.

DRAM traffic candidates per layer, with I_mem/W_mem the compressed sizes:

    RIF  (reuse IFMs first):    D = W_mem * T_ifm_row * T_ifm_col + I_mem
    RWF  (reuse weights first): D = I_mem * T_oc + W_mem
    FITS_ON_CHIP (weights fit): D = I_mem + W_mem

The cheapest candidate wins (ties prefer keeping IFMs resident). FC layers
always use the FITS form since their input vector is trivially resident.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bitmap import block_bytes
from .clustering import ChannelRanking, identity_groups, make_groups, rank_channels
from .errors import GeometryMismatch, IncompleteInputs
from .model import CONV, FC, LayerConfig, LayerRecord

# Weight-buffer capacity analog: 320 block-RAM units x 4 KiB.
DEFAULT_WEIGHT_BUFFER_BYTES = 320 * 4096

RIF = "RIF"
RWF = "RWF"
FITS = "FITS_ON_CHIP"

# Strategy preference on exact D_mem ties.
_TIE_ORDER = {FITS: 0, RIF: 1, RWF: 2}


@dataclass
class TileExtent:
    """One IFM cell: core region, compute extent (with halo), owned windows."""

    tr: int
    tc: int
    core_r0: int
    core_r1: int
    core_c0: int
    core_c1: int
    r0: int
    r1: int
    c0: int
    c1: int
    out_r0: int
    out_r1: int
    out_c0: int
    out_c1: int

    @property
    def has_windows(self) -> bool:
        return self.out_r1 > self.out_r0 and self.out_c1 > self.out_c0

    @property
    def elems(self) -> int:
        return (self.r1 - self.r0) * (self.c1 - self.c0)

    @property
    def core_elems(self) -> int:
        return (self.core_r1 - self.core_r0) * (self.core_c1 - self.core_c0)


@dataclass
class TilingPlan:
    n_is: int
    n_pe: int
    t_ifm_row: int
    t_ifm_col: int
    t_ofm_row: int
    t_ofm_col: int
    t_ic: int
    t_oc: int
    tiles: list[TileExtent] = field(default_factory=list)


def _axis_cells(extent_p: int, out_extent: int, kernel: int, stride: int, n_is: int):
    """Per-cell (core range, owned output range, compute range) along one axis."""
    n_cells = math.ceil(extent_p / n_is)
    cells = []
    for t in range(n_cells):
        core0 = t * n_is
        core1 = min(core0 + n_is, extent_p)
        # Output windows whose start coordinate lands inside the core.
        o_lo = math.ceil(core0 / stride)
        o_hi = min(out_extent - 1, (core1 - 1) // stride)
        if o_lo <= o_hi:
            lo = o_lo * stride
            hi = o_hi * stride + kernel
            cells.append((core0, core1, o_lo, o_hi + 1, lo, hi))
        else:
            cells.append((core0, core1, 0, 0, core0, core1))
    return cells


def make_tiling(cfg: LayerConfig, n_is: int = 7, n_pe: int = 32) -> TilingPlan:
    """Partition a layer into IFM cells and channel batches."""
    if n_is < 1 or n_pe < 1:
        raise GeometryMismatch("N_is and N_PE must be >= 1")
    t_ic = math.ceil(cfg.C_i / n_pe)
    t_oc = math.ceil(cfg.C_o / n_pe)
    if cfg.kind == FC:
        return TilingPlan(n_is, n_pe, 1, 1, 1, 1, t_ic, t_oc, [])

    rows = _axis_cells(cfg.H_p, cfg.H_o, cfg.H_k, cfg.stride, n_is)
    cols = _axis_cells(cfg.W_p, cfg.W_o, cfg.W_k, cfg.stride, n_is)
    tiles = []
    for tr, (cr0, cr1, or0, or1, rr0, rr1) in enumerate(rows):
        for tc, (cc0, cc1, oc0, oc1, rc0, rc1) in enumerate(cols):
            row_ok = or1 > or0
            col_ok = oc1 > oc0
            tiles.append(
                TileExtent(
                    tr,
                    tc,
                    cr0,
                    cr1,
                    cc0,
                    cc1,
                    rr0,
                    rr1,
                    rc0,
                    rc1,
                    or0 if col_ok else 0,
                    or1 if col_ok else 0,
                    oc0 if row_ok else 0,
                    oc1 if row_ok else 0,
                )
            )
    t_ofm_row = sum(1 for (c0, c1, o0, o1, *_r) in rows if o1 > o0)
    t_ofm_col = sum(1 for (c0, c1, o0, o1, *_r) in cols if o1 > o0)
    return TilingPlan(
        n_is,
        n_pe,
        len(rows),
        len(cols),
        t_ofm_row,
        t_ofm_col,
        t_ic,
        t_oc,
        tiles,
    )


def ifm_mem_bytes(ifm_padded: np.ndarray, plan: TilingPlan) -> int:
    """Compressed IFM bytes: one bitmap block per (channel, core cell).

    Core cells are disjoint, so each element is stored (and streamed) once;
    halo rows are gathered from resident neighbor blocks on-chip.
    """
    total = 0
    for tile in plan.tiles:
        sub = ifm_padded[:, tile.core_r0 : tile.core_r1, tile.core_c0 : tile.core_c1]
        nnz = np.count_nonzero(sub.reshape(sub.shape[0], -1), axis=1)
        rows = tile.core_r1 - tile.core_r0
        cols = tile.core_c1 - tile.core_c0
        per_block = block_bytes(rows, cols, 0)
        total += per_block * sub.shape[0] + 2 * int(nnz.sum())
    return total


def fc_ifm_mem_bytes(x: np.ndarray) -> int:
    return block_bytes(x.size, 1, int(np.count_nonzero(x)))


def weight_mem_bytes(weights: np.ndarray, kind: str = CONV) -> int:
    """Compressed weight bytes: per-kernel blocks (CONV) or per-column (FC)."""
    if kind == FC:
        c_o, c_i = weights.shape
        return c_i * block_bytes(c_o, 1, 0) + 2 * int(np.count_nonzero(weights))
    c_o, c_i, h_k, w_k = weights.shape
    return c_o * c_i * block_bytes(h_k, w_k, 0) + 2 * int(np.count_nonzero(weights))


def dram_cost(
    i_mem: float,
    w_mem: float,
    t_ifm_row: int,
    t_ifm_col: int,
    t_oc: int,
    weight_buffer_capacity: float = DEFAULT_WEIGHT_BUFFER_BYTES,
    kind: str = CONV,
) -> dict[str, float]:
    """All candidate DRAM totals for one layer."""
    if kind == FC:
        return {FITS: i_mem + w_mem}
    cands = {
        RIF: w_mem * t_ifm_row * t_ifm_col + i_mem,
        RWF: i_mem * t_oc + w_mem,
    }
    if w_mem <= weight_buffer_capacity:
        cands[FITS] = i_mem + w_mem
    return cands


@dataclass
class ReuseDecision:
    strategy: str
    d_mem: float
    i_mem: float
    w_mem: float
    candidates: dict[str, float]


def choose_strategy(
    candidates: dict[str, float], i_mem: float, w_mem: float, force: str | None = None
) -> ReuseDecision:
    """Minimal D_mem wins; ties prefer FITS, then RIF (IFMs stay resident)."""
    if not candidates:
        raise IncompleteInputs("no reuse candidates")
    if force is not None:
        name = force.upper() if force.upper() in candidates else force
        if name not in candidates:
            raise IncompleteInputs(f"strategy {force!r} unavailable for this layer")
        return ReuseDecision(name, candidates[name], i_mem, w_mem, dict(candidates))
    name = min(candidates, key=lambda k: (candidates[k], _TIE_ORDER[k]))
    return ReuseDecision(name, candidates[name], i_mem, w_mem, dict(candidates))


# Loop nests: outer OC batches, IFM tile rows/cols, inner OC batches, IC
# batches, then nonzero weights over nonzero IFM elements per PE group.
LOOP_ORDER_RIF = ("t_oc_outer", "t_ifm_row", "t_ifm_col", "t_oc_inner", "t_ic", "nzew", "nzei")
LOOP_ORDER_RWF = LOOP_ORDER_RIF  # same nest; the OC trip counts swap


@dataclass
class LayerSchedule:
    """Resolved per-layer execution plan."""

    plan: TilingPlan
    decision: ReuseDecision
    t_oc_outer: int
    t_oc_inner: int
    loop_order: tuple[str, ...]
    ic_groups: list[list[int]]
    oc_batches: list[list[int]]
    ranking: ChannelRanking | None
    nzew_max: int
    cluster: bool = True


def build_schedule(
    record: LayerRecord,
    n_is: int = 7,
    n_pe: int = 32,
    weight_buffer_capacity: float = DEFAULT_WEIGHT_BUFFER_BYTES,
    cluster: bool = True,
    reuse: str = "auto",
    ic_rank_scope: str = "global",
    nzew_max: int | None = None,
) -> LayerSchedule:
    """Resolve tiling, reuse strategy, channel grouping and loop order.

    nzew_max may be supplied from a pruning report (weights are fixed after
    training); otherwise it is measured from the tensor.
    """
    cfg = record.config
    if record.weights is None or record.ifm is None:
        raise IncompleteInputs(f"layer {cfg.name!r} needs tensors before scheduling")
    plan = make_tiling(cfg, n_is, n_pe)
    weights = record.weights.data
    ifm = record.ifm.data

    if cfg.kind == FC:
        i_mem = fc_ifm_mem_bytes(ifm)
        w_mem = weight_mem_bytes(weights, FC)
        cands = dram_cost(i_mem, w_mem, 1, 1, plan.t_oc, weight_buffer_capacity, FC)
        decision = choose_strategy(cands, i_mem, w_mem)
        counts = np.count_nonzero(weights, axis=0)
        return LayerSchedule(
            plan,
            decision,
            1,
            plan.t_oc,
            LOOP_ORDER_RIF,
            identity_groups(cfg.C_i, n_pe),
            identity_groups(cfg.C_o, n_pe),
            None,
            nzew_max if nzew_max is not None else int(counts.max(initial=0)),
            cluster,
        )

    kernel_nnz = np.count_nonzero(weights.reshape(cfg.C_o, cfg.C_i, -1), axis=2)
    channel_counts = np.count_nonzero(ifm.reshape(cfg.C_i, -1), axis=1)
    ranking = None
    if cluster:
        if ic_rank_scope == "global":
            ranking = rank_channels(channel_counts.tolist(), n_pe)
            ic_groups = make_groups(ranking)
        elif ic_rank_scope == "batch":
            # Rank inside each natural batch of N_PE channels only.
            ic_groups = []
            for grp in identity_groups(cfg.C_i, n_pe):
                grp_sorted = sorted(grp, key=lambda c: (-channel_counts[c], c))
                ic_groups.append(grp_sorted)
        else:
            raise IncompleteInputs(f"unknown ic_rank_scope {ic_rank_scope!r}")
    else:
        ic_groups = identity_groups(cfg.C_i, n_pe)

    i_mem = ifm_mem_bytes(ifm, plan)
    w_mem = weight_mem_bytes(weights, CONV)
    cands = dram_cost(
        i_mem, w_mem, plan.t_ifm_row, plan.t_ifm_col, plan.t_oc, weight_buffer_capacity
    )
    force = None if reuse == "auto" else reuse.upper()
    decision = choose_strategy(cands, i_mem, w_mem, force=force)

    if decision.strategy == RWF:
        t_oc_outer, t_oc_inner = plan.t_oc, 1
    else:
        t_oc_outer, t_oc_inner = 1, plan.t_oc
    return LayerSchedule(
        plan,
        decision,
        t_oc_outer,
        t_oc_inner,
        LOOP_ORDER_RWF if decision.strategy == RWF else LOOP_ORDER_RIF,
        ic_groups,
        identity_groups(cfg.C_o, n_pe),
        ranking,
        nzew_max if nzew_max is not None else int(kernel_nnz.max(initial=0)),
        cluster,
    )
