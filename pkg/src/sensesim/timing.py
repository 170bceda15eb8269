"""Cycle-approximate timing, utilization, mode policy and energy model.

A systolic step processes one (tile, OC batch, IC group) unit. All PEs of
the group advance in lockstep, so the step is blocked to

    step_cycles = N_NZEI_MAX * N_NZEW_MAX

the product of the group's largest per-tile IFM nonzero count and largest
kernel nonzero count. Each PE is busy for its own N_NZEI * N_NZEW pair
operations and idles for the rest of the step; idle is accounted over
occupied lanes only. Dense mode visits every element, so every lane is busy
for the whole step (tile elements x kernel elements) and utilization is
exactly 1.

Pipeline fill/drain and memory stalls are excluded: double-buffered loads
are assumed to hide DRAM latency, which is costed in bytes by the dataflow
module instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataflow import LayerSchedule, TilingPlan
from .errors import GeometryMismatch, UnresolvedSchedule, ZeroCycles
from .model import CONV, FC, LayerRecord


@dataclass
class ModePolicy:
    """Sparse/dense switching thresholds and the sparse power factor."""

    ifm_threshold: float = 0.30
    weight_threshold: float = 0.20
    sparse_power_factor: float = 1.3


def select_mode(ifm_sparsity: float, weight_sparsity: float, policy: ModePolicy | None = None) -> str:
    """Sparse pays off only when both sparsities clear their thresholds
    (strictly); otherwise the array runs dense."""
    p = policy or ModePolicy()
    for s in (ifm_sparsity, weight_sparsity):
        if not 0.0 <= s <= 1.0:
            raise GeometryMismatch(f"sparsity {s} outside [0, 1]")
    if ifm_sparsity > p.ifm_threshold and weight_sparsity > p.weight_threshold:
        return "sparse"
    return "dense"


@dataclass
class StepCost:
    """Cost of one lockstep group: blocking cycles plus per-PE busy/idle."""

    step_cycles: int
    busy: np.ndarray  # per occupied lane
    lanes: int

    @property
    def idle(self) -> np.ndarray:
        return self.step_cycles - self.busy

    @property
    def total_idle(self) -> int:
        return int(self.step_cycles * self.lanes - self.busy.sum())


def step_cost(nzei, nzew) -> StepCost:
    """Blocking cost of concurrent PEs holding (N_NZEI, N_NZEW) pairs."""
    nzei = np.asarray(nzei, dtype=np.int64)
    nzew = np.asarray(nzew, dtype=np.int64)
    if nzei.shape != nzew.shape:
        raise GeometryMismatch("per-PE count arrays must align")
    if np.any(nzei < 0) or np.any(nzew < 0):
        raise GeometryMismatch("nonzero counts must be >= 0")
    if nzei.size == 0:
        return StepCost(0, np.zeros(0, dtype=np.int64), 0)
    step = int(nzei.max()) * int(nzew.max())
    busy = nzei * nzew
    return StepCost(step, busy, int(nzei.size))


@dataclass
class LayerTiming:
    cycles: int
    busy_cycles: int
    lane_cycles: int
    idle_cycles: int
    steps: int
    mode: str

    @property
    def u_pe(self) -> float:
        return self.busy_cycles / self.lane_cycles if self.lane_cycles else 0.0


@dataclass
class UtilizationReport:
    """P_a = executed pair-ops per cycle, P_i = occupied lanes per cycle."""

    p_a: float
    p_i: float
    u_pe: float
    total_cycles: int
    total_idle: int


def utilization(timing: LayerTiming) -> UtilizationReport:
    if timing.cycles <= 0:
        raise ZeroCycles("utilization undefined over zero cycles")
    return UtilizationReport(
        p_a=timing.busy_cycles / timing.cycles,
        p_i=timing.lane_cycles / timing.cycles,
        u_pe=timing.busy_cycles / timing.lane_cycles,
        total_cycles=timing.cycles,
        total_idle=timing.idle_cycles,
    )


def conv_layer_timing(
    ifm_padded: np.ndarray,
    weights: np.ndarray,
    plan: TilingPlan,
    ic_groups: list[list[int]],
    mode: str = "sparse",
) -> LayerTiming:
    """Sum step costs over the (tile, OC batch, IC group) nest.

    Per-PE N_NZEI uses the channel's count inside the current tile extent
    (halo included), which is where residual post-clustering imbalance
    comes from; N_NZEW uses the PE's own kernel count.
    """
    c_o, c_i, h_k, w_k = weights.shape
    kernel_elems = h_k * w_k
    kernel_nnz = np.count_nonzero(weights.reshape(c_o, c_i, -1), axis=2)
    oc_batches = [list(range(i, min(i + plan.n_pe, c_o))) for i in range(0, c_o, plan.n_pe)]

    cycles = busy = lane_cycles = idle = steps = 0
    for tile in plan.tiles:
        if not tile.has_windows:
            continue
        sub = ifm_padded[:, tile.r0 : tile.r1, tile.c0 : tile.c1]
        cnt = np.count_nonzero(sub.reshape(c_i, -1), axis=1)
        for ocb in oc_batches:
            for icg in ic_groups:
                lanes = len(ocb) * len(icg)
                if mode == "dense":
                    step = tile.elems * kernel_elems
                    busy_step = step * lanes
                else:
                    nzei = cnt[icg]
                    nzew = kernel_nnz[np.ix_(ocb, icg)]
                    step = int(nzei.max()) * int(nzew.max())
                    busy_step = int((nzei[None, :] * nzew).sum())
                if step == 0:
                    continue
                cycles += step
                busy += busy_step
                lane_cycles += step * lanes
                idle += step * lanes - busy_step
                steps += 1
    return LayerTiming(cycles, busy, lane_cycles, idle, steps, mode)


def fc_layer_timing(
    x: np.ndarray,
    weights: np.ndarray,
    n_pe: int = 32,
    mode: str = "sparse",
    clustered: bool = True,
) -> LayerTiming:
    """FC timing on one PE column, outputs processed N_PE rows at a time.

    Within each output batch the participating columns (nonzero inputs) are
    ranked by their sub-column nonzero count when clustering is on, then run
    N_PE at a time; each step is blocked by the group's largest count.
    """
    c_o, c_i = weights.shape
    if x.shape != (c_i,):
        raise GeometryMismatch(f"input shape {x.shape} does not match weights {weights.shape}")
    cycles = busy = lane_cycles = idle = steps = 0
    for b0 in range(0, c_o, n_pe):
        b1 = min(b0 + n_pe, c_o)
        nrows = b1 - b0
        if mode == "dense":
            counts = np.full(c_i, nrows, dtype=np.int64)
        else:
            cols = np.flatnonzero(x)
            counts = np.count_nonzero(weights[b0:b1, :], axis=0)[cols].astype(np.int64)
            if clustered:
                counts = np.sort(counts)[::-1]
        for i in range(0, counts.size, n_pe):
            grp = counts[i : i + n_pe]
            step = int(grp.max()) if grp.size else 0
            if step == 0:
                continue
            lanes = int(grp.size)
            cycles += step
            busy += int(grp.sum())
            lane_cycles += step * lanes
            idle += step * lanes - int(grp.sum())
            steps += 1
    return LayerTiming(cycles, busy, lane_cycles, idle, steps, mode)


def simulate_layer_timing(record: LayerRecord, schedule: LayerSchedule | None, mode: str) -> LayerTiming:
    """Timing of one layer under its resolved schedule."""
    if schedule is None:
        raise UnresolvedSchedule("build the layer schedule before timing")
    cfg = record.config
    if cfg.kind == CONV:
        return conv_layer_timing(
            record.ifm.data, record.weights.data, schedule.plan, schedule.ic_groups, mode
        )
    if cfg.kind != FC:
        raise GeometryMismatch(f"unknown layer kind {cfg.kind!r}")
    return fc_layer_timing(
        record.ifm.data,
        record.weights.data,
        schedule.plan.n_pe,
        mode,
        clustered=schedule.cluster,
    )


@dataclass
class EnergyReport:
    speedup: float
    compute_saving: float  # dense compute energy / sparse compute energy
    energy_compute: float
    energy_dram: float
    energy_total: float


def energy_model(
    cycles_actual: int,
    cycles_dense: int,
    policy: ModePolicy | None = None,
    mode: str = "sparse",
    dram_bytes: float = 0.0,
    dram_energy_per_byte: float = 0.0,
) -> EnergyReport:
    """Normalized energy: dense power 1.0/cycle, sparse costs the power factor.

    compute saving = (dense cycles * 1.0) / (actual cycles * factor), i.e.
    speedup / factor in sparse mode; DRAM adds bytes * energy-per-byte.
    """
    if cycles_actual <= 0 or cycles_dense <= 0:
        raise ZeroCycles("energy model needs positive cycle counts")
    p = policy or ModePolicy()
    factor = p.sparse_power_factor if mode == "sparse" else 1.0
    speedup = cycles_dense / cycles_actual
    compute = cycles_actual * factor
    dram = dram_bytes * dram_energy_per_byte
    return EnergyReport(
        speedup=speedup,
        compute_saving=cycles_dense / compute,
        energy_compute=compute,
        energy_dram=dram,
        energy_total=compute + dram,
    )
