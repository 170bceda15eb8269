"""Network-level simulation driver, reports, and parameter sweeps.

simulate_network() walks a network layer by layer: schedule (tiling, reuse
strategy, channel grouping), mode selection, cycle/utilization accounting,
the functional pass that produces the OFM (and feeds the next layer through
ReLU + int16 saturation when it has no input of its own), and the energy
model. Results serialize to report.json plus a flat layers.csv.

sweep() re-runs a fixed synthetic roster across one axis (weight sparsity,
IFM sparsity, PE array size, IFM tile size) so scaling behavior can be read
off a single CSV. Points run in parallel; SENSE_SIM_THREADS caps the pool.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dataflow import DEFAULT_WEIGHT_BUFFER_BYTES, build_schedule
from .engine import relu, run_layer, saturate_int16
from .errors import BadSpec, GeometryMismatch
from .model import (
    CONV,
    FC,
    LayerConfig,
    LayerRecord,
    NetworkDescriptor,
    Tensor,
    pad_hw,
    synth_tensor,
)
from .pruning import prune_conv_layer
from .timing import ModePolicy, energy_model, select_mode, simulate_layer_timing, utilization

REPORT_VERSION = 1

# Frozen column order of layers.csv; append-only across report versions.
CSV_COLUMNS = (
    "layer",
    "kind",
    "mode",
    "strategy",
    "cycles",
    "dense_cycles",
    "speedup",
    "u_pe",
    "p_a",
    "p_i",
    "i_mem_bytes",
    "w_mem_bytes",
    "d_mem_bytes",
    "ifm_sparsity",
    "weight_sparsity",
    "energy_total",
    "energy_saving",
)

SWEEP_AXES = ("weight_sparsity", "ifm_sparsity", "pe_size", "tile_size")

DEFAULT_GRIDS = {
    "weight_sparsity": [round(0.1 * i, 1) for i in range(10)],
    "ifm_sparsity": [round(0.1 * i, 1) for i in range(10)],
    "pe_size": [8, 16, 32],
    "tile_size": [14, 7, 4],
}


@dataclass
class SimOptions:
    """Knobs shared by the CLI and the library entry points."""

    n_pe: int = 32
    n_is: int = 7
    mode: str = "auto"  # auto | sparse | dense
    reuse: str = "auto"  # auto | rif | rwf | fits_on_chip
    cluster: bool = True
    truncate: bool = False
    weight_buffer_capacity: float = DEFAULT_WEIGHT_BUFFER_BYTES
    policy: ModePolicy = field(default_factory=ModePolicy)
    dram_energy_per_byte: float = 0.0
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["policy"] = asdict(self.policy)
        return d


@dataclass
class LayerResult:
    layer: str
    kind: str
    mode: str
    strategy: str
    cycles: int
    dense_cycles: int
    speedup: float | None
    u_pe: float
    p_a: float
    p_i: float
    i_mem_bytes: int
    w_mem_bytes: int
    d_mem_bytes: float
    ifm_sparsity: float
    weight_sparsity: float
    energy_total: float
    energy_saving: float | None

    def to_row(self) -> list:
        return [getattr(self, c) for c in CSV_COLUMNS]

    def to_dict(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


@dataclass
class NetworkReport:
    network: str
    options: dict
    layers: list[LayerResult]
    totals: dict

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "network": self.network,
            "options": self.options,
            "totals": self.totals,
            "layers": [l.to_dict() for l in self.layers],
        }


def _chain_activation(prev_ofm: np.ndarray, cfg: LayerConfig) -> Tensor:
    """ReLU + int16 saturation of the previous OFM, shaped for this layer."""
    act = saturate_int16(relu(prev_ofm))
    if cfg.kind == FC:
        act = act.reshape(-1)
        if act.size != cfg.C_i:
            raise GeometryMismatch(
                f"layer {cfg.name!r} expects {cfg.C_i} inputs, previous layer "
                f"produced {act.size}"
            )
        return Tensor(act, cfg.ifm_roles())
    if act.ndim != 3 or act.shape != (cfg.C_i, cfg.H_i, cfg.W_i):
        raise GeometryMismatch(
            f"layer {cfg.name!r} expects IFM {cfg.ifm_dims()}, previous layer "
            f"produced {act.shape}"
        )
    return Tensor(pad_hw(act, cfg.pad), cfg.ifm_roles())


def _synth_missing(rec: LayerRecord, idx: int, seed: int) -> None:
    """Fill absent tensors with seeded synthetic data (half-sparse)."""
    cfg = rec.config
    if rec.weights is None:
        rec.weights = synth_tensor(
            cfg.weight_dims(), 0.5, seed=seed * 1000003 + 2 * idx + 1, roles=cfg.weight_roles()
        )
    if rec.ifm is None:
        t = synth_tensor(cfg.ifm_dims(), 0.5, seed=seed * 1000003 + 2 * idx, roles=cfg.ifm_roles())
        if cfg.kind == CONV:
            t = Tensor(pad_hw(t.data, cfg.pad), t.roles)
        rec.ifm = t


def simulate_network(net: NetworkDescriptor, opts: SimOptions | None = None) -> NetworkReport:
    """Schedule, time, and functionally execute every layer in order."""
    opts = opts or SimOptions()
    if opts.mode not in ("auto", "sparse", "dense"):
        raise BadSpec(f"unknown mode {opts.mode!r}")
    results: list[LayerResult] = []
    prev_ofm: np.ndarray | None = None
    tot = {
        "cycles": 0,
        "dense_cycles": 0,
        "busy": 0,
        "lane_cycles": 0,
        "energy_total": 0.0,
        "dense_energy": 0.0,
        "d_mem_bytes": 0.0,
    }
    mode_counts: dict[str, int] = {}
    strat_counts: dict[str, int] = {}

    for idx, rec in enumerate(net.layers):
        cfg = rec.config
        if rec.ifm is None and prev_ofm is not None:
            rec.ifm = _chain_activation(prev_ofm, cfg)
        _synth_missing(rec, idx, opts.seed)

        schedule = build_schedule(
            rec,
            n_is=opts.n_is,
            n_pe=opts.n_pe,
            weight_buffer_capacity=opts.weight_buffer_capacity,
            cluster=opts.cluster,
            reuse=opts.reuse,
        )
        ifm_s = rec.ifm_sparsity
        w_s = rec.weight_sparsity
        mode = opts.mode if opts.mode != "auto" else select_mode(ifm_s, w_s, opts.policy)

        timing = simulate_layer_timing(rec, schedule, mode)
        dense_t = timing if mode == "dense" else simulate_layer_timing(rec, schedule, "dense")

        ofm, _stats = run_layer(rec, mode, opts.truncate)
        prev_ofm = ofm

        if timing.cycles > 0 and dense_t.cycles > 0:
            util = utilization(timing)
            energy = energy_model(
                timing.cycles,
                dense_t.cycles,
                opts.policy,
                mode,
                dram_bytes=schedule.decision.d_mem,
                dram_energy_per_byte=opts.dram_energy_per_byte,
            )
            speedup = energy.speedup
            saving = energy.compute_saving
            e_total = energy.energy_total
            dense_energy = dense_t.cycles * 1.0 + schedule.decision.d_mem * opts.dram_energy_per_byte
            u_pe, p_a, p_i = util.u_pe, util.p_a, util.p_i
        else:
            # Degenerate layer (no work at all): report zeros, not NaNs.
            speedup = saving = None
            e_total = dense_energy = 0.0
            u_pe = p_a = p_i = 0.0

        res = LayerResult(
            layer=cfg.name,
            kind=cfg.kind,
            mode=mode,
            strategy=schedule.decision.strategy,
            cycles=timing.cycles,
            dense_cycles=dense_t.cycles,
            speedup=speedup,
            u_pe=u_pe,
            p_a=p_a,
            p_i=p_i,
            i_mem_bytes=int(schedule.decision.i_mem),
            w_mem_bytes=int(schedule.decision.w_mem),
            d_mem_bytes=float(schedule.decision.d_mem),
            ifm_sparsity=ifm_s,
            weight_sparsity=w_s,
            energy_total=e_total,
            energy_saving=saving,
        )
        results.append(res)
        tot["cycles"] += timing.cycles
        tot["dense_cycles"] += dense_t.cycles
        tot["busy"] += timing.busy_cycles
        tot["lane_cycles"] += timing.lane_cycles
        tot["energy_total"] += e_total
        tot["dense_energy"] += dense_energy
        tot["d_mem_bytes"] += schedule.decision.d_mem
        mode_counts[mode] = mode_counts.get(mode, 0) + 1
        strat_counts[schedule.decision.strategy] = strat_counts.get(schedule.decision.strategy, 0) + 1

    totals = {
        "cycles": tot["cycles"],
        "dense_cycles": tot["dense_cycles"],
        "speedup": (tot["dense_cycles"] / tot["cycles"]) if tot["cycles"] else None,
        "u_pe": (tot["busy"] / tot["lane_cycles"]) if tot["lane_cycles"] else 0.0,
        "d_mem_bytes": tot["d_mem_bytes"],
        "energy_total": tot["energy_total"],
        "energy_saving": (tot["dense_energy"] / tot["energy_total"]) if tot["energy_total"] else None,
        "modes": mode_counts,
        "strategies": strat_counts,
    }
    return NetworkReport(net.name, opts.to_dict(), results, totals)


# ---------------------------------------------------------------------------
# Sweeps


def standard_roster(seed: int = 0, ifm_sparsity: float = 0.5, weight_keep: float = 0.5) -> NetworkDescriptor:
    """Three small CONV layers used by the sweep axes.

    Kernels are 5x2 (10 elements) and channel counts are multiples of 10, so
    every keep fraction on a 0.1 grid lands on an integer per-kernel count
    and the load-balanced weight count is uniform across PEs.
    """
    shapes = [(10, 8), (20, 16), (30, 32)]
    layers = []
    for i, (c_i, c_o) in enumerate(shapes):
        cfg = LayerConfig(
            kind=CONV, C_i=c_i, C_o=c_o, H_i=7, W_i=7, H_k=5, W_k=2, stride=1, pad=0,
            name=f"conv{i + 1}",
        )
        dense_w = synth_tensor(
            cfg.weight_dims(), 0.0, seed=seed * 97 + 2 * i + 1, roles=cfg.weight_roles()
        )
        pruned, _rep = prune_conv_layer(dense_w.data, weight_keep)
        ifm = synth_tensor(
            cfg.ifm_dims(), ifm_sparsity, seed=seed * 97 + 2 * i, roles=cfg.ifm_roles()
        )
        layers.append(LayerRecord(cfg, ifm, Tensor(pruned, cfg.weight_roles())))
    return NetworkDescriptor("roster", layers)


@dataclass
class SweepResult:
    axis: str
    rows: list[dict]


def _thread_cap(n_points: int) -> int:
    env = os.environ.get("SENSE_SIM_THREADS", "").strip()
    if env:
        cap = int(env)
        if cap < 1:
            raise BadSpec("SENSE_SIM_THREADS must be >= 1")
        return min(cap, n_points)
    return max(1, min(n_points, os.cpu_count() or 1))


def sweep(axis: str, grid=None, opts: SimOptions | None = None) -> SweepResult:
    """Run the roster across one axis; rows come back in grid order.

    Sweeps force sparse mode so the scaling laws are not clipped by the
    mode policy at the dense end of the grid.
    """
    if axis not in SWEEP_AXES:
        raise BadSpec(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    grid = list(DEFAULT_GRIDS[axis] if grid is None else grid)
    if not grid:
        raise BadSpec("sweep grid is empty")
    base = opts or SimOptions()

    def run_point(v):
        # Each axis isolates its variable: the other operand stays dense so
        # the speedup grid starts at exactly 1x.
        o = replace(base, mode="sparse")
        if axis == "weight_sparsity":
            if not 0.0 <= v < 1.0:
                raise BadSpec(f"weight sparsity {v} outside [0, 1)")
            roster = standard_roster(o.seed, ifm_sparsity=0.0, weight_keep=1.0 - v)
        elif axis == "ifm_sparsity":
            if not 0.0 <= v <= 1.0:
                raise BadSpec(f"IFM sparsity {v} outside [0, 1]")
            roster = standard_roster(o.seed, ifm_sparsity=v, weight_keep=1.0)
        elif axis == "pe_size":
            o = replace(o, n_pe=int(v))
            roster = standard_roster(o.seed)
        else:
            o = replace(o, n_is=int(v))
            roster = standard_roster(o.seed)
        rep = simulate_network(roster, o)
        t = rep.totals
        return {
            axis: v,
            "cycles": t["cycles"],
            "dense_cycles": t["dense_cycles"],
            "speedup": t["speedup"],
            "u_pe": t["u_pe"],
            "energy_saving": t["energy_saving"],
            "d_mem_bytes": t["d_mem_bytes"],
            "lane_cycle_product": t["cycles"] * int(v) * int(v) if axis == "pe_size" else None,
        }

    with ThreadPoolExecutor(max_workers=_thread_cap(len(grid))) as ex:
        rows = list(ex.map(run_point, grid))
    return SweepResult(axis, rows)


# ---------------------------------------------------------------------------
# Serialization


def _jsonable(v):
    if v is None or isinstance(v, (str, int, bool)):
        return v
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def write_report(report: NetworkReport, out_dir) -> tuple[Path, Path]:
    """Write report.json and layers.csv; the timestamp lives in meta only so
    repeated runs with the same seed are otherwise byte-comparable."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = report.to_dict()
    doc["meta"] = {"generated_at": datetime.now(timezone.utc).isoformat()}
    json_path = out / "report.json"
    json_path.write_text(json.dumps(_jsonable(doc), indent=2) + "\n")

    csv_path = out / "layers.csv"
    with open(csv_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for layer in report.layers:
            w.writerow(["" if v is None else v for v in layer.to_row()])
    return json_path, csv_path


def write_sweep_csv(result: SweepResult, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    cols = [result.axis, "cycles", "dense_cycles", "speedup", "u_pe", "energy_saving", "d_mem_bytes"]
    if result.axis == "pe_size":
        cols.append("lane_cycle_product")
    with open(p, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(cols)
        for row in result.rows:
            w.writerow(["" if row.get(c) is None else row.get(c) for c in cols])
    return p
