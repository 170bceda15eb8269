"""Command line front end.

Subcommands:

    prune       load-balance prune a network's weights, write it back out
    compress    pack a raw int16 tensor file into a bitmap block container
    decompress  unpack a block container back to the raw tensor file
    simulate    full network simulation -> report.json + layers.csv
    sweep       run the synthetic roster across one axis -> CSV
    trace       cycle trace of one IFM channel against one kernel

Usage errors exit with status 2 (argparse); domain errors print one line to
stderr and exit with status 1.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bitmap import compress, compress_fc_column, decompress, read_blocks, write_blocks
from .dataflow import DEFAULT_WEIGHT_BUFFER_BYTES
from .engine import conv_out_dims, sparse_conv_tile
from .errors import SenseSimError
from .model import CONV, FC, Tensor, load_network, read_raw_tensor, save_network
from .pruning import PruneSpec, prune_conv_layer, prune_fc_layer
from .report import (
    DEFAULT_GRIDS,
    SWEEP_AXES,
    SimOptions,
    simulate_network,
    sweep,
    write_report,
    write_sweep_csv,
)
from .timing import ModePolicy


def _add_prune(sub) -> None:
    p = sub.add_parser("prune", help="load-balance prune a network's weights")
    p.add_argument("--model", required=True, help="network descriptor JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--conv-keep", type=float, default=0.5, help="kept fraction per CONV kernel")
    p.add_argument("--fc-keep", type=float, default=0.2, help="kept fraction per FC matrix")


def _add_compress(sub) -> None:
    p = sub.add_parser("compress", help="pack a raw tensor into bitmap blocks")
    p.add_argument("--input", required=True, help="raw little-endian int16 file")
    p.add_argument("--out", required=True, help="block container to write")
    p.add_argument("--kind", choices=[CONV, FC], default=CONV)
    p.add_argument("--co", type=int, required=True, help="output channels")
    p.add_argument("--ci", type=int, required=True, help="input channels")
    p.add_argument("--hk", type=int, help="kernel rows (CONV)")
    p.add_argument("--wk", type=int, help="kernel cols (CONV)")


def _add_decompress(sub) -> None:
    p = sub.add_parser("decompress", help="unpack a block container to raw int16")
    p.add_argument("--input", required=True, help="block container file")
    p.add_argument("--out", required=True, help="raw tensor file to write")
    p.add_argument("--kind", choices=[CONV, FC], default=CONV)
    p.add_argument("--co", type=int, required=True)
    p.add_argument("--ci", type=int, required=True)


def _add_simulate(sub) -> None:
    p = sub.add_parser("simulate", help="simulate a network end to end")
    p.add_argument("--model", required=True, help="network descriptor JSON")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--pe", type=int, default=32, help="PE array edge length")
    p.add_argument("--tile", type=int, default=7, help="IFM tile edge length")
    p.add_argument("--mode", choices=["auto", "sparse", "dense"], default="auto")
    p.add_argument(
        "--reuse", choices=["auto", "rif", "rwf", "fits_on_chip"], default="auto",
        help="DRAM reuse strategy override",
    )
    p.add_argument("--seed", type=int, default=0, help="seed for synthesized tensors")
    p.add_argument("--no-cluster", action="store_true", help="disable channel clustering")
    p.add_argument("--truncate", action="store_true", help="16-bit psum truncation")
    p.add_argument(
        "--weight-buffer", type=float, default=DEFAULT_WEIGHT_BUFFER_BYTES,
        help="on-chip weight buffer capacity in bytes",
    )
    p.add_argument("--dram-energy", type=float, default=0.0, help="energy per DRAM byte")
    p.add_argument("--ifm-threshold", type=float, default=0.30)
    p.add_argument("--weight-threshold", type=float, default=0.20)


def _add_sweep(sub) -> None:
    p = sub.add_parser("sweep", help="sweep the synthetic roster along one axis")
    p.add_argument("--axis", choices=list(SWEEP_AXES), required=True)
    p.add_argument("--grid", help="comma-separated values (default grid per axis)")
    p.add_argument("--out", required=True, help="CSV path to write")
    p.add_argument("--pe", type=int, default=32)
    p.add_argument("--tile", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)


def _add_trace(sub) -> None:
    p = sub.add_parser("trace", help="trace one IFM channel against one kernel")
    p.add_argument("--ifm", required=True, help="raw int16 IFM block file")
    p.add_argument("--weights", required=True, help="raw int16 kernel file")
    p.add_argument("--rows", type=int, required=True, help="IFM block rows")
    p.add_argument("--cols", type=int, required=True, help="IFM block cols")
    p.add_argument("--kh", type=int, required=True, help="kernel rows")
    p.add_argument("--kw", type=int, required=True, help="kernel cols")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--truncate", action="store_true")
    p.add_argument("--out", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sensesim",
        description="Sparse systolic CNN accelerator simulator",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    _add_prune(sub)
    _add_compress(sub)
    _add_decompress(sub)
    _add_simulate(sub)
    _add_sweep(sub)
    _add_trace(sub)
    return ap


def _cmd_prune(args) -> int:
    net = load_network(args.model)
    spec = PruneSpec(conv_keep_fraction=args.conv_keep, fc_keep_fraction=args.fc_keep)
    spec.validate()
    reports = []
    for rec in net.layers:
        if rec.weights is None:
            raise SenseSimError(f"layer {rec.config.name!r} has no weights to prune")
        frac = spec.fraction_for(rec.config.kind, rec.config.name)
        if rec.config.kind == CONV:
            pruned, rep = prune_conv_layer(rec.weights.data, frac)
        else:
            pruned, rep = prune_fc_layer(rec.weights.data, frac)
        rec.weights = Tensor(pruned, rec.config.weight_roles())
        d = rep.to_dict()
        d["layer"] = rec.config.name
        reports.append(d)
    out = Path(args.out)
    save_network(net, out)
    (out / "prune_report.json").write_text(json.dumps(reports, indent=2) + "\n")
    print(f"pruned {len(net.layers)} layers -> {out}")
    return 0


def _conv_blocks(a: np.ndarray):
    c_o, c_i = a.shape[0], a.shape[1]
    return [compress(a[o, i]) for o in range(c_o) for i in range(c_i)]


def _cmd_compress(args) -> int:
    if args.kind == CONV:
        if not args.hk or not args.wk:
            raise SenseSimError("CONV compression needs --hk and --wk")
        a = read_raw_tensor(args.input, (args.co, args.ci, args.hk, args.wk))
        blocks = _conv_blocks(a)
    else:
        a = read_raw_tensor(args.input, (args.co, args.ci))
        blocks = [compress_fc_column(a[:, j]) for j in range(args.ci)]
    n = write_blocks(args.out, blocks)
    print(f"{len(blocks)} blocks, {n} bytes -> {args.out}")
    return 0


def _cmd_decompress(args) -> int:
    blocks = read_blocks(args.input)
    expected = args.co * args.ci if args.kind == CONV else args.ci
    if len(blocks) != expected:
        raise SenseSimError(f"container holds {len(blocks)} blocks, expected {expected}")
    if args.kind == CONV:
        planes = np.stack([decompress(b) for b in blocks])
        h_k, w_k = blocks[0].block_dims
        a = planes.reshape(args.co, args.ci, h_k, w_k)
    else:
        a = np.stack([decompress(b)[:, 0] for b in blocks], axis=1)
        if a.shape != (args.co, args.ci):
            raise SenseSimError(f"decompressed shape {a.shape} != ({args.co}, {args.ci})")
    a.astype("<i2").tofile(args.out)
    print(f"{a.size} values -> {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    net = load_network(args.model)
    opts = SimOptions(
        n_pe=args.pe,
        n_is=args.tile,
        mode=args.mode,
        reuse=args.reuse,
        cluster=not args.no_cluster,
        truncate=args.truncate,
        weight_buffer_capacity=args.weight_buffer,
        policy=ModePolicy(args.ifm_threshold, args.weight_threshold),
        dram_energy_per_byte=args.dram_energy,
        seed=args.seed,
    )
    report = simulate_network(net, opts)
    json_path, csv_path = write_report(report, args.out)
    t = report.totals
    speed = f"{t['speedup']:.3f}x" if t["speedup"] is not None else "n/a"
    print(
        f"{len(report.layers)} layers: {t['cycles']} cycles "
        f"({speed} vs dense), U_PE {t['u_pe']:.3f} -> {json_path}, {csv_path}"
    )
    return 0


def _parse_grid(axis: str, text: str | None):
    if text is None:
        return DEFAULT_GRIDS[axis]
    cast = int if axis in ("pe_size", "tile_size") else float
    try:
        return [cast(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as e:
        raise SenseSimError(f"bad --grid value: {e}") from e


def _cmd_sweep(args) -> int:
    grid = _parse_grid(args.axis, args.grid)
    opts = SimOptions(n_pe=args.pe, n_is=args.tile, seed=args.seed)
    result = sweep(args.axis, grid, opts)
    path = write_sweep_csv(result, args.out)
    print(f"{len(result.rows)} points along {args.axis} -> {path}")
    return 0


def _cmd_trace(args) -> int:
    ifm = read_raw_tensor(args.ifm, (args.rows, args.cols))
    ker = read_raw_tensor(args.weights, (args.kh, args.kw))
    h_o, w_o = conv_out_dims(args.rows, args.cols, args.kh, args.kw, args.stride)
    psum, events = sparse_conv_tile(
        compress(ifm), compress(ker), h_o, w_o, args.stride, truncate=args.truncate
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    trace_path = out / "trace.csv"
    with open(trace_path, "w", newline="") as f:
        f.write("cycle,pe_row,pe_col,i_val,w_val,addr\n")
        for ev in events:
            addr = "INVALID" if ev.addr is None else ev.addr
            f.write(f"{ev.cycle},{ev.pe_row},{ev.pe_col},{ev.i_val},{ev.w_val},{addr}\n")

    valid = sum(1 for ev in events if ev.valid)
    dense_cycles = args.rows * args.cols * args.kh * args.kw
    cycles = len(events)
    summary = {
        "events": len(events),
        "valid": valid,
        "invalid": len(events) - valid,
        "cycles": cycles,
        "dense_cycles": dense_cycles,
        "speedup": (dense_cycles / cycles) if cycles else None,
        "psum": {str(i): int(v) for i, v in enumerate(psum) if v != 0},
        "h_o": h_o,
        "w_o": w_o,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"{cycles} cycles ({valid} valid) -> {trace_path}")
    return 0


_COMMANDS = {
    "prune": _cmd_prune,
    "compress": _cmd_compress,
    "decompress": _cmd_decompress,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "trace": _cmd_trace,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SenseSimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
