import json

import numpy as np
import pytest

import sensesim as ss
from sensesim.cli import main

from conftest import golden_pair


def run_cli(*argv):
    return main(list(argv))


def test_trace_command(tmp_path):
    ifm, ker = golden_pair()
    ss.write_raw_tensor(tmp_path / "ifm.bin", ifm)
    ss.write_raw_tensor(tmp_path / "ker.bin", ker)
    rc = run_cli(
        "trace", "--ifm", str(tmp_path / "ifm.bin"), "--weights", str(tmp_path / "ker.bin"),
        "--rows", "4", "--cols", "4", "--kh", "2", "--kw", "2",
        "--out", str(tmp_path / "tr"),
    )
    assert rc == 0
    lines = (tmp_path / "tr" / "trace.csv").read_text().splitlines()
    assert lines[0] == "cycle,pe_row,pe_col,i_val,w_val,addr"
    assert len(lines) == 9
    assert lines[4].endswith("INVALID")
    summary = json.loads((tmp_path / "tr" / "summary.json").read_text())
    assert summary["events"] == 8
    assert summary["invalid"] == 2
    assert summary["speedup"] == 8.0
    assert summary["psum"] == {"0": 500, "4": 800, "8": 1100}


def test_compress_roundtrip_conv(tmp_path):
    w = ss.synth_tensor((5, 3, 3, 3), 0.6, seed=17).data
    ss.write_raw_tensor(tmp_path / "w.bin", w)
    assert run_cli("compress", "--input", str(tmp_path / "w.bin"), "--kind", "CONV",
                   "--co", "5", "--ci", "3", "--hk", "3", "--wk", "3",
                   "--out", str(tmp_path / "w.sbm")) == 0
    assert run_cli("decompress", "--input", str(tmp_path / "w.sbm"), "--kind", "CONV",
                   "--co", "5", "--ci", "3", "--out", str(tmp_path / "w2.bin")) == 0
    assert (tmp_path / "w.bin").read_bytes() == (tmp_path / "w2.bin").read_bytes()


def test_compress_roundtrip_fc(tmp_path):
    w = ss.synth_tensor((12, 9), 0.7, seed=18).data
    ss.write_raw_tensor(tmp_path / "w.bin", w)
    assert run_cli("compress", "--input", str(tmp_path / "w.bin"), "--kind", "FC",
                   "--co", "12", "--ci", "9", "--out", str(tmp_path / "w.sbm")) == 0
    assert run_cli("decompress", "--input", str(tmp_path / "w.sbm"), "--kind", "FC",
                   "--co", "12", "--ci", "9", "--out", str(tmp_path / "w2.bin")) == 0
    assert (tmp_path / "w.bin").read_bytes() == (tmp_path / "w2.bin").read_bytes()


def test_compress_needs_kernel_dims(tmp_path, capsys):
    w = ss.synth_tensor((2, 2, 3, 3), 0.5, seed=1).data
    ss.write_raw_tensor(tmp_path / "w.bin", w)
    rc = run_cli("compress", "--input", str(tmp_path / "w.bin"), "--kind", "CONV",
                 "--co", "2", "--ci", "2", "--out", str(tmp_path / "w.sbm"))
    assert rc == 1
    assert "error" in capsys.readouterr().err


def test_simulate_command(tmp_path, net_dir):
    out = tmp_path / "rep"
    rc = run_cli("simulate", "--model", str(net_dir), "--out", str(out),
                 "--pe", "8", "--tile", "4", "--seed", "1")
    assert rc == 0
    doc = json.loads((out / "report.json").read_text())
    assert len(doc["layers"]) == 2
    assert doc["options"]["n_pe"] == 8 and doc["options"]["n_is"] == 4
    csv_lines = (out / "layers.csv").read_text().splitlines()
    assert len(csv_lines) == 3


def test_simulate_deterministic_bytes(tmp_path, net_dir):
    run_cli("simulate", "--model", str(net_dir), "--out", str(tmp_path / "r1"))
    run_cli("simulate", "--model", str(net_dir), "--out", str(tmp_path / "r2"))
    a = (tmp_path / "r1" / "layers.csv").read_bytes()
    b = (tmp_path / "r2" / "layers.csv").read_bytes()
    assert a == b


def test_simulate_forced_modes(tmp_path, net_dir):
    for mode in ("sparse", "dense"):
        out = tmp_path / mode
        assert run_cli("simulate", "--model", str(net_dir), "--out", str(out),
                       "--mode", mode) == 0
        doc = json.loads((out / "report.json").read_text())
        assert doc["totals"]["modes"] == {mode: 2}


def test_prune_command(tmp_path, net_dir):
    out = tmp_path / "pruned"
    rc = run_cli("prune", "--model", str(net_dir), "--out", str(out),
                 "--conv-keep", str(4 / 9))
    assert rc == 0
    rep = json.loads((out / "prune_report.json").read_text())
    assert [r["layer"] for r in rep] == ["c1", "c2"]
    assert all(r["keep_count"] == 4 for r in rep)
    pruned = ss.load_network(out / "network.json")
    for rec in pruned.layers:
        counts = np.count_nonzero(rec.weights.data.reshape(-1, 9), axis=1)
        assert counts.max() <= 4
    # layer 2 had no IFM on disk; it stays chained after pruning
    assert pruned.layers[1].ifm is None


def test_sweep_command(tmp_path):
    p = tmp_path / "w.csv"
    rc = run_cli("sweep", "--axis", "weight_sparsity", "--grid", "0.0,0.5",
                 "--out", str(p))
    assert rc == 0
    lines = p.read_text().splitlines()
    assert lines[0].startswith("weight_sparsity,")
    assert len(lines) == 3
    assert float(lines[2].split(",")[3]) == pytest.approx(2.0)  # speedup at s=0.5


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("simulate", "--frobnicate", "x")
    assert exc.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        run_cli("explode")
    assert exc.value.code == 2


def test_domain_error_exits_1(tmp_path, capsys):
    rc = run_cli("simulate", "--model", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path / "o"))
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli("--version")
    assert exc.value.code == 0
    assert ss.__version__ in capsys.readouterr().out
