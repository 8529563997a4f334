import subprocess
import sys

import numpy as np
import pytest

from cfgutil import make_config, write_config
from spectral_cnn.cli import main
from spectral_cnn.data import read_csv, read_pgm, write_pgm


@pytest.fixture
def pgm(tmp_path, rng):
    path = tmp_path / "in.pgm"
    write_pgm(rng.random((16, 16)), path)
    return path


def test_pool_demo(tmp_path, pgm):
    assert main(["pool-demo", "--input", str(pgm), "--sizes", "4,8,16", "--out", str(tmp_path / "d")]) == 0
    header, rows = read_csv(tmp_path / "d" / "pool_demo.csv")
    assert header[0] == "schema" and [r[1] for r in rows] == ["4", "8", "16"]
    assert float(rows[-1][3]) < 1e-10
    panel = read_pgm(tmp_path / "d" / "pool_008.pgm")
    assert panel.shape == (16, 48)


def test_pool_demo_checkerboard(tmp_path):
    img = (np.indices((16, 16)).sum(axis=0) % 2).astype(float)
    write_pgm(img, tmp_path / "cb.pgm")
    assert main(["pool-demo", "--input", str(tmp_path / "cb.pgm"), "--sizes", "8",
                 "--out", str(tmp_path / "d")]) == 0
    panel = (tmp_path / "d" / "pool_008.pgm").read_bytes()
    # the spectral panel of a checkerboard is constant after min-max scaling
    data = np.frombuffer(panel[-16 * 48:], dtype=np.uint8).reshape(16, 48)
    assert len(np.unique(data[:, 16:32])) == 1


@pytest.mark.parametrize("sizes", ["0", "a,b", "32", ""])
def test_pool_demo_bad_sizes(tmp_path, pgm, sizes):
    assert main(["pool-demo", "--input", str(pgm), "--sizes", sizes, "--out", str(tmp_path)]) == 2


def test_pool_demo_cifar_without_dir(tmp_path, monkeypatch):
    monkeypatch.delenv("CIFAR10_DIR", raising=False)
    assert main(["pool-demo", "--input", "3", "--sizes", "8", "--out", str(tmp_path)]) == 2


def test_pool_demo_missing_file(tmp_path):
    assert main(["pool-demo", "--input", str(tmp_path / "nope.pgm"), "--sizes", "4",
                 "--out", str(tmp_path)]) == 1


def test_info_preservation(tmp_path):
    out = tmp_path / "info.csv"
    assert main(["info-preservation", "--data", "synth", "--n", "20", "--fractions", "0.1,0.25,1.0",
                 "--out", str(out)]) == 0
    header, rows = read_csv(out)
    assert header == ["schema", "fraction", "spectral_size", "spectral_error", "maxpool_error", "stride"]
    errs = [float(r[3]) for r in rows]
    assert errs == sorted(errs, reverse=True) and errs[-1] < 1e-10


def test_info_preservation_bad_fractions(tmp_path):
    assert main(["info-preservation", "--fractions", "2.0", "--out", str(tmp_path / "x.csv")]) == 2


def test_config_error_exit_code(tmp_path, capsys):
    cfg = make_config(tmp_path, model={"gamma": 5.0, "wings": 2})
    path = write_config(tmp_path / "c.json", cfg)
    assert main(["train", "--config", str(path)]) == 2
    err = capsys.readouterr().err
    assert "gamma" in err and "model.wings" in err


def test_runtime_error_exit_code(tmp_path):
    cfg = make_config(tmp_path, data={"source": "cifar10", "path": str(tmp_path / "missing")})
    path = write_config(tmp_path / "c.json", cfg)
    assert main(["train", "--config", str(path)]) == 1


def test_compare_param(tmp_path, capsys):
    path = write_config(tmp_path / "c.json", make_config(tmp_path / "o", optim={"epochs": 2}))
    assert main(["compare-param", "--config", str(path)]) == 0
    assert "speedup" in capsys.readouterr().out
    header, rows = read_csv(tmp_path / "o" / "compare_summary.csv")
    assert rows[0][0] == "compare_summary.v1"


def run_twice(tmp_path, build_args):
    outputs = []
    for name in ("a", "b"):
        d = tmp_path / name
        d.mkdir(parents=True)
        assert main(build_args(d)) == 0
        outputs.append({p.name: p.read_bytes() for p in sorted(d.rglob("*.csv"))
                        if "timing" not in p.name})
    assert outputs[0] and outputs[0] == outputs[1]


def test_determinism_all_commands(tmp_path, pgm):
    run_twice(tmp_path / "demo", lambda d: ["pool-demo", "--input", str(pgm), "--sizes", "4,8",
                                            "--out", str(d)])
    run_twice(tmp_path / "info", lambda d: ["info-preservation", "--n", "10", "--out", str(d / "i.csv")])

    def cfg_args(cmd):
        def build(d):
            return [cmd, "--config", str(write_config(d / "c.json", make_config(d / "out")))]
        return build

    run_twice(tmp_path / "train", cfg_args("train"))
    run_twice(tmp_path / "cmp", cfg_args("compare-param"))


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "spectral_cnn", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("pool-demo", "info-preservation", "train", "compare-param"):
        assert cmd in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "spectral_cnn", "frobnicate"], capture_output=True)
    assert proc.returncode == 2
