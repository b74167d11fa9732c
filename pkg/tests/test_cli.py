import numpy as np
import pytest

from ccae import io
from ccae.cli import main

TINY = """
scenario.num_users = 64
scenario.trajectory.num_points = 10
array.num_antennas = 8
network.hidden = 16, 8
train.epochs = 3
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return path


def test_generate_then_featurize(tmp_path, config_file):
    out = tmp_path / "gen"
    assert main(["generate", "--config", str(config_file), "--out", str(out)]) == 0
    for name in ("positions.csv", "csi.ccsi", "csi.csv", "features.csv", "manifest.json"):
        assert (out / name).exists()
    assert main(["featurize", "--csi", str(out / "csi.csv"), "--out", str(tmp_path / "f.csv")]) == 0
    assert np.array_equal(io.read_features(tmp_path / "f.csv"), io.read_features(out / "features.csv"))
    # float32 binary CSI gives features close to the float64 ones
    assert main(["featurize", "--csi", str(out / "csi.ccsi"), "--out", str(tmp_path / "g.csv")]) == 0
    assert np.allclose(io.read_features(tmp_path / "g.csv"), io.read_features(out / "features.csv"), atol=1e-5)


def test_train_and_evaluate(tmp_path, config_file, capsys):
    out = tmp_path / "train"
    assert main(["train", "--config", str(config_file), "--recipe", "fad", "--out", str(out)]) == 0
    assert (out / "fad" / "chart.csv").exists() and not (out / "plain").exists()
    report = tmp_path / "eval.csv"
    rc = main(["evaluate", "--chart", str(out / "fad" / "chart.csv"), "--positions", str(out / "positions.csv"),
               "--k", "1,2", "--out", str(report)])
    assert rc == 0
    values = io.read_report(report)
    stored = io.read_report(out / "fad" / "report.csv")
    assert values[("TW", "2")] == stored[("TW", "2")]
    assert values[("KS", "")] == stored[("KS", "")]
    assert "KS =" in capsys.readouterr().out


def test_run_twice_is_byte_identical(tmp_path, config_file):
    for name in ("a", "b"):
        assert main(["run", "--config", str(config_file), "--out", str(tmp_path / name)]) == 0
    for recipe in ("plain", "fad", "fad_mrd"):
        for name in ("chart.csv", "report.csv"):
            assert (tmp_path / "a" / recipe / name).read_bytes() == (tmp_path / "b" / recipe / name).read_bytes()


def test_failures_exit_nonzero_with_stage(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("scenario.num_users = 5\n")  # trajectory of 60 does not fit
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 1
    assert "[run]" in capsys.readouterr().err
    assert main(["featurize", "--csi", str(tmp_path / "missing.ccsi"), "--out", str(tmp_path / "f.csv")]) == 1
    assert "[featurize]" in capsys.readouterr().err
