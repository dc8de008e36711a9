import pytest

from quenchlab import cli, lab
from quenchlab.errors import ArgumentError


def test_parse_config():
    raw = lab.parse_config("scenario = deloc-gff  # comment\nbeta = [1.0, 2.0]\nL = 4\nseed=7\n")
    assert raw == {"scenario": "deloc-gff", "beta": [1.0, 2.0], "L": 4, "seed": 7}
    with pytest.raises(ArgumentError):
        lab.parse_config("beta 1.0")


def test_config_defaults_and_scalars():
    cfg = lab.config_from_dict({"scenario": "deloc-gff", "L": 4, "sweeps": 100})
    assert cfg.grids["L"] == [4] and cfg.grids["p"] == [1.0, 0.9]
    assert cfg.sweeps == 100 and cfg.chain().burn_in == 10


def test_config_errors():
    with pytest.raises(ArgumentError):
        lab.config_from_dict({"scenario": "nope"})
    with pytest.raises(ArgumentError):
        lab.config_from_dict({"scenario": "deloc-gff", "beta": []})
    with pytest.raises(ArgumentError):
        lab.config_from_dict({"beta": [1.0]})
    with pytest.raises(ArgumentError):
        lab.config_from_dict({"scenario": "deloc-gff", "sweeps": 0})


def test_run_experiment_deterministic(tmp_path):
    raw = {"scenario": "deloc-zxy", "beta": [2.0], "p": [1.0, 0.8], "L": [2, 3],
           "sweeps": 300, "dsamples": 2, "seed": 5}
    a = lab.run_experiment(lab.config_from_dict(dict(raw, out=str(tmp_path / "a"))))
    b = lab.run_experiment(lab.config_from_dict(dict(raw, out=str(tmp_path / "b"))))
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("model,beta,p,L,mean")
    assert sum(ln.startswith("#fit") for ln in lines) == 2


def test_budget_marker(tmp_path):
    cfg = lab.config_from_dict({"scenario": "annealed-potential", "out": str(tmp_path),
                                "max_seconds": 1e-9})
    text = lab.run_experiment(cfg).read_text()
    assert text.rstrip().endswith("#incomplete,budget exceeded")


def test_renorm_suite(tmp_path):
    cfg = lab.config_from_dict({"scenario": "renorm-suite", "seeds": 2, "out": str(tmp_path)})
    rows = lab.run_experiment(cfg).read_text().splitlines()[1:]
    assert len(rows) == 2
    for row in rows:
        fine, thinned, coarse = (float(t) for t in row.split(",")[4:7])
        assert fine >= thinned - 1e-9 and thinned >= coarse - 1e-9


def test_cli_exact(capsys):
    assert cli.main(["exact", "--model", "villain", "--beta", "1.0", "--L", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("quantity,value")
    assert abs(float(out[1].split(",")[1]) - 0.6065306597126334) < 1e-10


def test_cli_duality(capsys):
    assert cli.main(["duality", "check", "--L", "0", "--lambda", "3"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert abs(float(row[5]) - 0.647641958268412937) < 1e-9


def test_cli_perc_and_errors(capsys, tmp_path):
    assert cli.main(["perc", "dual", "--L", "4", "--seed", "1"]) == 0
    assert "involution=1" in capsys.readouterr().out
    assert cli.main(["scan"]) == 2
    cfg = tmp_path / "c.txt"
    cfg.write_text("scenario = annealed-villain\nbeta = 1.0\n")
    assert cli.main(["scan", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "annealed-villain.csv").exists()
