import subprocess
import sys

from binlat import cli, harness
from binlat.errors import NoConvergence

CONFIG = """[experiment]
schema_version = 1
n = 80
m = 2
phi = 0
replications = 5
outputs = table2
"""


def test_run_writes_tables(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CONFIG)
    assert cli.main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "table2.csv").exists()
    assert "table2.csv" in capsys.readouterr().out


def test_seed_override(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CONFIG)
    cli.main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "a"), "--seed", "5"])
    header = (tmp_path / "a" / "table2.csv").read_text().splitlines()[0]
    assert "seed=5 " in header


def test_failures_exit_2(tmp_path, monkeypatch):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CONFIG)

    def broken(*a, **k):
        raise NoConvergence("synthetic")

    monkeypatch.setattr(harness, "fit_marginal", broken)
    assert cli.main(["run", "--config", str(cfg), "--out-dir", str(tmp_path / "o")]) == 2


def test_bad_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text(CONFIG.replace("phi = 0", "phi = 2"))
    assert cli.main(["run", "--config", str(cfg)]) == 1
    assert "bad config" in capsys.readouterr().err


def test_analytic_report(tmp_path, capsys):
    cfg = tmp_path / "a.ini"
    cfg.write_text(CONFIG.replace("m = 2", "m = 1").replace("table2", "analytic")
                   .replace("n = 80", "n = 200, 5000"))
    assert cli.main(["analytic", "--config", str(cfg)]) == 0
    out = capsys.readouterr().out
    assert "0.820577" in out and "1.757444" in out
    assert "48.6994%" in out


def test_console_script_module():
    res = subprocess.run([sys.executable, "-m", "binlat.cli", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "analytic" in res.stdout
