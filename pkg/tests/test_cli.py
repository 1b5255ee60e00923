import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from pressurelab import cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_cfg(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


DOUBLING = """
system.kind = doubling
potential.kind = zero
n_range = 8..16
N = 100000
seed = 1
"""


def test_pressure_headline_is_log2(tmp_path):
    code, rec = cli.run("pressure", write_cfg(tmp_path, DOUBLING), out=tmp_path / "out")
    assert code == 0
    summary = cli.read_summary(tmp_path / "out" / "summary.txt")
    assert abs(float(summary["pressure"]) - math.log(2)) <= 1e-12
    series = cli.read_csv(tmp_path / "out" / "pressure.csv")
    assert list(series) == ["n", "log_Zn", "Pn"]
    assert series["n"] == list(range(8, 17))


def test_missing_seed_names_field(tmp_path, capsys):
    cfg = write_cfg(tmp_path, DOUBLING.replace("seed = 1", ""))
    code, _ = cli.run("pressure", cfg, out=tmp_path / "out")
    assert code == 2
    assert "'seed'" in capsys.readouterr().err


@pytest.mark.parametrize("drop", ["N = 100000", "n_range = 8..16"])
def test_missing_required_fields(tmp_path, capsys, drop):
    code, _ = cli.run("pressure", write_cfg(tmp_path, DOUBLING.replace(drop, "")), out=tmp_path)
    assert code == 2
    assert drop.split(" =")[0] in capsys.readouterr().err


def test_unknown_study(tmp_path):
    cfg = write_cfg(tmp_path, DOUBLING)
    assert cli.run("entropy", cfg, out=tmp_path)[0] == 2
    cfg2 = write_cfg(tmp_path, DOUBLING + "study = entropy\n", "b.cfg")
    assert cli.run("pressure", cfg2, out=tmp_path)[0] == 2


def test_unknown_study_from_command_line():
    proc = subprocess.run([sys.executable, "-m", "pressurelab.cli", "entropy", "--config", "x.cfg"],
                          capture_output=True, text=True)
    assert proc.returncode == 2


@pytest.mark.parametrize("text", [
    "system.kind = expanding\nsystem.k = 2\nsystem.eps = 0.2\npotential.kind = zero\nn_range = 4..8\nN = 10\nseed = 0\n",
    "system.kind = torus\nsystem.matrix = 1, 2, 2, 4\npotential.kind = zero\nn_range = 4..8\nN = 10\nseed = 0\n",
])
def test_invalid_system_exit_3(tmp_path, text):
    assert cli.run("pressure", write_cfg(tmp_path, text), out=tmp_path)[0] == 3


def test_oracle_on_torus_exit_3(tmp_path):
    cfg = write_cfg(tmp_path, "system.kind = cat\npotential.kind = zero\nn_range = 4..8\nN = 10\nseed = 0\n")
    assert cli.run("oracle", cfg, out=tmp_path)[0] == 3


def test_unreadable_config_exit_4(tmp_path):
    assert cli.run("pressure", tmp_path / "missing.cfg", out=tmp_path)[0] == 4


def test_unwritable_output_exit_4(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.run("pressure", write_cfg(tmp_path, DOUBLING), out=blocker / "sub")[0] == 4


@pytest.mark.parametrize("line", ["this line has no equals", "N = many", "n_range = 8..x",
                                  "potential.kind = wavelet"])
def test_malformed_config_exit_2(tmp_path, line):
    assert cli.run("pressure", write_cfg(tmp_path, DOUBLING + line + "\n"), out=tmp_path)[0] == 2


def test_oracle_study_reports_both_values(tmp_path):
    text = (CONFIGS / "oracle_perturbed.cfg").read_text().replace("N = 200000", "N = 20000")
    code, _ = cli.run("oracle", write_cfg(tmp_path, text), out=tmp_path / "out")
    assert code == 0
    s = cli.read_summary(tmp_path / "out" / "summary.txt")
    est, orc, diff = float(s["estimator.pressure"]), float(s["oracle.pressure"]), float(s["difference"])
    assert diff == est - orc
    assert float(s["oracle.self_convergence"]) <= 1e-8


def test_main_prints_summary(tmp_path, capsys):
    code = cli.main(["pressure", "--config", str(write_cfg(tmp_path, DOUBLING)), "--out", str(tmp_path / "o")])
    assert code == 0
    assert "pressure = 0.69314718055994" in capsys.readouterr().out


REPRO = {
    "pressure": DOUBLING.replace("doubling", "expanding\nsystem.k = 2\nsystem.eps = 0.05").replace(
        "zero", "trig\npotential.terms = cos1: 0.5").replace("N = 100000", "N = 70000"),
    "equilibrium": (CONFIGS / "equilibrium_doubling.cfg").read_text().replace("N = 100000", "N = 40000"),
    "ldp": """
system.kind = cat
potential.kind = trig
potential.terms = g1: 0.3
n_range = 4..9
N = 70000
seed = 5
ldp.observables = 1, 3
ldp.region = 0:1; -1:0.5
rate.alpha = -1:1:0.5
rate.beta = -1:1:0.25
rate.N = 5000
""",
}


@pytest.mark.parametrize("study", sorted(REPRO))
def test_rerun_is_byte_identical_across_threads(tmp_path, study):
    cfg = write_cfg(tmp_path, REPRO[study])
    assert cli.run(study, cfg, threads=1, out=tmp_path / "a")[0] == 0
    assert cli.run(study, cfg, threads=3, out=tmp_path / "b")[0] == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.name != "meta.txt")
    assert "summary.txt" in names and len(names) >= 2
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


@pytest.mark.parametrize("study", sorted(REPRO))
def test_csv_round_trip(tmp_path, study):
    code, rec = cli.run(study, write_cfg(tmp_path, REPRO[study]), out=tmp_path / "o")
    assert code == 0
    for kind, cols in rec.series.items():
        back = cli.read_csv(tmp_path / "o" / f"{kind}.csv")
        assert list(back) == list(cols)
        for name in cols:
            a, b = list(cols[name]), back[name]
            if name in ("function",):
                assert a == b
            else:
                np.testing.assert_array_equal(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def test_two_observable_rate_columns(tmp_path):
    _, rec = cli.run("ldp", write_cfg(tmp_path, REPRO["ldp"]), out=tmp_path / "o")
    assert list(rec.series["rate"]) == ["alpha_1", "alpha_2", "J", "beta_argmax_1", "beta_argmax_2"]


def test_emit_csv_schema_mismatch(tmp_path):
    rec = cli.ResultRecord("pressure", {}, series={"pressure": {"n": [1], "Pn": [0.5]}})
    with pytest.raises(ValueError):
        cli.emit_csv(rec, "pressure", tmp_path / "x.csv")
    with pytest.raises(ValueError):
        cli.emit_csv(rec, "ldp", tmp_path / "x.csv")


@pytest.mark.parametrize("kind, cols", [
    ("pressure", ["n", "log_Zn", "Pn"]),
    ("ldp", ["n", "nu_n", "log_nu_over_n", "satisfying_count"]),
    ("rate", ["alpha", "J", "beta_argmax"]),
])
def test_schema_columns(kind, cols):
    assert cli.SCHEMAS[kind] == cols
    assert cli.matches_schema(cols, cli.SCHEMAS[kind])
    assert not cli.matches_schema(cols[:-1], cli.SCHEMAS[kind])


def test_fmt_keeps_17_digits():
    x = 0.1 + 0.2
    assert float(cli.fmt(x)) == x
    assert cli.fmt(np.int64(3)) == "3" and cli.fmt(None) == "none"


@pytest.mark.parametrize("text, expected", [
    ("8..12", [8, 9, 10, 11, 12]),
    ("4, 8, 16", [4, 8, 16]),
])
def test_parse_int_list(text, expected):
    assert cli.parse_int_list(text) == expected


def test_parse_region_and_axis():
    assert cli.parse_region("empty") is None
    assert cli.parse_region("0.3:1; -inf:0") == [(0.3, 1.0), (-np.inf, 0.0)]
    np.testing.assert_allclose(cli.parse_axis("-1:1:0.5", "a"), [-1, -0.5, 0, 0.5, 1])


def test_empty_region_config(tmp_path):
    text = DOUBLING.replace("N = 100000", "N = 2000") + "ldp.observables = 1\nldp.region = empty\n"
    code, rec = cli.run("ldp", write_cfg(tmp_path, text), out=tmp_path / "o")
    assert code == 0 and rec.outputs["ldp.status"] == "decay too fast to measure"
    assert cli.read_summary(tmp_path / "o" / "summary.txt")["ldp.slope"] == "none"


def test_selfcheck_study(tmp_path):
    code, rec = cli.run("selfcheck", CONFIGS / "selfcheck.cfg", out=tmp_path / "o")
    assert code == 0 and rec.outputs["all_passed"]
