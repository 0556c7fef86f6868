import json
import subprocess
import sys

import pytest

from crnreduce.cli import _expand_alpha_short, main
from crnreduce.scenarios import scenario_text


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_reduce_mm(capsys, tmp_path):
    code, rep, _ = run(capsys, "reduce", "--network", "mm.rxn", "--out-dir", str(tmp_path))
    assert code == 0
    assert [r["reaction"] for r in rep["reduced"]["reactions"]] == ["E + S -> E + P"]
    text = (tmp_path / "mm.reduced.rxn").read_text()
    assert "E + S -> E + P" in text
    assert rep["limiting"]["reactions"] == []
    assert (tmp_path / "mm.limiting.rxn").exists()


def test_reduce_empty_intermediates_identity(capsys, tmp_path):
    src = tmp_path / "plain.rxn"
    src.write_text(scenario_text("empty-intermediates"))
    code, _, _ = run(capsys, "reduce", "--network", str(src), "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "plain.reduced.rxn").read_text() == src.read_text()


def test_reduce_cycle_rate(capsys):
    _, rep, _ = run(capsys, "reduce", "--scenario", "example2")
    (rx,) = rep["reduced"]["reactions"]
    assert (rx["reaction"], rx["rate"]) == ("E + S -> E + P", "k1")


def test_reduce_divergent_limit_reported(capsys):
    code, rep, _ = run(capsys, "reduce", "--scenario", "mm", "--alpha", "P=-2")
    assert code == 0
    assert "error" in rep["limiting"]


def test_check_example4(capsys):
    code, rep, _ = run(capsys, "check", "--network", "example4.rxn")
    assert (code, rep["verdict"]) == (0, "PROVED_PROP2")
    assert rep["evidence"]["prop3"]["status"] == "FAIL"


def test_check_violated_exit(capsys):
    code, rep, _ = run(capsys, "check", "--scenario", "mm", "--alphaS", "3")
    assert (code, rep["verdict"]) == (2, "VIOLATED_NUMERIC")


def test_missing_file(capsys):
    code, rep, err = run(capsys, "reduce", "--network", "nope.rxn")
    assert code == 1 and rep is None and "not found" in err


def test_bad_syntax(capsys, tmp_path):
    bad = tmp_path / "bad.rxn"
    bad.write_text("species: A\nreactions:\n  A -> @ 1\n")
    code, _, err = run(capsys, "reduce", "--network", str(bad))
    assert code == 1 and "line" in err


def test_bad_alpha(capsys):
    code, _, err = run(capsys, "check", "--scenario", "mm", "--alpha", "S=x")
    assert code == 1 and "exponent" in err


def test_usage_error(capsys):
    assert main(["reduce"]) == 1
    capsys.readouterr()


def test_check_intermediates(capsys):
    code, rep, _ = run(capsys, "check-intermediates", "--scenario", "example2")
    assert code == 0 and rep["valid"] and not rep["acyclic"]
    code, _, err = run(capsys, "check-intermediates", "--scenario", "mm", "--intermediates", "E")
    assert code == 1 and "non-unit" in err


def test_detect(capsys, tmp_path):
    text = scenario_text("mm").replace("intermediates: ES\n", "")
    f = tmp_path / "bare.rxn"
    f.write_text(text)
    code, rep, _ = run(capsys, "check-intermediates", "--network", str(f), "--detect")
    assert code == 0
    assert "ES" in json.dumps(rep)


def test_mu(capsys):
    code, rep, _ = run(capsys, "mu", "--scenario", "mm", "--N", "10")
    assert code == 0
    row = rep["mu"]["E + S"]
    assert row["solve"][0] == pytest.approx(1 / 110, rel=1e-10)
    assert row["matrix_tree"][0] == pytest.approx(row["solve"][0], rel=1e-10)


def test_simulate_sec91(capsys, tmp_path):
    code, rep, _ = run(capsys, "simulate", "--scenario", "sec9-1", "--N", "100", "--T", "50",
                       "--out-dir", str(tmp_path))
    assert code == 0
    assert rep["final"]["full"]["A"] == pytest.approx(1.0, abs=1e-2)
    assert rep["final"]["limiting"]["A"] == pytest.approx(2.0, abs=1e-6)
    header = (tmp_path / "sec9-1.N100.csv").read_text().splitlines()[0]
    assert header == "t,full_A,reduced_A,limiting_A"


def test_simulate_init_override(capsys):
    code, rep, _ = run(capsys, "simulate", "--scenario", "mm", "--init", "S=0.5", "--T", "1")
    assert code == 0 and rep["initial"] == {"E": 1.0, "S": 0.5}
    code, _, err = run(capsys, "simulate", "--scenario", "mm", "--init", "ES=1")
    assert code == 1 and "unknown" in err


def test_sweep_example2(capsys, tmp_path):
    code, rep, _ = run(capsys, "sweep", "--scenario", "example2", "--alphaS", "0",
                       "--out-dir", str(tmp_path))
    assert code == 0 and rep["strictly_decreasing"]
    errs = [r["full_reduced"] for r in rep["rows"]]
    assert errs[-1] < 1e-2
    assert len((tmp_path / "example2.sweep.csv").read_text().splitlines()) == 4


def test_sweep_refuses_violated(capsys):
    code, rep, _ = run(capsys, "sweep", "--scenario", "mm", "--alphaS", "3", "--grid", "10")
    assert code == 2 and rep["verdict"] == "VIOLATED_NUMERIC"


def test_deterministic_output(capsys):
    outs = []
    for _ in range(2):
        main(["reduce", "--scenario", "example4"])
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


def test_timing_only_on_request(capsys):
    _, rep, _ = run(capsys, "reduce", "--scenario", "mm")
    assert "timing" not in rep
    _, rep, _ = run(capsys, "reduce", "--scenario", "mm", "--timing")
    assert rep["timing"]["seconds"] >= 0


@pytest.mark.parametrize("argv, want", [
    (["--alphaS", "0"], ["--alpha", "S=0"]),
    (["--alphaS=1/2"], ["--alpha", "S=1/2"]),
    (["--alpha", "P=1"], ["--alpha", "P=1"]),
])
def test_alpha_shorthand(argv, want):
    assert _expand_alpha_short(argv) == want


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "crnreduce.cli", "reduce", "--scenario", "example2"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["reduced"]["reactions"][0]["rate"] == "k1"
