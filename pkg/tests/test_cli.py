import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest

from mistkit import cli
from mistkit import ug_maxcut as ug
from mistkit.sos import library


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


def test_fourier(capsys):
    code, rep = run(capsys, "fourier", "--f", "maj:3")
    assert code == 0
    assert rep["coefficients"]["1,2,3"] == "-1/4" and rep["coefficients"]["{}"] == "1/2"
    # 1/16 from each singleton plus 1/16 from the top set
    assert rep["influences"] == ["1/8"] * 3 and rep["parseval"]


def test_stab(capsys):
    code, rep = run(capsys, "stab", "--maj", "101", "--rho", "0.5")
    assert code == 0 and abs(rep["stab"] - 2 / 3) < 0.02
    code, rep = run(capsys, "stab", "--f", "maj:3", "--rho", "1/2")
    assert rep["stab_exact"] == "45/64"


def test_delta(capsys):
    code, rep = run(capsys, "delta", "--f", "dictator:1")
    assert code == 0 and rep["delta_fourier"] == "1/8"


def test_jgrid_csv(capsys):
    code, out = run(capsys, "jgrid", "--rho", "0.3", "--grid", "3", "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 10 and "x" in lines[0]


def test_check_commands(capsys):
    assert run(capsys, "check-base", "--rho", "0.5", "--eps", "0.1", "--trials", "500")[0] == 0
    assert run(capsys, "check-tensor", "--f", "maj:5", "--rho", "0.4", "--smooth", "1/5", "0")[0] == 0
    code, rep = run(capsys, "check-mist", "--f", "dictator:5", "--rho", "0.5")
    assert code == 1 and not rep["ok"] and rep["witness"]["gap"] > 0
    assert run(capsys, "check-borell", "--rho", "0.5", "--trials", "5000")[0] == 0


def test_approx_j_save(capsys, tmp_path):
    path = tmp_path / "jt.json"
    code, rep = run(capsys, "approx-j", "--rho", "0.5", "--delta", "0.05", "--save", str(path))
    assert code == 0 and json.loads(path.read_text())["degree_per_variable"] == rep["n"]


def test_sos_verify(capsys, tmp_path):
    path = tmp_path / "cert.json"
    path.write_text(json.dumps(library.one_minus_square().to_json()))
    assert run(capsys, "sos-verify", str(path))[0] == 0
    d = json.loads(path.read_text())
    d["h"] = "1 - y^2 + 1/1000"
    path.write_text(json.dumps(d))
    code, rep = run(capsys, "sos-verify", str(path))
    assert code == 1 and rep["residual"] == "1/1000"


def test_sos_search(capsys):
    code, rep = run(capsys, "sos-search", "--h", "y^2 - y^4", "--vars", "y", "--box", "--degree", "5",
                    "--expect", "found")
    assert code == 0 and rep["status"] == "found"
    code, rep = run(capsys, "sos-search", "--h", "1 + y", "--vars", "y", "--degree", "2", "--expect", "infeasible")
    assert code == 0 and rep["status"] == "infeasible"


def test_sos_library_emit(capsys, tmp_path):
    code, rep = run(capsys, "sos-library", "--id", "power_bound", "--params", '{"k": 4}', "--emit", str(tmp_path))
    assert code == 0
    assert run(capsys, "sos-verify", rep["entries"][0]["file"])[0] == 0


def test_sos_pe(capsys):
    assert run(capsys, "sos-pe", "--cube", "2", "--degree", "4")[0] == 0


def test_reduce_and_cut(capsys, tmp_path):
    csv = tmp_path / "e.csv"
    code, rep = run(capsys, "reduce", "--toy", "perfect:3:2:1", "--rho", "-1/2", "--csv", str(csv))
    assert code == 0 and rep["total_weight"] == "1"
    assert sum(ug.read_edges_csv(csv).values()) == 1
    code, rep = run(capsys, "reduce", "--toy", "random:3:2:1", "--rho", "-1/2", "--mode", "sampler", "--count", "5")
    assert code == 0 and len(rep["edges"]) == 5
    code, rep = run(capsys, "cut-value", "--toy", "perfect:3:2:1", "--rho", "-1/2", "--cut-kind", "dictator")
    assert code == 0 and Fraction(rep["direct"]) == Fraction(3, 4)


def test_bounds(capsys):
    code, rep = run(capsys, "bounds", "--rho", "-0.689")
    assert code == 0 and rep["ordered_here"]


def test_out_file(capsys, tmp_path):
    path = tmp_path / "r.json"
    assert cli.main(["--out", str(path), "fourier", "--f", "dictator:2"]) == 0
    assert json.loads(path.read_text())["n"] == 2


@pytest.mark.parametrize("argv", [
    ["fourier", "--f", "bogus:3"],
    ["fourier", "--f", "maj:4"],
    ["sos-verify", "/nonexistent.json"],
    ["stab", "--rho", "1/2"],
    ["reduce", "--rho", "-1/2"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert cli.main(argv) == 2


def test_argparse_errors_exit_2(capsys):
    assert cli.main(["stab", "--rho", "abc", "--maj", "3"]) == 2
    assert "not a rational" in capsys.readouterr().err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mistkit", "bounds", "--rho", "-0.5"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["K"] == pytest.approx(0.5 - 0.5 / math.pi - (0.5 - 1 / math.pi) / 8)
