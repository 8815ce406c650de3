import csv
import json
import math

import pytest

from dirsim import cli, jobs


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_validate_ok(tmp_path, capsys):
    cfg = _write(tmp_path, "g = 0.5\nGamma = 1\ntheta = pi/2\n")
    assert cli.main(["validate", "--config", cfg]) == 0
    assert "UnidirectionalRight" in capsys.readouterr().out


@pytest.mark.parametrize(
    "text, code",
    [
        ("Gamma = 1.2", cli.EXIT_VALIDATION),
        ("foo = 3", cli.EXIT_PARSE),
        ("g 0.5", cli.EXIT_PARSE),
        ('{"g": ', cli.EXIT_PARSE),
    ],
)
def test_validate_exit_codes(tmp_path, text, code, capsys):
    assert cli.main(["validate", "--config", _write(tmp_path, text)]) == code
    assert capsys.readouterr().err


def test_missing_config_is_a_parse_error(tmp_path):
    assert cli.main(["validate", "--config", str(tmp_path / "nope.cfg")]) == cli.EXIT_PARSE


def test_steady(tmp_path):
    out = tmp_path / "ss.csv"
    cfg = _write(tmp_path, "Gamma = 0.8\nOmega = 0.1\n")
    assert cli.main(["steady", "--config", cfg, "--out", str(out)]) == 0
    header, row = _rows(out)
    assert header == jobs.SWEEP_HEADER
    assert float(row[2]) == pytest.approx(0.30864197530864, rel=1e-12)
    assert float(row[4]) == pytest.approx(0.36 / 1.64, rel=1e-12)
    assert row[5:] == ["Dissipative", "true"]
    report = json.loads((tmp_path / "ss.csv.report.json").read_text())
    assert report["params"]["Gamma"] == 0.8
    assert report["max_rel_discrepancy"] < 1e-12


def test_steady_marginal_point_is_flagged(tmp_path):
    out = tmp_path / "ss.csv"
    cfg = _write(tmp_path, "Gamma = 1\nOmega = 0.1\n")
    assert cli.main(["steady", "--config", cfg, "--out", str(out)]) == 0
    _, row = _rows(out)
    assert row[2:5] == ["", "", ""] and row[6] == "false"


def test_dynamics_csv(tmp_path):
    out = tmp_path / "dyn.csv"
    cfg = _write(tmp_path, "Omega = 0.1\n")
    assert cli.main(["dynamics", "--config", cfg, "--t-end", "2", "--method", "exact", "--out", str(out)]) == 0
    rows = _rows(out)
    assert rows[0] == jobs.DYNAMICS_HEADER
    assert len(rows) == 2002
    last = [float(x) for x in rows[-1]]
    assert last[0] == pytest.approx(2.0)
    assert last[1] == pytest.approx(0.04 - 0.08 * math.exp(-1) + 1.04 * math.exp(-2), abs=1e-12)
    assert last[4] == pytest.approx(last[1], abs=1e-12)
    assert rows[1][1] == "1.0000000000000000e+00"
    report = json.loads((tmp_path / "dyn.csv.report.json").read_text())
    assert report["init"] == "single_excitation_first" and report["method"] == "exact"


def test_dynamics_json_to_stdout(tmp_path, capsys):
    cfg = _write(tmp_path, "g = 2\nOmega = 0.1\ninit = vacuum\n")
    assert cli.main(["dynamics", "--config", cfg, "--t-end", "1", "--dt", "0.01", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data[0]["n11"] == 0.0 and data[0]["delta"] is None
    assert len(data) == 101


def test_g_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = _write(tmp_path, "axis1 = g, 0, 3, 61\nOmega = 0.1\n")
    assert cli.main(["sweep", "--config", cfg, "--out", str(out), "--jobs", "4"]) == 0
    header, *rows = _rows(out)
    assert header == jobs.SWEEP_HEADER and len(rows) == 61
    scale = (1 / 0.1) ** 2
    assert float(rows[0][2]) * scale == pytest.approx(4.0, rel=1e-12)
    n22 = [float(r[3]) * scale for r in rows]
    assert max(n22) == pytest.approx(1.0, rel=1e-12)
    assert n22.index(max(n22)) == 10
    assert rows[0][1] == ""


def test_gamma_sweep_flags_endpoint(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = _write(tmp_path, "axis1 = Gamma, 0, 1, 11\nOmega = 0.1\n")
    assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    _, *rows = _rows(out)
    assert len(rows) == 11
    assert rows[-1][2:5] == ["", "", ""] and rows[-1][6] == "false"
    n11 = [float(r[2]) for r in rows[:-1]]
    assert n11 == sorted(n11)
    assert all(0 <= float(r[4]) <= 1 for r in rows[:-1])


def test_sweep_is_parallel_deterministic(tmp_path):
    cfg = _write(tmp_path, "axis1 = theta_minus_phi, 0, 2*pi, 13\naxis2 = Gamma, 0, 1, 5\ng = 0.5\nOmega = 0.1\n")
    outs = []
    for k in (1, 6):
        out = tmp_path / f"s{k}.csv"
        assert cli.main(["sweep", "--config", cfg, "--out", str(out), "--jobs", str(k)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_sweep_requires_axis(tmp_path):
    assert cli.main(["sweep", "--config", _write(tmp_path, "g = 1\n")]) == cli.EXIT_PARSE


def test_figure_fig4(tmp_path):
    assert cli.main(["figure", "fig4_dynamics", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "fig4_dynamics_phase_3pi2.csv")
    assert rows[0] == jobs.DYNAMICS_HEADER
    # exact zero up to the rounding of cos(3 pi / 2)
    assert all(float(r[2]) < 1e-30 for r in rows[1:])
    report = json.loads((tmp_path / "fig4_dynamics_phase_pi2.report.json").read_text())
    assert report["pass"] and report["params"]["g"] == 0.5


def test_figure_fig3(tmp_path):
    assert cli.main(["figure", "fig3_heatmap", "--out", str(tmp_path)]) == 0
    header, *rows = _rows(tmp_path / "fig3_heatmap.csv")
    assert header == jobs.HEATMAP_HEADER
    assert len(rows) == 181 * 101

    def at(i_phase, i_gamma):
        return rows[i_phase * 101 + i_gamma]

    assert float(at(45, 100)[0]) == pytest.approx(math.pi / 2)
    assert float(at(45, 100)[2]) == pytest.approx(-0.6, abs=1e-12)
    assert float(at(135, 100)[2]) == pytest.approx(1.0, abs=1e-12)
    deltas = [float(r[2]) for r in rows if r[2]]
    assert all(-1 <= d <= 1 for d in deltas)


def test_figure_fig2_steady(tmp_path):
    assert cli.main(["figure", "fig2_steady_unidirectional", "--out", str(tmp_path)]) == 0
    _, *rows = _rows(tmp_path / "fig2_steady_unidirectional.csv")
    last = rows[-1]
    assert float(last[2]) == pytest.approx(4.0) and float(last[3]) == pytest.approx(16.0)
    assert float(last[4]) == pytest.approx(-0.6, abs=1e-12)
    report = json.loads((tmp_path / "fig2_steady_unidirectional.report.json").read_text())
    assert report["max_rel_discrepancy"] < 1e-12


def test_crosscheck_steady(capsys):
    assert cli.main(["crosscheck", "steady"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_crosscheck_mutation_fails(capsys):
    assert cli.main(["crosscheck", "steady", "--mutate"]) == cli.EXIT_TOLERANCE
    assert "FAIL" in capsys.readouterr().out


def test_crosscheck_dynamics():
    assert cli.main(["crosscheck", "dynamics"]) == 0


def test_crosscheck_oracle_short_run(capsys):
    assert cli.main(["crosscheck", "oracle", "--t-end", "2", "--cutoff", "6"]) == 0
    out = capsys.readouterr().out
    assert "oracle/fig2_dyn_coherent/N=8" in out
