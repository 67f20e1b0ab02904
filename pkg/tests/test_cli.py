import json

import pytest

from anomalyflow.cli import main, parse_config, read_form, InputError


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_verify_deterministic_only(capsys):
    assert main(["verify", "--trials", "0", "--seed", "42"]) == 0
    out = capsys.readouterr().out
    assert "bianchi1" in out and "0 failed" in out


def test_verify_fault_injection_names_identity(capsys):
    assert main(["verify", "--trials", "0", "--inject-fault", "torsion-sign"]) == 1
    err = capsys.readouterr().err
    assert "bianchi1" in err and "seed 0" in err


def test_verify_usage_errors():
    assert main(["verify", "--trials", "-1"]) == 2
    assert main(["verify", "--inject-fault", "nonsense"]) == 2
    assert main(["bogus"]) == 2


def test_config_grammar():
    cfg, lines = parse_config("# header\nN = 16   # grid\n\nactive_dims = x1, y1\neps=0.1\n")
    assert (cfg.N, cfg.active_dims, cfg.eps) == (16, ("x1", "y1"), 0.1)
    assert lines == {"N": 2, "active_dims": 4, "eps": 5}


@pytest.mark.parametrize("text, line", [
    ("N = 8\nfoo = 1\n", ":2:"),
    ("N = 8\nN = 16\n", ":2:"),
    ("eps 0.1\n", ":1:"),
    ("\n\nN = eight\n", ":3:"),
    ("t_end = nan\n", ":1:"),
])
def test_config_errors_carry_line_numbers(text, line):
    with pytest.raises(InputError, match=line):
        parse_config(text, "c.cfg")


def test_flow_flat_config(tmp_path):
    cfg = _write(tmp_path / "flat.cfg", "N = 8\npotential = 0\nt_end = 0.01\noutput_every = 1\n"
                                        "omega_floor = 0.99\n")
    out = tmp_path / "out"
    assert main(["flow", "--config", cfg, "--out-dir", str(out)]) == 0
    rows = (out / "diagnostics.csv").read_text().splitlines()
    assert rows[0].startswith("t,g_min_eig,omega_norm_min")
    # constant apart from the time column
    assert len({r.split(",", 1)[1] for r in rows[1:]}) == 1
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outcome"] == "completed"
    assert str(out / "diagnostics.csv") in manifest["artifacts"]
    assert str(out / "manifest.json") in manifest["artifacts"]


def test_flow_is_byte_reproducible_and_torsion_decays(tmp_path):
    cfg = _write(tmp_path / "b.cfg", "N = 16\neps = 0.05\nt_end = 0.02\noutput_every = 10\n")
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["flow", "--config", cfg, "--out-dir", str(a)]) == 0
    assert main(["flow", "--config", cfg, "--out-dir", str(b)]) == 0
    assert (a / "diagnostics.csv").read_bytes() == (b / "diagnostics.csv").read_bytes()
    summary = json.loads((a / "manifest.json").read_text())["summary"]
    assert summary["T2_max_final"] < summary["T2_max_initial"]


def test_flow_config_errors(tmp_path, capsys):
    assert main(["flow", "--config", _write(tmp_path / "x.cfg", "N = 8\nwat = 1\n")]) == 2
    assert "x.cfg:2" in capsys.readouterr().err
    assert main(["flow", "--config", str(tmp_path / "missing.cfg")]) == 2
    bad = _write(tmp_path / "p.cfg", "N = 8\n\npotential = cos(2*pi*x1)\neps = 80\n")
    assert main(["flow", "--config", bad]) == 2
    assert "p.cfg:3" in capsys.readouterr().err


def test_blowup_is_a_finding(tmp_path):
    cfg = _write(tmp_path / "f.cfg", "N = 8\nomega_floor = 5\n")
    out = tmp_path / "o"
    assert main(["flow", "--config", cfg, "--out-dir", str(out)]) == 0
    assert json.loads((out / "manifest.json").read_text())["outcome"] == "blowup_norm_floor"


def test_root_omega_squared(tmp_path, capsys):
    form = _write(tmp_path / "w2.txt", "12 12 2\n13 13 2:0\n23 23 2.0:0.0\n")
    assert main(["root", form]) == 0
    out = capsys.readouterr().out
    phi = read_form(out, 3, 1)
    assert abs(phi.comp((0,), (0,)) - 1j) < 1e-14
    residual = float(out.strip().splitlines()[-1].split()[-1])
    assert residual < 1e-12


def test_root_with_metric_and_output(tmp_path):
    form = _write(tmp_path / "f.txt", "12 13 1:0.5\n23 23 -1:0\n")
    metric = _write(tmp_path / "g.txt", "2 0:1 0\n0:-1 2 0\n0 0 1\n")
    out = tmp_path / "phi.txt"
    assert main(["root", form, "--metric", metric, "-o", str(out)]) == 0
    assert float(out.read_text().splitlines()[-1].split()[-1]) < 1e-12


def test_root_zero_and_errors(tmp_path, capsys):
    assert main(["root", _write(tmp_path / "z.txt", "# nothing\n")]) == 0
    assert all(line.endswith(" 0:0") for line in capsys.readouterr().out.splitlines()[:-1])
    assert main(["root", _write(tmp_path / "b.txt", "12 12 1\n12 1x 1\n")]) == 2
    assert "b.txt:2" in capsys.readouterr().err
    assert main(["root", "--m", "2", _write(tmp_path / "d2.txt", "12 12 1\n")]) == 2
    assert main(["root", "--m", "5", str(tmp_path / "z.txt")]) == 2
    bad_metric = _write(tmp_path / "neg.txt", "-1 0 0\n0 1 0\n0 0 1\n")
    assert main(["root", str(tmp_path / "z.txt"), "--metric", bad_metric]) == 2
