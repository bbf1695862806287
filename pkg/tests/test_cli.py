import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from qpmshape.cli import main
from qpmshape.config import ConfigError, load_config, parse_quantity

DESIGN_INI = """
[crystal]
target = gaussian
l_eff = 5.67 mm
lambda_qpm = 10.85 um
m_min = 1
m_max = 6
length_budget = 10 mm

[reference]
uniform_length = 10 mm

[pump]
wavelength = 788 nm
fwhm = 0.7 nm

[dispersion]
matched_length = 24.2 mm
gvm_matched = true

[grid]
detunings = 5
"""

UNIFORM_INI = """
[crystal]
sections = one.csv

[pump]
wavelength = 788 nm
fwhm = 0.7 nm

[dispersion]
matched_length = 24.2 mm
gvm_matched = true
"""


def run(*args):
    return subprocess.run([sys.executable, "-m", "qpmshape", *map(str, args)], capture_output=True, text=True)


@pytest.fixture
def design_cfg(tmp_path):
    path = tmp_path / "design.ini"
    path.write_text(DESIGN_INI)
    return path


def read_csv(path):
    return np.loadtxt(path, delimiter=",", comments="#", skiprows=2)


def test_parse_quantity():
    assert parse_quantity("10.85 um", "length") == pytest.approx(10.85e-6)
    assert parse_quantity("10.85 µm", "length") == pytest.approx(10.85e-6)
    assert parse_quantity("2 mm", "length") == pytest.approx(2e-3)
    assert parse_quantity("3e-10 s/m", "s/m") == pytest.approx(3e-10)
    assert parse_quantity("7", "number") == 7.0
    for text, kind in (("1 furlong", "length"), ("3 s/m", "rad/s"), ("x", "number"), ("2 mm", "number")):
        with pytest.raises(ConfigError):
            parse_quantity(text, kind)


def test_config_rejects_missing_files_and_unknown_keys(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")
    bad = tmp_path / "bad.ini"
    bad.write_text("[crystal]\nsections = missing.csv\nlambda_qpm = 10 um\n")
    with pytest.raises(ConfigError):
        load_config(bad)
    bad.write_text("[crystal]\nuniform_length = 1 mm\n[grid]\nfoo = 3\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_pmf_on_single_uniform_section(tmp_path):
    # 500 periods of 10 um = 5 mm
    (tmp_path / "one.csv").write_text("# lambda_qpm_m = 1.0e-05\nm,n,D,polarity\n1,500,0.5,+1\n")
    cfg = tmp_path / "u.ini"
    cfg.write_text(UNIFORM_INI)
    res = run("pmf", "-c", cfg, "-o", tmp_path / "out")
    assert res.returncode == 0, res.stderr
    data = read_csv(tmp_path / "out" / "pmf_section.csv")
    for idx in np.linspace(100, data.shape[0] - 100, 5).astype(int):
        dk, re, im = data[idx, :3]
        assert re == pytest.approx(np.sinc(dk * 5e-3 / 2 / np.pi), abs=1e-10)
        assert im == pytest.approx(0.0, abs=1e-10)


def test_design_and_round_trip(design_cfg, tmp_path):
    out = tmp_path / "out"
    assert run("design", "-c", design_cfg, "-o", out).returncode == 0
    report = json.loads((out / "design_report.json").read_text())
    assert report["first_sidelobe_intensity"] <= 0.005
    assert report["total_length_m"] <= 10e-3
    sections = out / "sections.csv"
    plain = tmp_path / "plain.ini"
    plain.write_text(DESIGN_INI.split("[reference]")[0].replace("[crystal]", "[unused]") +
                     "[reference]" + DESIGN_INI.split("[reference]")[1])
    for cmd in ("pmf", "hom", "yield", "compare", "beat", "purity"):
        res = run(cmd, "-c", plain, "--sections", sections, "-o", tmp_path / cmd)
        assert res.returncode == 0, (cmd, res.stderr)
    again = json.loads((tmp_path / "yield" / "yield.json").read_text())
    direct = json.loads((out / "design_report.json").read_text())
    assert again["crystal_length_m"] == pytest.approx(direct["total_length_m"])


def test_outputs_are_byte_identical(design_cfg, tmp_path):
    for tag in ("a", "b"):
        for cmd in ("design", "pmf", "beat"):
            assert main([cmd, "-c", str(design_cfg), "-o", str(tmp_path / tag)]) == 0
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in files:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_purity_on_matched_sinc(tmp_path):
    cfg = tmp_path / "p.ini"
    cfg.write_text(UNIFORM_INI.replace("sections = one.csv", "uniform_length = 24.2 mm"))
    res = run("purity", "-c", cfg, "-o", tmp_path / "out", "--write-jsa")
    assert res.returncode == 0, res.stderr
    result = json.loads((tmp_path / "out" / "schmidt.json").read_text())
    assert result["purity"] == pytest.approx(0.81, abs=0.01)
    assert (tmp_path / "out" / "jsa.csv").exists()
    assert json.loads(res.stdout)["purity"] == result["purity"]


def test_config_errors_exit_2(tmp_path):
    res = run("pmf", "-c", tmp_path / "missing.ini")
    assert res.returncode == 2
    record = json.loads(res.stderr.strip().splitlines()[-1])
    assert record["error"] == "config"
    cfg = tmp_path / "c.ini"
    cfg.write_text("[crystal]\nuniform_length = 10 mm\n")
    res = run("hom", "-c", cfg, "-o", tmp_path / "o")
    assert res.returncode == 2 and "dispersion" in json.loads(res.stderr)["message"]


def test_numerical_errors_exit_3(tmp_path):
    cfg = tmp_path / "n.ini"
    cfg.write_text(UNIFORM_INI.replace("sections = one.csv", "uniform_length = 10 mm") +
                   "\n[grid]\nomega_lobes = 0.5\n")
    res = run("hom", "-c", cfg, "-o", tmp_path / "o")
    assert res.returncode == 3
    assert json.loads(res.stderr)["error"] == "numerical"


def test_help_lists_subcommands():
    res = run("--help")
    assert res.returncode == 0
    for cmd in ("design", "pmf", "hom", "beat", "purity", "yield", "compare"):
        assert cmd in res.stdout
