import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from lpresolvent.harness.acceptance import CRITERIA, run_acceptance
from lpresolvent.harness.campaigns import scan_damped, scan_laplace, sharpness_sphere
from lpresolvent.harness.cli import main
from lpresolvent.harness.config import OUT_ENV, CampaignConfig, ConfigError, load_config, parse_config, seed_for
from lpresolvent.harness.expected import ExpectedValuesError, default_path, load_expected, save_expected
from lpresolvent.harness.report import CSV_HEADER, ScanRow, fit_slope

SMALL = """
[campaign]
seed = 3
out = results

[geometry]
kind = torus
n = 3
N = 8

[scan]
segment = crucial-line
start = 1.5
stop = 3.2
count = 5
p = 6/5

[boyd]
restarts = 2
max_iters = 40
"""

SMALL_DAMPED = """
[geometry]
N = 8

[damping]
kind = cosines
offset = 2.0
cosines = 1 0 0 : 1.0 ; 0 1 0 : 0.5

[region]
kind = damped
delta = 0.5
L = 2.0
v_source = none
A_plus = 3.5   # flow value supplied directly to keep the test fast
A_minus = 0.5

[scan]
segment = upper-band
start = 2
stop = 3.4
count = 4

[boyd]
restarts = 2
max_iters = 40
"""


def _write(tmp_path, text, name="c.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_config_values(tmp_path, monkeypatch):
    monkeypatch.delenv(OUT_ENV, raising=False)
    cfg = load_config(_write(tmp_path, SMALL))
    assert cfg.seed == 3 and cfg.geometry.N == 8 and cfg.scan.count == 5
    assert cfg.scan.p == Fraction(6, 5) and cfg.scan.q == 6
    assert cfg.out == tmp_path / "results"
    damped = parse_config(SMALL_DAMPED)
    assert damped.damping.cosines == (((1, 0, 0), 1.0), ((0, 1, 0), 0.5))
    assert damped.region.A_plus == 3.5


@pytest.mark.parametrize("text", [
    "[nope]\nx = 1\n",
    "[scan]\nbogus = 1\n",
    "[scan]\ncount = many\n",
    "[scan]\np = 1\n",
    "[campaign]\nseed = -1\n",
    "[campaign]\nthreads = 0\n",
    "[damping]\nkind = cosines\ncosines = 1 0 0 1.0\n",
    "[region]\ndisks = 1 2\n",
    "not an ini file",
])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def test_out_env_override(monkeypatch, tmp_path):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "env"))
    assert parse_config(SMALL).out == tmp_path / "env"


def test_p_outside_range_warns():
    with pytest.warns(UserWarning):
        parse_config("[scan]\np = 2\n")


def test_overrides_ignore_none():
    cfg = CampaignConfig().with_overrides(seed=None, threads=2, scan__count=7, boyd__restarts=None)
    assert cfg.seed == 0 and cfg.threads == 2 and cfg.scan.count == 7 and cfg.boyd.restarts == 8


def test_seed_for():
    assert seed_for(0, 1) == seed_for(0, 1)
    assert len({seed_for(0, i) for i in range(100)}) == 100
    assert seed_for(0, 1, 0) != seed_for(0, 1, 1)
    assert 0 <= seed_for(2**64 - 1, 5) < 2**64


def test_slope_fit():
    x = np.array([2.0, 4.0, 8.0, 16.0])
    fit = fit_slope(x, 3 * x**-0.5)
    assert fit.slope == pytest.approx(-0.5) and fit.stderr == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_slope(x[:2], x[:2])


def test_scan_row_csv():
    row = ScanRow(2 + 0.5j, True, 1.2, 6.0, probe=0.25, iters=3, restarts=2)
    assert row.csv_fields()[-1] == "ok"
    assert len(row.csv_fields()) == len(CSV_HEADER)
    assert not ScanRow(1j, True, 1.2, 6.0).usable


def test_scan_laplace_report(monkeypatch, tmp_path):
    monkeypatch.delenv(OUT_ENV, raising=False)
    cfg = parse_config(SMALL)
    rep = scan_laplace(cfg)
    assert rep.csv_text().splitlines()[0] == ",".join(CSV_HEADER) == "re,im,region_ok,p,q,probe,iters,restarts,flag"
    assert all(r.region_ok for r in rep.rows)
    assert rep.slope is not None
    csv_path, json_path = rep.write(tmp_path)
    summary = json.loads(json_path.read_text())
    assert summary["verdict"] == rep.verdict and len(csv_path.read_text().splitlines()) == 6


def test_scan_laplace_rejects_damping_and_segment():
    with pytest.raises(ConfigError):
        scan_laplace(parse_config(SMALL + "\n[damping]\nkind = constant\nvalue = 1\n"))
    with pytest.raises(ConfigError):
        scan_laplace(parse_config(SMALL.replace("segment = crucial-line", "segment = upper-band")))


def test_parabolic_region_is_honest():
    rep = scan_laplace(parse_config(SMALL + "\n[region]\nkind = parabolic\n"))
    assert all(r.region_ok for r in rep.rows)


def test_threads_do_not_change_results():
    cfg = parse_config(SMALL)
    one = scan_laplace(cfg).csv_text()
    two = scan_laplace(cfg.with_overrides(threads=2)).csv_text()
    assert one == two


def test_zero_damping_matches_laplace():
    lap = scan_laplace(parse_config(SMALL))
    damped_text = SMALL.replace("segment = crucial-line", "segment = upper-band") + (
        "\n[region]\nkind = damped\nL = 1.0\nv_source = none\n"
    )
    dam = scan_damped(parse_config(damped_text))
    for a, b in zip(lap.rows, dam.rows):
        assert a.point == b.point
        assert a.probe == pytest.approx(b.probe, rel=1e-8)


def test_scan_damped_small():
    rep = scan_damped(parse_config(SMALL_DAMPED))
    assert [r.point.imag for r in rep.rows] == [4.0] * 4
    assert all(r.region_ok and np.isfinite(r.probe) for r in rep.rows)
    assert rep.extra["A_plus"] == 3.5


def test_scan_damped_flags_points_in_V():
    text = SMALL_DAMPED.replace("v_source = none", "v_source = none\ndisks = 2 4 0.1")
    rep = scan_damped(parse_config(text))
    assert rep.rows[0].flag == "in-V" and np.isnan(rep.rows[0].probe)


def test_sharpness_small():
    cfg = parse_config("""
[geometry]
kind = sphere
K = 12
[sharpness]
k_start = 3
k_stop = 9
[boyd]
restarts = 2
max_iters = 60
""")
    rep = sharpness_sphere(cfg)
    assert rep.growth > 1
    assert len(rep.shrinking.rows) == 7
    assert rep.summary()["verdict"] in ("SHARPNESS-DEMONSTRATED", "NOT-DEMONSTRATED")
    with pytest.raises(ConfigError):
        sharpness_sphere(cfg.with_overrides(sharpness__k_stop=11))


def test_packaged_expected_values_validate():
    data = load_expected()
    assert data["seed"] == 0
    assert set(data["calibration"]) == {"2", "3", "5", "11", "12"}
    assert default_path().exists()


def test_corrupted_expected_values(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ExpectedValuesError):
        load_expected(bad)
    data = load_expected()
    data["calibration"]["12"]["growth"] = "large"
    bad.write_text(json.dumps(data))
    with pytest.raises(ExpectedValuesError):
        load_expected(bad)
    del data["calibration"]["12"]
    with pytest.raises(Exception):
        save_expected(data, tmp_path / "x.json")


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv(OUT_ENV, raising=False)
    good = _write(tmp_path, SMALL)
    assert main(["scan-laplace", "--config", str(good), "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "scan-laplace.csv").exists()
    failing = _write(tmp_path, SMALL.replace("p = 6/5", "p = 6/5\nslope_limit = -10"), "f.ini")
    assert main(["scan-laplace", "--config", str(failing), "--out", str(tmp_path / "f")]) == 1
    broken = _write(tmp_path, "[scan]\ncount = x\n", "b.ini")
    assert main(["scan-laplace", "--config", str(broken)]) == 2
    huge = _write(tmp_path, SMALL + "\n[damping]\nkind = constant\nvalue = 1\n[region]\nqep_truncation = 12\n", "h.ini")
    assert main(["qep", "--config", str(huge), "--out", str(tmp_path / "q")]) == 3
    with pytest.raises(SystemExit):
        main(["scan-laplace", "--seed", "-1"])


def test_cli_acceptance_only(tmp_path, capsys):
    code = main(["acceptance", "--only", "6", "--out", str(tmp_path)])
    assert code == 0
    assert "criterion  6" in capsys.readouterr().out
    assert json.loads((tmp_path / "acceptance.json").read_text())[0]["id"] == "6"
    bad = tmp_path / "bad.json"
    bad.write_text("[]")
    assert main(["acceptance", "--only", "6", "--expected", str(bad)]) == 2


def test_run_acceptance_rejects_unknown():
    assert set(CRITERIA) == {str(i) for i in range(1, 14)}
    with pytest.raises(KeyError):
        run_acceptance(["99"], echo=None)


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "configs").glob("*.ini")),
                         ids=lambda p: p.name)
def test_example_configs_parse(path, monkeypatch):
    monkeypatch.delenv(OUT_ENV, raising=False)
    cfg = load_config(path)
    cfg.geometry.build()
