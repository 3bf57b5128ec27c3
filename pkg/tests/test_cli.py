import csv
import json

import numpy as np
import pytest

from rotpeh import ConfigError, load_scenario
from rotpeh.cli import main
from rotpeh.scenario import ScenarioError, parse_quantity


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


SHORT = """name: {name}
device:
  M1: {m1}
sweep:
  direction: up
  f_start: 12.8 Hz
  f_end: 13.2 Hz
  df: 0.2 Hz
  settle_cycles: 40
frequency_map:
  f_start: 0 Hz
  f_end: 4 Hz
  df: 2 Hz
"""


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


# --------------------------------------------------------------------------- loading


def test_minimal_file_gives_prototype_without_plugins(tmp_path):
    sc = load_scenario(_write(tmp_path / "s.yaml", "name: base\n"))
    assert sc.config.M1 == 2.42e-3 and sc.config.M2 == 1.25e-3 and sc.config.L3 == 57e-3
    assert sc.stoppers == () and sc.magnets == ()


def test_stopper_gap_units(tmp_path):
    sc = load_scenario(_write(tmp_path / "s.yaml", "name: s\nstoppers:\n  - preset: A\n    d: 14.4 mm\n"))
    assert sc.stoppers[0].d == pytest.approx(0.0144, rel=1e-15)
    assert sc.stoppers[0].target == "main"


@pytest.mark.parametrize("text, dim, value", [("2.42 g", "mass", 2.42e-3), ("193 GPa", "pressure", 193e9),
                                              ("1.38 nF", "capacitance", 1.38e-9), ("900 rpm", "frequency", 15.0),
                                              (0.03, "length", 0.03)])
def test_quantities(text, dim, value):
    assert parse_quantity(text, dim) == pytest.approx(value, rel=1e-14)


def test_wrong_dimension_is_rejected():
    with pytest.raises(ConfigError):
        parse_quantity("3 g", "length", "L1")


def test_patch_too_long_names_field_and_line(tmp_path):
    path = _write(tmp_path / "s.yaml", "name: s\ndevice:\n  pzt_length: 40 mm\n")
    with pytest.raises(ScenarioError) as err:
        load_scenario(path)
    assert err.value.field.endswith("pzt_length")
    assert err.value.line == 3


def test_unknown_keys_warn_or_fail(tmp_path, caplog):
    path = _write(tmp_path / "s.yaml", "name: s\nbogus: 1\ndevice:\n  M9: 1 g\n")
    with caplog.at_level("WARNING"):
        load_scenario(path)
    assert "bogus" in caplog.text and "M9" in caplog.text
    with pytest.raises(ScenarioError):
        load_scenario(path, strict=True)


def test_two_stoppers_on_one_beam_are_rejected(tmp_path):
    path = _write(tmp_path / "s.yaml", "name: s\nstoppers:\n  - preset: A\n  - preset: A\n    d: 20 mm\n")
    with pytest.raises(ScenarioError):
        load_scenario(path)


def test_parse_error_reports_location(tmp_path):
    path = _write(tmp_path / "s.yaml", "name: s\ndevice:\n  M1: [2\n")
    with pytest.raises(ScenarioError) as err:
        load_scenario(path)
    assert err.value.line is not None


# --------------------------------------------------------------------------- commands


def test_config_error_exit_code_and_record(tmp_path):
    cfg = _write(tmp_path / "s.yaml", "name: s\ndevice:\n  pzt_length: 40 mm\n")
    code = main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")])
    assert code == 2
    rec = json.loads((tmp_path / "o" / "error.json").read_text())
    assert rec["kind"] == "config" and rec["field"].endswith("pzt_length") and rec["line"] == 3


def test_modes_only_writes_map_and_nothing_outside(tmp_path):
    cfg = _write(tmp_path / "s.yaml", SHORT.format(name="s", m1="2.42 g"))
    before = set(tmp_path.iterdir())
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o"), "--modes-only"]) == 0
    assert set(tmp_path.iterdir()) - before == {tmp_path / "o"}
    names = {p.name for p in (tmp_path / "o").iterdir()}
    assert names == {"frequency_map.csv", "manifest.json"}
    rows = _rows(tmp_path / "o" / "frequency_map.csv")
    assert rows[0] == ["omega_rpm", "drive_hz", "f1_hz", "f2_hz", "mac_1", "mac_2"]
    assert float(rows[1][2]) == pytest.approx(9.7506, abs=1e-4)


def test_manifest_round_trip_is_bitwise(tmp_path):
    cfg = _write(tmp_path / "s.yaml", SHORT.format(name="s", m1="2.42 g") + "stoppers:\n  - preset: A\n")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", "--config", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b")]) == 0
    for name in ("sweep_up.csv", "frequency_map.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert {"config_hash", "versions", "tolerances", "scenario"} <= set(man)


def test_sweep_csv_layout(tmp_path):
    cfg = _write(tmp_path / "s.yaml", SHORT.format(name="s", m1="2.42 g"))
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o"), "--sweep", "both"]) == 0
    up = _rows(tmp_path / "o" / "sweep_up.csv")
    down = _rows(tmp_path / "o" / "sweep_down.csv")
    assert up[0] == ["direction", "f_hz", "v_rms", "v_peak", "p_mean_mw", "steady_flag"]
    assert [r[1] for r in up[1:]] == ["12.800000", "13.000000", "13.200000"]
    assert [r[1] for r in down[1:]] == ["13.200000", "13.000000", "12.800000"]
    for r in up[1:]:
        assert float(r[4]) == pytest.approx(float(r[2]) ** 2 / 1e6 * 1e3, rel=1e-9)
    assert _rows(tmp_path / "o" / "summary.csv")[0] == ["scenario", "sweep", "power_area_mwhz",
                                                        "efficiency_pct_vs_baseline"]


def test_batch_of_mass_variants(tmp_path):
    for name, m1 in (("m242", "2.42 g"), ("m292", "2.92 g"), ("m342", "3.42 g")):
        _write(tmp_path / f"{name}.yaml", SHORT.format(name=name, m1=m1))
    batch = _write(tmp_path / "batch.yaml", "baseline: m242\nscenarios:\n  - m242.yaml\n  - m292.yaml\n"
                                            "  - m342.yaml\n")
    assert main(["batch", "--config", str(batch), "--out", str(tmp_path / "o"), "--jobs", "2"]) == 0
    for name in ("m242", "m292", "m342"):
        assert (tmp_path / "o" / name / "sweep_up.csv").exists()
        assert (tmp_path / "o" / name / "manifest.json").exists()
    rows = _rows(tmp_path / "o" / "summary.csv")
    assert [r[0] for r in rows[1:]] == ["m242", "m292", "m342"]
    assert rows[1][3] == "100.00"
    assert all(float(r[3]) > 0 for r in rows[1:])


def test_inline_batch_with_defaults(tmp_path):
    batch = _write(tmp_path / "batch.yaml", """baseline: a
defaults:
  sweep: {direction: up, f_start: 13 Hz, f_end: 13 Hz, df: 0.1 Hz, settle_cycles: 20}
  frequency_map: {f_start: 0 Hz, f_end: 1 Hz, df: 1 Hz}
scenarios:
  - name: a
  - name: b
    device: {M2: 1.5 g}
""")
    assert main(["batch", "--config", str(batch), "--out", str(tmp_path / "o")]) == 0
    man = json.loads((tmp_path / "o" / "b" / "manifest.json").read_text())
    assert _rows(tmp_path / "o" / "summary.csv")[1] == ["a", "up", "", ""]
    assert man["scenario"]["device"]["M2"] == pytest.approx(1.5e-3)


def test_magforce_table(tmp_path):
    cfg = _write(tmp_path / "s.yaml", "name: s\nmagnets:\n  - target: main\n    d: 48.5 mm\n"
                                      "magforce:\n  gap_start: 10 mm\n  gap_end: 20 mm\n  points: 3\n")
    assert main(["magforce", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = _rows(tmp_path / "o" / "magforce.csv")
    assert len(rows) == 4
    fz = [float(r[-1]) for r in rows[1:]]
    assert np.all(np.diff(np.abs(fz)) < 0)


def test_baseline_run_shows_two_peaks(tmp_path):
    cfg = _write(tmp_path / "s.yaml", """name: baseline
sweep: {direction: up, f_start: 11 Hz, f_end: 16.5 Hz, df: 0.05 Hz}
frequency_map: {f_start: 0 Hz, f_end: 2 Hz, df: 1 Hz}
""")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    peaks = _rows(tmp_path / "o" / "peaks.csv")
    assert len(peaks) == 3
    f1, f2 = float(peaks[1][3]), float(peaks[2][3])
    assert f1 < f2
