import json
import shutil
import subprocess

import pytest

from oracles import highs_mps
from p2hgrid.cli import main, parse_bus_list, parse_levels, UsageError

TOY = ["--scenario", "toy6", "--segments", "2"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_aviation_report(capsys, tmp_path):
    code, out, _ = run(capsys, "aviation", "--route", "DUB-LHR", "--out-dir", str(tmp_path))
    assert code == 0
    assert "119800.0 kg/day" in out and "412.50 t/day" in out and "2353.214 MWh/day" in out
    doc = json.loads((tmp_path / "aviation.json").read_text())
    assert doc["plan"]["daily_jet_fuel_kg"] == 119800
    assert [round(p["equivalent_price_eur_per_mwh"], 2) for p in doc["prices"]] == [25.45, 35.64, 43.78]


def test_aviation_custom_route_and_listing(capsys):
    code, out, _ = run(capsys, "aviation", "--flights-per-day", "10", "--fuel-per-journey", "1000",
                       "--seats", "100", "--co2-per-pax", "50", "--mode", "exact")
    assert code == 0 and "10000.0 kg/day" in out
    code, out, _ = run(capsys, "aviation", "--list-routes")
    assert code == 0 and "DUB-LHR" in out


def test_aviation_unknown_route(capsys):
    code, _, err = run(capsys, "aviation", "--route", "AAA-BBB")
    assert code == 2 and "unknown route" in err


def test_dispatch_outputs_and_reproducibility(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "dispatch", *TOY, "--out-dir", str(a))[0] == 0
    assert run(capsys, "dispatch", *TOY, "--out-dir", str(b))[0] == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == ["angle.csv", "curtailment.csv", "flow.csv", "generation.csv", "kpis.json",
                     "manifest.json", "shed.csv", "storage.csv", "wind.csv"]
    for n in names:
        if n != "manifest.json":
            assert (a / n).read_bytes() == (b / n).read_bytes(), n
    assert (a / "generation.csv").read_text().splitlines()[0] == "step,hours,g1_mw,g2_mw,g3_mw"
    kp = json.loads((a / "kpis.json").read_text())
    assert kp["kpis"]["xi_mw"] == pytest.approx(200 / 24, abs=1e-6)
    assert kp["baseline"]["aviation_co2_t_per_day"] == pytest.approx(412.5)
    man = json.loads((a / "manifest.json").read_text())
    assert len(man["scenario"]["sha256"]) == 64
    assert man["options"]["segments"] == 2
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    ma.pop("timings_s"), mb.pop("timings_s")
    for m in (ma, mb):
        for case in m["solver"].values():
            case.pop("solve_time_s", None)
    assert ma == mb


def test_dispatch_without_plant(capsys, tmp_path):
    code, _, err = run(capsys, "dispatch", *TOY, "--no-p2h", "--out-dir", str(tmp_path / "x"))
    assert code == 3 and "infeasible" in err
    code, _, _ = run(capsys, "dispatch", *TOY, "--no-p2h", "--h2-demand", "0", "--out-dir", str(tmp_path / "y"))
    assert code == 0


def test_dispatch_infeasible_fixed_capacity(capsys, tmp_path):
    assert run(capsys, "dispatch", *TOY, "--fix-xi", "0", "--out-dir", str(tmp_path))[0] == 3


def test_dispatch_iteration_limit_is_solver_failure(capsys, tmp_path):
    assert run(capsys, "dispatch", *TOY, "--max-iterations", "3", "--out-dir", str(tmp_path))[0] == 4


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "dispatch", "--scenario", "nowhere.yaml", "--out-dir", str(tmp_path))[0] == 2
    assert run(capsys, "dispatch", *TOY, "--p2h-bus", "77", "--out-dir", str(tmp_path))[0] == 2
    assert run(capsys, "sweep", "location", *TOY, "--buses", "1,x", "--out-dir", str(tmp_path))[0] == 2
    assert run(capsys, "sweep", "snsp", *TOY, "--levels", "0.9:0.1:0.5", "--out-dir", str(tmp_path))[0] == 2
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: [\n")
    assert run(capsys, "export", "--scenario", str(bad), "--output", str(tmp_path / "m.mps"))[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["dispatch", "--segments", "many"])
    assert exc.value.code == 2


def test_sweep_location_and_pairs(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", "location", *TOY, "--buses", "3..5", "--out-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "location.csv").read_text().splitlines()[0].startswith("bus,status,xi_mw")
    code, out, _ = run(capsys, "sweep", "pairs", *TOY, "--candidates", "3,4,5", "--out-dir", str(tmp_path))
    assert code == 0 and "best pair" in out
    matrix = (tmp_path / "pairs_matrix.csv").read_text().splitlines()
    assert matrix[0] == "bus_vs_bus_curtailment_gwh_per_day,3,4,5"
    assert len(json.loads((tmp_path / "pairs.json").read_text())["singles"]) == 3


def test_sweep_snsp_both_modes(capsys, tmp_path):
    code, _, _ = run(capsys, "sweep", "snsp", *TOY, "--levels", "0.6:0.1:0.8", "--out-dir", str(tmp_path))
    assert code == 0
    for stem in ("snsp_fixed_demand", "snsp_max_h2"):
        assert len((tmp_path / f"{stem}.csv").read_text().splitlines()) == 4


def test_sweep_strict_failure(capsys, tmp_path):
    args = ["sweep", "snsp", *TOY, "--fix-xi", "0", "--levels", "0.7", "--mode", "fixed-demand",
            "--out-dir", str(tmp_path)]
    assert run(capsys, *args)[0] == 0
    assert run(capsys, *args, "--strict")[0] == 4


def test_export_round_trip_with_highs(capsys, tmp_path):
    out = tmp_path / "toy.mps"
    code, text, _ = run(capsys, "export", *TOY, "--output", str(out))
    assert code == 0 and "1129 columns" in text
    assert highs_mps(out).status == "optimal"
    assert run(capsys, "export", *TOY, "--output", str(tmp_path / "missing" / "x.mps"))[0] == 2


def test_parsers():
    assert parse_bus_list("1..3,7") == [1, 2, 3, 7]
    assert parse_levels("0.55:0.05:0.70") == [0.55, 0.6, 0.65, 0.7]
    assert parse_levels("0.6,0.7") == [0.6, 0.7]
    for bad in ("", "3..1", "a"):
        with pytest.raises(UsageError):
            parse_bus_list(bad)


@pytest.mark.skipif(shutil.which("p2hgrid") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["p2hgrid", "aviation", "--route", "DUB-LHR"], capture_output=True, text=True)
    assert proc.returncode == 0 and "412.50" in proc.stdout
