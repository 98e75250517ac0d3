"""End-to-end checks of the command-line front end: flag validation, exit
codes, delimited output layout, JSON schema conformance, artifact files."""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

from nlip.cli import build_parser, main
from nlip.core1d import lamellar_energy, lamellar_profile, optimal_k
from nlip.fields import SpinField, rasterize_profile, thin_grid

DOCS = Path(__file__).resolve().parent.parent / "docs"

QUICK = ["--t-init", "0.05", "--t-final", "0.02", "--cooling", "0.5",
         "--sweeps-per-stage", "4"]


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    assert rows, f"no data rows in {text!r}"
    return rows


# ------------------------------------------------------------- phase sweep


def test_phase1d_range_matches_staircase(capsys):
    code, out, _ = run_cli(
        ["phase1d", "--gamma-min", "0", "--gamma-max", "100", "--steps", "5"],
        capsys,
    )
    assert code == 0
    rows = parse_csv(out)
    assert list(rows[0].keys()) == ["gamma", "k_opt", "energy", "gamma1_k", "gamma2_k"]
    assert [row["k_opt"] for row in rows] == ["1", "2", "2", "2", "3"]
    for row in rows:
        g = float(row["gamma"])
        k = int(row["k_opt"])
        assert k in optimal_k(g)
        assert float(row["energy"]) == pytest.approx(lamellar_energy(k, g), rel=1e-12)
        assert float(row["gamma1_k"]) <= g <= float(row["gamma2_k"])


def test_phase1d_tie_renders_both_counts(capsys):
    code, out, _ = run_cli(["phase1d", "--gamma", "16"], capsys)
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 1
    assert rows[0]["k_opt"] == "1|2"


def test_phase1d_rejects_empty_range(capsys):
    code, _, err = run_cli(
        ["phase1d", "--gamma-min", "0", "--gamma-max", "0"], capsys
    )
    assert code == 2
    assert "gamma" in err


def test_phase1d_requires_some_gamma(capsys):
    code, _, err = run_cli(["phase1d"], capsys)
    assert code == 2
    assert "usage error" in err


def test_phase1d_json_format(capsys):
    code, out, _ = run_cli(
        ["phase1d", "--gamma", "100", "--format", "json"], capsys
    )
    assert code == 0
    rows = json.loads(out)
    assert rows[0]["k_opt"] == 3
    assert rows[0]["energy"] == pytest.approx(3 + 100 / 108, rel=1e-12)


# --------------------------------------------------------------- potential


def test_potential_csv_columns_and_artifact(tmp_path, capsys):
    out_path = tmp_path / "pot.csv"
    code, _, err = run_cli(
        ["potential", "--k", "2", "--samples", "101", "--out", str(out_path)],
        capsys,
    )
    assert code == 0
    rows = parse_csv(out_path.read_text())
    assert list(rows[0].keys()) == ["y", "u", "v", "v_prime"]
    assert len(rows) == 101
    slopes = np.array([float(row["v_prime"]) for row in rows])
    # steepest slope of the k = 2 potential is 1/(2k) at the jumps
    assert np.max(np.abs(slopes)) == pytest.approx(0.25, rel=1e-12)
    assert (tmp_path / "pot.png").exists()
    assert "wrote" in err


def test_potential_slopes_vanish_at_walls(capsys):
    code, out, _ = run_cli(["potential", "--k", "1", "--samples", "3"], capsys)
    assert code == 0
    rows = parse_csv(out)
    assert float(rows[0]["v_prime"]) == pytest.approx(0.0, abs=1e-14)
    assert float(rows[-1]["v_prime"]) == pytest.approx(0.0, abs=1e-14)


def test_potential_requires_k(capsys):
    code, _, err = run_cli(["potential"], capsys)
    assert code == 2
    assert "--k" in err


# --------------------------------------------------------------- stability


def test_stability_scan_reports_threshold_and_bound(capsys):
    code, out, _ = run_cli(["stability", "--k", "2", "--gamma", "0,50,1000"], capsys)
    assert code == 0
    rows = parse_csv(out)
    assert list(rows[0].keys()) == ["k", "gamma", "eps_star", "paper_bound", "note"]
    flat = rows[0]
    assert flat["eps_star"] == ""
    assert flat["note"] == "unconditionally stable"
    # gamma = 50 sits deep inside the k = 2 optimal window: no threshold
    # below the scan ceiling
    assert rows[1]["eps_star"] == ""
    assert rows[1]["note"] == "stable throughout scan"
    coupled = rows[2]
    bound = math.pi * math.sqrt(2 / 2000.0)
    assert float(coupled["paper_bound"]) == pytest.approx(bound, rel=1e-12)
    assert float(coupled["eps_star"]) >= bound


def test_stability_point_mode(capsys):
    code, out, _ = run_cli(
        ["stability", "--k", "3", "--gamma", "100", "--eps", "0.05"], capsys
    )
    assert code == 0
    rows = parse_csv(out)
    assert rows[0]["stable"] == "True"
    assert float(rows[0]["min_eig"]) > 0


def test_stability_rejects_bad_list(capsys):
    code, _, err = run_cli(["stability", "--k", "2;3", "--gamma", "5"], capsys)
    assert code == 2
    assert "--k" in err


# ------------------------------------------------------------- minimize2d


def test_minimize2d_json_schema_and_artifacts(tmp_path, capsys):
    jsonschema = pytest.importorskip("jsonschema")
    out_path = tmp_path / "run.json"
    code, _, err = run_cli(
        ["minimize2d", "--gamma", "5", "--eps", "0.05", "--grid", "6x12",
         "--seed", "7", "--out", str(out_path), "--format", "json", *QUICK],
        capsys,
    )
    assert code == 0
    report = json.loads(out_path.read_text())
    schema = json.loads((DOCS / "run_report.schema.json").read_text())
    jsonschema.validate(report, schema)
    assert report["seed"] == 7
    assert report["grid"] == [6, 12]
    assert (tmp_path / "run.png").exists()
    assert (tmp_path / "run_trace.png").exists()
    field_path = tmp_path / "run_field_s7.txt"
    assert field_path.exists()
    reloaded = SpinField.load(field_path)
    assert reloaded.values.shape == (6, 12)
    assert "seed:" not in err


def test_minimize2d_draws_and_prints_seed(capsys):
    code, out, err = run_cli(
        ["minimize2d", "--gamma", "5", "--eps", "0.05", "--grid", "6x12",
         "--format", "json", *QUICK],
        capsys,
    )
    assert code == 0
    assert "seed: " in err
    json.loads(out)  # stdout stays pure JSON


def test_minimize2d_multi_seed_csv(capsys):
    code, out, _ = run_cli(
        ["minimize2d", "--gamma", "5", "--eps", "0.05", "--grid", "6x12",
         "--seed", "3", "--seeds", "2", "--format", "csv", *QUICK],
        capsys,
    )
    assert code == 0
    rows = parse_csv(out)
    assert len(rows) == 2
    assert list(rows[0].keys()) == [
        "seed", "stripes", "predicted_k", "energy", "rescaled_energy",
        "l1_to_uk", "sweeps", "walltime_s",
    ]
    # children of one base seed must differ
    assert rows[0]["seed"] != rows[1]["seed"]


def test_minimize2d_rejects_bad_grid(capsys):
    code, _, err = run_cli(
        ["minimize2d", "--gamma", "5", "--grid", "8by240", *QUICK], capsys
    )
    assert code == 2
    assert "NXxNY" in err


def test_minimize2d_requires_gamma(capsys):
    code, _, err = run_cli(["minimize2d", *QUICK], capsys)
    assert code == 2
    assert "--gamma" in err


# ------------------------------------------------------------ experiments


def test_cascade_smoke_single_gamma(tmp_path, capsys):
    out_path = tmp_path / "cascade.csv"
    code, _, _ = run_cli(
        ["cascade", "--gammas", "5", "--eps", "0.05", "--grid", "6x12",
         "--seed", "1", "--out", str(out_path), *QUICK],
        capsys,
    )
    assert code == 0
    rows = parse_csv(out_path.read_text())
    assert list(rows[0].keys()) == ["gamma", "predicted_k", "stripes", "energy", "seed"]
    assert rows[0]["predicted_k"] == "1"
    assert (tmp_path / "cascade.png").exists()


def test_cascade_rejects_nonzero_mass(capsys):
    code, _, err = run_cli(
        ["cascade", "--gammas", "5", "--m", "0.5", "--grid", "6x12", *QUICK],
        capsys,
    )
    assert code == 3
    assert "m = 0" in err


def test_gamma_limit_guards_reference_width(capsys):
    code, _, err = run_cli(
        ["gamma-limit", "--gamma", "100", "--a", "0.5", "--j-list", "2", *QUICK],
        capsys,
    )
    assert code == 3
    assert "0.3848" in err


def test_gamma_limit_smoke(tmp_path, capsys):
    out_path = tmp_path / "limit.csv"
    code, _, _ = run_cli(
        ["gamma-limit", "--gamma", "100", "--a", "0.3", "--j-list", "2",
         "--ny", "24", "--seed", "4", "--out", str(out_path), *QUICK],
        capsys,
    )
    assert code == 0
    rows = parse_csv(out_path.read_text())
    assert list(rows[0].keys()) == [
        "j", "eps", "stripes", "l1", "l1_per_area", "rescaled_energy",
    ]
    assert float(rows[0]["eps"]) == pytest.approx(0.15)
    assert (tmp_path / "limit.png").exists()


# ----------------------------------------------------------------- energy


def test_energy_of_saved_field(tmp_path, capsys):
    grid = thin_grid(0.05, 8, 24)
    field = rasterize_profile(lamellar_profile(2), grid)
    field_path = tmp_path / "field.txt"
    field.save(field_path)
    out_path = tmp_path / "energy.csv"
    code, _, _ = run_cli(
        ["energy", "--field", str(field_path), "--gamma", "10",
         "--out", str(out_path)],
        capsys,
    )
    assert code == 0
    rows = parse_csv(out_path.read_text())
    assert list(rows[0].keys()) == [
        "perimeter", "nonlocal", "total", "rescaled_total", "gamma", "m", "eps",
    ]
    # two flat interfaces of width eps
    assert float(rows[0]["perimeter"]) == pytest.approx(0.1, rel=1e-12)
    assert float(rows[0]["total"]) == pytest.approx(
        float(rows[0]["perimeter"]) + float(rows[0]["nonlocal"]), rel=1e-12
    )
    assert (tmp_path / "energy.png").exists()


def test_energy_missing_field_file(tmp_path, capsys):
    code, _, err = run_cli(
        ["energy", "--field", str(tmp_path / "nope.txt"), "--gamma", "1"], capsys
    )
    assert code == 2
    assert "does not exist" in err


# ------------------------------------------------------------------ parser


def test_unknown_format_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["phase1d", "--gamma", "1", "--format", "xml"])
    assert exc.value.code == 2


def test_subcommand_is_required():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([])
    assert exc.value.code == 2
