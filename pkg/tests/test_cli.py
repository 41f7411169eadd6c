import json

import numpy as np
import pytest
from click.testing import CliRunner

import polyrest as pr
from polyrest import restriction
from polyrest.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def files(tmp_path):
    paths = {}
    for name in ("two_node", "three_node"):
        p = tmp_path / f"{name}.json"
        p.write_text(pr.bundled_network(name))
        paths[name] = str(p)

    def loads(name, pc, qc, pg, qg):
        p = tmp_path / f"{name}_loads.json"
        p.write_text(json.dumps({"pc": pc, "qc": qc, "pg": pg, "qg": qg}))
        return str(p)

    paths["loads"] = loads
    paths["dir"] = tmp_path
    return paths


def test_pf_two_node_case(runner, files):
    loads = files["loads"]("case", [0.0], [0.0], [0.1], [0.01])
    result = runner.invoke(main, ["pf", files["two_node"], loads])
    assert result.exit_code == 0
    doc = json.loads(result.stdout)
    assert doc["v_sq"][0] == pytest.approx(1.1376, abs=5e-4)
    assert doc["slack_power"]["re"] == pytest.approx(-0.0938, abs=5e-4)
    assert doc["residual"] <= 1e-8
    assert doc["manifest"]["command"] == "pf"


def test_pf_zero_loads_flat(runner, files):
    loads = files["loads"]("zero", [0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0])
    result = runner.invoke(main, ["pf", files["three_node"], loads])
    assert result.exit_code == 0
    doc = json.loads(result.stdout)
    assert all(v["re"] == pytest.approx(1.0) for v in doc["voltages"])
    assert doc["slack_power"]["re"] == pytest.approx(0.0, abs=1e-12)


def test_pf_exit_codes(runner, files, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    loads = files["loads"]("l", [0.0], [0.0], [0.0], [0.0])
    assert runner.invoke(main, ["pf", str(bad), loads]).exit_code == 1

    overload = files["loads"]("over", [5.0], [0.0], [0.0], [0.0])
    result = runner.invoke(main, ["pf", files["two_node"], overload])
    assert result.exit_code == 3

    stuck = files["loads"]("stuck", [0.36], [0.0], [0.0], [0.0])
    result = runner.invoke(
        main, ["pf", files["two_node"], stuck, "--max-iter", "200"]
    )
    assert result.exit_code == 2


def test_restrict_round_trip(runner, files, tmp_path):
    out = tmp_path / "p.json"
    result = runner.invoke(
        main, ["restrict", files["two_node"], "--delta", "0.1", "--out", str(out)]
    )
    assert result.exit_code == 0
    p = restriction.from_json(out.read_text())
    assert p.delta == 0.1
    assert np.allclose(p.rhs, 0.081, atol=1e-14)
    # Round trip: serialize again and compare.
    assert np.allclose(restriction.from_json(restriction.to_json(p)).lhs, p.lhs)


def test_restrict_centered(runner, files):
    center = files["loads"]("c", [0.0], [0.0], [0.1], [0.01])
    result = runner.invoke(
        main, ["restrict", files["two_node"], "--center", center]
    )
    assert result.exit_code == 0
    doc = json.loads(result.stdout)
    assert doc["center"]["s"]["pg"] == [0.1]


def test_restrict_invalid_center(runner, files):
    center = files["loads"]("bad_center", [5.0], [0.0], [0.0], [0.0])
    result = runner.invoke(
        main, ["restrict", files["two_node"], "--center", center]
    )
    assert result.exit_code == 4


def test_restrict_delta_usage_error(runner, files):
    result = runner.invoke(main, ["restrict", files["two_node"], "--delta", "1.5"])
    assert result.exit_code != 0
    assert "between 0 and 1" in result.output


def test_seqopt_three_node(runner, files, tmp_path):
    out = tmp_path / "trace.json"
    result = runner.invoke(
        main, ["seqopt", files["three_node"], "--out", str(out)]
    )
    assert result.exit_code == 0
    doc = json.loads(out.read_text())
    assert doc["termination"] == "Converged"
    assert doc["iterates"][-1]["objective"] > 8.0
    assert doc["manifest"]["config"]["delta0"] == 0.1


def test_seqopt_max_iter_zero(runner, files):
    result = runner.invoke(
        main, ["seqopt", files["three_node"], "--max-iter", "0"]
    )
    assert result.exit_code == 0
    doc = json.loads(result.stdout)
    assert len(doc["iterates"]) == 1
    assert doc["iterates"][0]["objective"] == 0.0


def test_seqopt_infeasible_exit(runner, files, tmp_path):
    bounds = tmp_path / "pinned.json"
    bounds.write_text(json.dumps({
        "pc": [0.0, 0.0], "qc": [0.0, 0.0],
        "pg": [0.1, 0.1], "qg": [0.01, 0.01],
    }))
    result = runner.invoke(
        main,
        ["seqopt", files["two_node"], "--delta0", "0.05",
         "--bounds", str(bounds)],
    )
    assert result.exit_code == 5


def test_region_csv_and_polygon(runner, files, tmp_path):
    out = tmp_path / "region.csv"
    poly = tmp_path / "poly.csv"
    result = runner.invoke(
        main,
        ["region", files["three_node"], "--slice", "p1,p2", "--grid", "11",
         "--range", "-3", "3", "--out", str(out), "--polygon-out", str(poly)],
    )
    assert result.exit_code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# {")  # manifest comment
    assert lines[1] == "p1,p2,feasible"
    assert len(lines) == 2 + 121
    poly_lines = poly.read_text().splitlines()
    assert poly_lines[1] == "polygon,p1,p2"
    assert len(poly_lines) > 2


def test_region_single_point_grid(runner, files):
    result = runner.invoke(
        main,
        ["region", files["two_node"], "--slice", "p1", "--grid", "1",
         "--range", "0", "0"],
    )
    assert result.exit_code == 0
    body = [l for l in result.stdout.splitlines() if not l.startswith("#")]
    assert body == ["p1,feasible", "0,1"]


def test_region_bad_slice(runner, files):
    result = runner.invoke(
        main, ["region", files["two_node"], "--slice", "p9", "--grid", "3"]
    )
    assert result.exit_code == 1


def test_oracle_two_node_command(runner):
    result = runner.invoke(
        main,
        ["oracle", "two-node", "--r", "0.7", "--x", "0.1",
         "--p1", "0.1", "--q1", "0.01", "--delta", "0.1"],
    )
    assert result.exit_code == 0
    doc = json.loads(result.stdout)
    assert doc["solutions"][0]["v1_sq"] == pytest.approx(1.1376, abs=5e-4)
    assert doc["current_box"]["lo"] == pytest.approx(-0.1360, abs=5e-4)


def test_oracle_optimum_command(runner, files):
    result = runner.invoke(
        main, ["oracle", "optimum", files["three_node"], "--grid", "41"]
    )
    assert result.exit_code == 0
    doc = json.loads(result.stdout)
    assert doc["value"] > 8.0
    assert doc["resolution"] == 41
