import json
import math
import os
import subprocess
from pathlib import Path

import jsonschema
import pytest

import rigidity_lab as rl

SCHEMA_FILE = Path(__file__).resolve().parents[2] / "schemas" / "rigidity-lab-1.schema.json"


@pytest.fixture(scope="module")
def validator():
    schema = json.loads(SCHEMA_FILE.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    return jsonschema.Draft202012Validator(schema)


def test_cat_map_linear_data():
    d = rl.analyze_linear([[2, 1], [1, 1]])
    assert d["lambda_u"] == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-14)
    assert d["cf_period"] == [1]
    assert d["fixed_counts"] == [1, 5, 16, 45]
    assert d["alpha"] == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-15)


def test_continued_fraction_of_sqrt2():
    _, period = rl.continued_fraction(0, 2, 1)
    assert period == [2]


def test_non_hyperbolic_matrix_rejected():
    with pytest.raises(rl.RigidityError, match="NotHyperbolic"):
        rl.analyze_linear([[1, 1], [0, 1]])


def test_map_and_certificate():
    f = rl.PerturbedMap.default_family(0.0)
    x, y = f(0.25, 0.5)
    assert (x % 1.0, y % 1.0) == pytest.approx((0.0, 0.75), abs=1e-15)
    cert = rl.verify_anosov(rl.PerturbedMap.default_family(0.03))
    assert cert["expansion_factor"] > 1.0 > cert["contraction_factor"]


def test_conjugacy_and_periodic_orbits():
    f = rl.PerturbedMap.default_family(0.03)
    h, stats = rl.solve_conjugacy(f, 128)
    assert stats["observed_ratio"] <= stats["contraction_bound"] + 0.05
    assert h.residual(200) < 1e-12
    assert h(0.0, 0.0) == pytest.approx((0.0, 0.0), abs=1e-12)
    u = h(0.3, 0.7)
    back = h.inverse(*u)
    assert math.dist(back, (0.3, 0.7)) < 1e-10
    counts, rows = rl.periodic_orbits(f, 3)
    assert counts == [1, 5, 16]
    assert len(rows) == 22


def test_circle_tools():
    r = rl.rotation_number(lambda x: x + 0.25, 1e-10)
    assert r.periodic and r.rho == 0.25
    golden = (math.sqrt(5) - 1) / 2
    r = rl.rotation_number(lambda x: x + golden, 1e-10)
    assert abs(r.rho - golden) < 1e-12
    samples = [i / 2048 + 0.1 * math.sin(2 * math.pi * i / 2048) for i in range(2048)]
    exponent, saturated = rl.holder_exponent(samples)
    assert saturated and exponent == 1.0
    assert rl.ac_diagnostic([i / 1024 for i in range(1024)]) == 1.0
    ko = rl.ko_report(lambda x: x + golden, 1024, -1, 5, 2)
    assert ko["lp_norm"] == 0.0 and ko["degree_two"]


def test_config_errors_carry_line_and_field():
    with pytest.raises(rl.RigidityError, match=r"cfg:3: field 'circle.sample'"):
        rl.parse_config("circle:\n  samples: 2048\n  sample: 3\n", "cfg")


def test_run_reports_validate(validator, tmp_path):
    cfg = rl.load_config(str(SCHEMA_FILE.parents[1] / "configs" / "default.yaml"))
    cfg.output = str(tmp_path)
    cfg.max_period = 3
    for sub in ("analyze-linear", "verify-anosov", "periodic-data"):
        out = rl.run(sub, cfg, write=True)
        assert out["exit_code"] == 0
        validator.validate(out["report"])
        on_disk = (Path(out["directory"]) / "report.json").read_text()
        assert on_disk == out["report_json"]
    summary = rl.aggregate(str(tmp_path))
    validator.validate(summary)
    assert summary["tampered"] == 0 and len(summary["runs"]) == 3


def test_schema_rejects_malformed_report(validator):
    cfg = rl.ExperimentConfig()
    report = rl.run("analyze-linear", cfg)["report"]
    report["schema"] = "rigidity-lab/0"
    with pytest.raises(jsonschema.ValidationError):
        validator.validate(report)


CLI = os.environ.get("RIGIDITY_LAB_CLI")


@pytest.mark.skipif(not CLI, reason="command line tool not built")
def test_cli_exit_codes(tmp_path, validator):
    def lab(*args):
        return subprocess.run([CLI, *args], capture_output=True, text=True, timeout=300)

    ok = lab("analyze-linear", "--out", str(tmp_path), "--print")
    assert ok.returncode == 0, ok.stderr
    validator.validate(json.loads(ok.stdout))

    hot = tmp_path / "hot.yaml"
    hot.write_text("map:\n  epsilon: 0.9\n")
    assert lab("verify-anosov", "--config", str(hot), "--out", str(tmp_path)).returncode == 2

    small = tmp_path / "small.yaml"
    small.write_text("holonomy:\n  points: 1\n  triples: 1\ntolerances:\n  holonomy: 1.0e-300\n")
    strict = lab("holonomy-check", "--config", str(small), "--out", str(tmp_path))
    assert strict.returncode == 3
    assert "identity violation" in strict.stderr

    bad = tmp_path / "bad.yaml"
    bad.write_text("map:\n  epsilon: fast\n")
    res = lab("analyze-linear", "--config", str(bad))
    assert res.returncode == 1 and "bad.yaml:2: field 'map.epsilon'" in res.stderr

    rep = lab("report", "--out", str(tmp_path))
    assert rep.returncode == 0
    validator.validate(json.loads(rep.stdout))
