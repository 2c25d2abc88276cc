import json
import os

import numpy as np
import pytest

from hardylab.harness import (
    ExperimentConfig,
    build_report,
    density_sweep,
    run,
    trend_tag,
    verify,
)
from hardylab.cli import main as cli_main


def tiny_config(tmp_path, **overrides):
    payload = dict(
        domains=[{"family": "half_space"}],
        exponents=[2.0],
        resolutions=[24, 32],
        family_count=4,
        seed=3,
        output_dir=str(tmp_path / "out"),
        fatness_centers=6,
        density_samples=6,
    )
    payload.update(overrides)
    return ExperimentConfig(**payload)


def test_trend_tags():
    assert trend_tag([1.0, 1.5, 1.2]) == "stable"
    assert trend_tag([1.0, 2.5, 6.0]) == "diverging"
    assert trend_tag([4.0, 1.9, 0.9]) == "decaying"
    assert trend_tag([1.0]) == "stable"
    assert trend_tag([1.0, 3.0, 1.0]) == "stable"


def test_config_parsing_and_validation():
    cfg = ExperimentConfig.from_json(json.dumps(
        {"domains": [{"family": "annulus"}], "resolutions": [16]}))
    assert cfg.domains[0]["family"] == "annulus"
    with pytest.raises(ValueError):
        ExperimentConfig.from_json("{}")
    with pytest.raises(ValueError):
        ExperimentConfig.from_json("not json")
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(json.dumps(
            {"domains": [{"family": "annulus"}], "bogus_key": 1}))
    bad = ExperimentConfig(domains=[{"family": "annulus"}], exponents=[0.5])
    with pytest.raises(ValueError):
        bad.validate()


def test_run_produces_expected_files(tmp_path):
    cfg = tiny_config(tmp_path)
    report, files = run(cfg)
    names = {os.path.basename(f) for f in files}
    assert "equivalence_records.csv" in names
    assert "equivalence_report.json" in names
    assert "verdict_matrix.txt" in names
    assert any(n.startswith("fatness_half_space") for n in names)
    assert any(n.startswith("certificate_half_space") for n in names)
    key = "half_space|p=2"
    assert report.verdicts[key]["capacity_density"] == "fat"
    assert report.verdicts[key]["pointwise_hardy"] == "holds"
    assert not report.anomalies
    with open(os.path.join(cfg.output_dir, "equivalence_report.json")) as fh:
        payload = json.load(fh)
    assert payload["seed"] == 3
    assert payload["records"][0]["domain"] == "half_space"


def test_run_is_byte_deterministic(tmp_path):
    blobs = []
    for sub in ("a", "b"):
        cfg = tiny_config(tmp_path, output_dir=str(tmp_path / sub))
        _, files = run(cfg)
        blob = {}
        for path in files:
            with open(path, "rb") as fh:
                blob[os.path.basename(path)] = fh.read()
        blobs.append(blob)
    assert blobs[0] == blobs[1]


def test_density_sweep_rows():
    rows = density_sweep({"family": "half_space"}, 32, [0.5, 1.0], max_samples=6)
    assert len(rows) == 2
    assert all(row[3] > 0 for row in rows)


def test_verify_passes_and_detects_tamper(capsys):
    import hardylab.maximal as mx

    failures = verify()
    assert failures == []
    try:
        mx._TAMPER_DROP_SMALLEST_RUNG = True
        failures = verify()
    finally:
        mx._TAMPER_DROP_SMALLEST_RUNG = False
    assert failures
    assert failures[0][0] == "maximal operator properties"


def test_cli_run_and_errors(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({
        "domains": [{"family": "half_space"}],
        "exponents": [2.0],
        "resolutions": [24],
        "family_count": 3,
        "seed": 1,
        "output_dir": str(tmp_path / "out"),
        "fatness_centers": 4,
        "density_samples": 4,
    }))
    assert cli_main(["run", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "half_space" in out
    # unreadable and unparsable configs exit 2
    assert cli_main(["run", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert cli_main(["run", str(bad)]) == 2


def test_cli_subcommands(tmp_path, capsys):
    os.environ["HARDYLAB_OUT"] = str(tmp_path / "cli_out")
    try:
        assert cli_main(["capacity", "annulus", "2.0", "--resolution", "24"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["value"] > 0
        assert cli_main(["fatness", "half_space", "2.0", "--resolution", "24",
                         "--centers", "4"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["c0_estimate"] > 0
        assert os.path.exists(payload["csv"])
        assert cli_main(["hardy", "half_space", "2.0", "--resolution", "16",
                         "--count", "3", "--L", "2.0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["pointwise_constant"] > 0
        assert cli_main(["hardy", "half_space", "2.0", "--resolution", "16",
                         "--count", "3", "--alpha", "0.5"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert "fractional_constant" in payload
        assert cli_main(["content", "half_space", "1.0", "0.2",
                         "--resolution", "16"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["upper_value"] > 0
    finally:
        del os.environ["HARDYLAB_OUT"]


def test_coherence_anomaly_detection():
    from hardylab.harness import DomainRecord

    def rec(res, c0, pw):
        return DomainRecord(
            domain="probe", resolution=res, exponent=2.0, c0_estimate=c0,
            measure_density=0.5, boundary_poincare_constant=1.0,
            ball_average_constant=1.0, pointwise_constant=pw,
            pointwise_constant_20=pw, integral_quotient_sup=1.0,
            certified_constant=10.0, certified=True,
            inner_density_floor=0.5, seed=0)

    # stable fatness but diverging pointwise constant: flagged
    records = [rec(16, 0.5, 1.0), rec(32, 0.45, 2.5), rec(64, 0.5, 7.0)]
    report = build_report(records)
    assert report.anomalies
