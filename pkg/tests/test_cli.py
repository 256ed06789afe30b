"""CLI tests: exit codes, report schema, determinism, error paths.

Commands run in-process through main(argv) so coverage and debuggers
see them; each writes its report into the pytest tmp dir.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from waylab import (
    ConservationLaw,
    GateImplementation,
    HilbertSpec,
    cnot_unitary,
    commutant_basis,
    sample_conserving_unitary,
)
from waylab.cli import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main
from waylab.cnot import implementation_to_json, pauli
from waylab.serialize import law_to_json, model_to_json
from waylab.measurement import IndirectMeasurementModel
from waylab.operators import StateVector


def run_cli(tmp_path: Path, command: str, config: dict | None = None, *extra: str) -> tuple[int, dict]:
    cfg_path = tmp_path / "config.json"
    out_path = tmp_path / "report.json"
    argv = [command, "--out", str(out_path), "--quiet", *extra]
    if config is not None:
        cfg_path.write_text(json.dumps(config))
        argv += ["--config", str(cfg_path)]
    code = main(argv)
    report = json.loads(out_path.read_text()) if out_path.exists() else {}
    return code, report


def _conserving_impl_json() -> tuple[dict, dict]:
    x = pauli("X")
    spec = HilbertSpec((2, 2))
    law = ConservationLaw(spec, x, x)
    u, _ = sample_conserving_unitary(commutant_basis(law), seed=5)
    impl = GateImplementation(spec, u)
    return implementation_to_json(impl), law_to_json(law)


def test_verify_identities_seeded(tmp_path):
    code, report = run_cli(
        tmp_path,
        "verify-identities",
        {"count": 6, "factor_dims": [[2, 2], [2, 2, 2]]},
        "--seed",
        "7",
    )
    assert code == EXIT_OK
    assert report["schema"] == 1
    assert report["header"]["command"] == "verify-identities"
    assert report["header"]["prng"] == "numpy PCG64"
    assert report["header"]["seed"] == 7
    assert report["summary"]["records"] == 12  # two identities per model
    assert report["summary"]["failed"] == 0
    assert all(r["passed"] for r in report["records"])
    assert report["summary"]["worst_slack"] <= 1e-9


def test_report_body_is_deterministic(tmp_path):
    bodies = []
    for name in ("a", "b"):
        out = tmp_path / f"{name}.json"
        code = main(
            [
                "verify-identities",
                "--seed",
                "11",
                "--config",
                str(_write(tmp_path, {"count": 4})),
                "--out",
                str(out),
                "--quiet",
            ]
        )
        assert code == EXIT_OK
        data = json.loads(out.read_text())
        data["header"].pop("generated_at")
        bodies.append(json.dumps(data, sort_keys=True))
    assert bodies[0] == bodies[1]


def _write(tmp_path: Path, config: dict) -> Path:
    path = tmp_path / f"cfg-{abs(hash(json.dumps(config, sort_keys=True)))}.json"
    path.write_text(json.dumps(config))
    return path


def test_verify_identities_explicit_model(tmp_path):
    x = pauli("X")
    spec = HilbertSpec((2, 2))
    law = ConservationLaw(spec, x, x)
    u, _ = sample_conserving_unitary(commutant_basis(law), seed=1)
    model = IndirectMeasurementModel(
        spec=spec,
        probe_state=StateVector.basis(2, 0),
        ancilla_state=None,
        interaction=u,
        pointer=pauli("Z"),
        observable=pauli("Z"),
    )
    code, report = run_cli(
        tmp_path,
        "verify-identities",
        {"model": model_to_json(model), "law": law_to_json(law)},
    )
    assert code == EXIT_OK
    assert report["summary"]["records"] == 2


def test_verify_identities_nonconserving_is_input_error(tmp_path, capsys):
    x = pauli("X")
    spec = HilbertSpec((2, 2))
    law = ConservationLaw(spec, x, x)
    model = IndirectMeasurementModel(
        spec=spec,
        probe_state=StateVector.basis(2, 0),
        ancilla_state=None,
        interaction=cnot_unitary(),
        pointer=pauli("Z"),
        observable=pauli("Z"),
    )
    code, _ = run_cli(
        tmp_path,
        "verify-identities",
        {"model": model_to_json(model), "law": law_to_json(law)},
    )
    assert code == EXIT_USAGE
    err = capsys.readouterr().err
    assert "residual" in err


def test_check_bounds_with_csv(tmp_path):
    code, report = run_cli(
        tmp_path, "check-bounds", {"count": 5, "factor_dims": [[2, 2]]}, "--seed", "3"
    )
    assert code == EXIT_OK
    assert report["summary"]["records"] == 20  # four relations per triple
    csv_path = tmp_path / "report.csv"
    assert csv_path.exists()
    lines = csv_path.read_text().strip().splitlines()
    assert len(lines) == 21
    assert lines[0].startswith("relation,")


def test_eval_impl_perfect_gate(tmp_path):
    impl_json = implementation_to_json(
        GateImplementation(HilbertSpec((2, 2)), cnot_unitary())
    )
    code, report = run_cli(
        tmp_path,
        "eval-impl",
        {"implementation": impl_json, "search": {"restarts": 6, "max_iter": 100}},
    )
    assert code == EXIT_OK
    assert report["summary"]["gate_fidelity"] == pytest.approx(1.0, abs=1e-8)
    assert report["summary"]["precision_worst_eps"] <= 1e-12
    assert report["summary"]["disturbance_worst_eta"] <= 1e-12


def test_eval_impl_with_law_emits_bound_records(tmp_path):
    impl_json, law_json = _conserving_impl_json()
    code, report = run_cli(
        tmp_path,
        "eval-impl",
        {
            "implementation": impl_json,
            "law": law_json,
            "search": {"restarts": 6, "max_iter": 100},
        },
    )
    assert code == EXIT_OK
    relations = sorted(r["relation"] for r in report["records"])
    assert relations == ["fidelity-link", "sigma-ceiling", "squared-noise"]
    assert all(r["passed"] for r in report["records"])


def test_eval_impl_requires_implementation(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "eval-impl", {})
    assert code == EXIT_USAGE
    assert "implementation" in capsys.readouterr().err


def test_optimize_spin_small_budget(tmp_path):
    code, report = run_cli(
        tmp_path,
        "optimize",
        {
            "kind": "spin",
            "n": 2,
            "restarts": 0,
            "max_iter": 6,
            "polish_steps": 0,
            "search": {"restarts": 3, "max_iter": 50},
        },
        "--seed",
        "2",
    )
    assert code == EXIT_OK
    record = report["records"][0]
    assert record["relation"] == "ceiling"
    assert record["passed"]
    assert record["ceiling_fsq"] == pytest.approx(15.0 / 16.0)
    assert report["summary"]["best_fidelity_sq"] <= 15.0 / 16.0 + 1e-9
    assert (tmp_path / "report.csv").exists()


def test_optimize_unknown_kind(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "optimize", {"kind": "spherical"}, "--seed", "1")
    assert code == EXIT_USAGE
    assert "spherical" in capsys.readouterr().err


def test_boson_check_advisories_do_not_fail_run(tmp_path):
    code, report = run_cli(
        tmp_path,
        "boson-check",
        {
            "nbars": [1.0],
            "samples_per": 1,
            "search": {"restarts": 2, "max_iter": 40},
        },
        "--seed",
        "4",
    )
    assert code == EXIT_OK
    kinds = [r["relation"] for r in report["records"]]
    assert sorted(kinds) == ["nbar-ceiling", "sigma-ceiling", "sigma-l3"]
    advisory = [r for r in report["records"] if r.get("advisory")]
    assert len(advisory) == 2
    # non-advisory rigorous ceiling must hold
    rigorous = [r for r in report["records"] if r["relation"] == "sigma-ceiling"]
    assert rigorous[0]["passed"]


def test_positive_control_bases(tmp_path):
    for basis in ("x", "z", "scalar"):
        code, report = run_cli(tmp_path, "positive-control", {"basis": basis})
        assert code == EXIT_OK, basis
        assert report["summary"]["records"] == 3
        assert report["summary"]["worst_slack"] <= 1e-9
    code, _ = run_cli(tmp_path, "positive-control", {"basis": "y"})
    assert code == EXIT_USAGE


def test_randomized_commands_require_seed(tmp_path, capsys):
    code, _ = run_cli(tmp_path, "verify-identities", {"count": 2})
    assert code == EXIT_USAGE
    assert "seed" in capsys.readouterr().err


def test_malformed_config_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"count": 2,\n  "oops"\n}')
    code = main(["verify-identities", "--config", str(bad), "--quiet"])
    assert code == EXIT_USAGE
    err = capsys.readouterr().err
    assert "at line 3, column 1" in err


def test_default_output_name(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code = main(["positive-control", "--quiet"])
    assert code == EXIT_OK
    assert (tmp_path / "waylab-positive-control-report.json").exists()


def test_stdout_summary_unless_quiet(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["positive-control", "--out", str(out)])
    assert code == EXIT_OK
    stdout = capsys.readouterr().out
    assert "positive-control" in stdout
    assert "PASS" in stdout


def test_exit_codes_are_distinct():
    assert (EXIT_OK, EXIT_USAGE, EXIT_VIOLATION) == (0, 1, 2)
