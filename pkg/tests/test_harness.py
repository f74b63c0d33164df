"""Experiment descriptions, convergence/pointwise/soak drivers, observed
orders, and byte-level determinism of the emitted files."""
import json
import math

import numpy as np
import pytest

from subdiff import (
    ExperimentSpec,
    MeshFamily,
    TimeMesh,
    benchmark_families,
    compute_orders,
    make_graded_mesh,
    parse_config_file,
    parse_mesh_descriptor,
    run_convergence,
    run_pointwise_comparison,
    run_stability_soak,
    write_mesh,
)
from subdiff.benchmarks import FAMILY_LABELS
from subdiff.errors import ValidationError
from subdiff.harness import WORKERS_ENV_VAR, _resolve_workers


def small_spec(out_dir=None, workers=None):
    return ExperimentSpec(
        alphas=(0.5,),
        families=("graded:r=2", "uniform"),
        step_counts=(8, 16),
        space="d1:64",
        backend="closed",
        workers=workers,
        out_dir=None if out_dir is None else str(out_dir),
    )


def test_mesh_family_labels_and_building():
    family = MeshFamily(kind="graded", grading=2.0)
    assert family.label == "r=2"
    assert family.grading_at(0.5) == 2.0
    family = MeshFamily(kind="graded", grading_numerator=2.0)
    assert family.label == "r=2/alpha"
    assert family.grading_at(0.5) == 4.0
    assert MeshFamily(kind="uniform").label == "uniform"
    assert MeshFamily(kind="rvariable").label == "rvariable"
    mesh = family.build(alpha=0.5, horizon=1.0, num_steps=10)
    assert mesh.num_steps == 10
    assert mesh.nodes[1] == pytest.approx(0.1**4)


def test_mesh_family_validation():
    with pytest.raises(ValidationError):
        MeshFamily(kind="mystery")
    with pytest.raises(ValidationError):
        MeshFamily(kind="graded")
    with pytest.raises(ValidationError):
        MeshFamily(kind="graded", grading=2.0, grading_numerator=2.0)
    with pytest.raises(ValidationError):
        MeshFamily(kind="uniform", grading=2.0)
    with pytest.raises(ValidationError):
        MeshFamily(kind="file")
    with pytest.raises(ValidationError):
        MeshFamily(kind="uniform").grading_at(0.5)


def test_file_family_round_trip(tmp_path):
    mesh = make_graded_mesh(1.0, 12, 3.0)
    path = tmp_path / "stored.txt"
    write_mesh(mesh, path)
    family = MeshFamily(kind="file", path=str(path))
    assert family.label == f"file:{path}"
    back = family.build(alpha=0.7, horizon=1.0, num_steps=12)
    assert np.array_equal(back.nodes, mesh.nodes)
    with pytest.raises(ValidationError):
        family.build(alpha=0.7, horizon=1.0, num_steps=24)
    with pytest.raises(ValidationError):
        family.build(alpha=0.7, horizon=2.0, num_steps=12)


def test_parse_mesh_descriptor():
    assert parse_mesh_descriptor("uniform").kind == "uniform"
    assert parse_mesh_descriptor("rvariable").kind == "rvariable"
    assert parse_mesh_descriptor("r-variable").kind == "rvariable"
    family = parse_mesh_descriptor("graded:r=2.5")
    assert family.grading == 2.5
    family = parse_mesh_descriptor("graded:r=3/alpha")
    assert family.grading_numerator == 3.0
    family = parse_mesh_descriptor("file:/tmp/mesh.txt")
    assert family.kind == "file" and family.path == "/tmp/mesh.txt"
    for bad in ("", "graded", "graded:r=", "graded:2", "strange:1"):
        with pytest.raises(ValidationError):
            parse_mesh_descriptor(bad)


def test_benchmark_families_match_reference_labels():
    assert tuple(f.label for f in benchmark_families()) == FAMILY_LABELS


def test_experiment_spec_validation():
    spec = small_spec()
    assert spec.alphas == (0.5,)
    assert tuple(f.label for f in spec.families) == ("r=2", "uniform")
    with pytest.raises(ValidationError):
        ExperimentSpec(alphas=(), families=("uniform",), step_counts=(8,))
    with pytest.raises(ValidationError):
        ExperimentSpec(alphas=(1.5,), families=("uniform",), step_counts=(8,))
    with pytest.raises(ValidationError):
        ExperimentSpec(alphas=(0.5,), families=("uniform",), step_counts=(16, 8))
    with pytest.raises(ValidationError):
        ExperimentSpec(alphas=(0.5,), families=("uniform", "uniform"), step_counts=(8,))
    with pytest.raises(ValidationError):
        ExperimentSpec(alphas=(0.5,), families=("uniform",), step_counts=(8,), backend="odd")
    with pytest.raises(ValidationError):
        ExperimentSpec(alphas=(0.5,), families=("uniform",), step_counts=(8,), space="d1:bad")


def test_experiment_spec_from_mapping():
    spec = ExperimentSpec.from_mapping(
        {
            "alphas": "0.3, 0.5",
            "meshes": "uniform, graded:r=2",
            "step_counts": "8, 16",
            "space": "d1:32",
            "backend": "closed",
            "quad_rel_tol": "1e-11",
            "workers": "2",
        }
    )
    assert spec.alphas == (0.3, 0.5)
    assert spec.step_counts == (8, 16)
    assert spec.workers == 2
    assert spec.quad_rel_tol == 1e-11
    with pytest.raises(ValidationError):
        ExperimentSpec.from_mapping({"alphas": "0.5"})
    with pytest.raises(ValidationError):
        ExperimentSpec.from_mapping(
            {"alphas": "0.5", "meshes": "uniform", "step_counts": "8", "shape": "x"}
        )


def test_parse_config_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(
        "# experiment\n"
        "alphas = 0.5\n"
        "meshes = uniform, graded:r=2  # trailing comment\n"
        "\n"
        "step_counts = 8, 16\n"
    )
    mapping = parse_config_file(path)
    assert mapping["alphas"] == "0.5"
    assert mapping["meshes"] == "uniform, graded:r=2"
    bad = tmp_path / "bad.cfg"
    bad.write_text("alphas 0.5\n")
    with pytest.raises(ValidationError) as exc:
        parse_config_file(bad)
    assert "bad.cfg:1" in str(exc.value)
    with pytest.raises(ValidationError):
        parse_config_file(tmp_path / "missing.cfg")


def test_compute_orders_known_cases():
    assert compute_orders([4.0, 1.0], [10, 20]) == pytest.approx([2.0])
    assert compute_orders([1.0, 1.0, 1.0], [10, 20, 40]) == pytest.approx([0.0, 0.0])
    # halving the error from K=480 to K=640 reads as order ~2.41; a
    # published-table pair: 2.3437e-3 -> 1.5672e-3 gives 1.3989
    got = compute_orders([2.3437e-3, 1.5672e-3], [480, 640])
    assert got[0] == pytest.approx(1.3989, abs=2e-4)


def test_compute_orders_validation():
    with pytest.raises(ValidationError):
        compute_orders([1.0], [10])
    with pytest.raises(ValidationError):
        compute_orders([1.0, 0.0], [10, 20])
    with pytest.raises(ValidationError):
        compute_orders([1.0, 0.5], [20, 10])
    with pytest.raises(ValidationError):
        compute_orders([1.0, 0.5, 0.25], [10, 20])


def test_resolve_workers_env(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV_VAR, raising=False)
    assert _resolve_workers(None) == 1
    assert _resolve_workers(3) == 3
    monkeypatch.setenv(WORKERS_ENV_VAR, "4")
    assert _resolve_workers(None) == 4
    monkeypatch.setenv(WORKERS_ENV_VAR, "zero")
    with pytest.raises(ValidationError):
        _resolve_workers(None)
    monkeypatch.setenv(WORKERS_ENV_VAR, "0")
    with pytest.raises(ValidationError):
        _resolve_workers(None)


def test_run_convergence_report_structure(tmp_path):
    report = run_convergence(small_spec(out_dir=tmp_path))
    assert len(report.cells) == 4
    errors = report.max_errors(0.5, "r=2")
    assert errors.shape == (2,)
    assert np.all(errors > 0.0)
    assert errors[1] < errors[0]
    orders = report.observed_orders(0.5, "r=2")
    assert orders.shape == (1,)
    assert 0.5 < orders[0] < 2.5
    cell = report.cell(0.5, "uniform", 16)
    assert cell.num_steps == 16
    assert cell.residual_max <= 1e-10
    with pytest.raises(ValidationError):
        report.cell(0.5, "r=2", 999)
    with pytest.raises(ValidationError):
        report.observed_orders(0.3, "r=2")

    csv_path = tmp_path / "convergence_alpha0p5.csv"
    json_path = tmp_path / "convergence_summary.json"
    assert csv_path.exists() and json_path.exists()
    payload = json.loads(json_path.read_text())
    assert payload["kind"] == "convergence"
    assert payload["passed"] is True
    assert len(payload["cells"]) == 4
    assert "alpha=0.5|r=2" in payload["orders"]
    # wall-clock timings must never reach the persisted outputs
    assert "wall" not in json_path.read_text()
    assert "wall" not in csv_path.read_text()


def test_convergence_outputs_are_deterministic(tmp_path):
    dir_a, dir_b = tmp_path / "a", tmp_path / "b"
    run_convergence(small_spec(out_dir=dir_a))
    run_convergence(small_spec(out_dir=dir_b, workers=2))
    for name in ("convergence_alpha0p5.csv", "convergence_summary.json"):
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()


def test_alpha_table_layout(tmp_path):
    run_convergence(small_spec(out_dir=tmp_path))
    lines = (tmp_path / "convergence_alpha0p5.csv").read_text().splitlines()
    header = [line for line in lines if line.startswith("#")]
    data = [line for line in lines if not line.startswith("#")]
    assert any(line.startswith("# subdiff 0.1.0") for line in header)
    assert data[0] == "family,metric,K=8,K=16"
    # per family: one error row and one order row (blank first slot)
    assert data[1].startswith("r=2,error,")
    assert data[2].startswith("r=2,order,,")
    assert data[3].startswith("uniform,error,")


def test_run_pointwise_comparison(tmp_path):
    curves = run_pointwise_comparison(
        0.7,
        families=("graded:r=2/alpha", "rvariable"),
        num_steps=80,
        space="d1:512",
        out_dir=tmp_path,
    )
    assert [c.family_label for c in curves] == ["r=2/alpha", "rvariable"]
    for curve in curves:
        assert curve.times.shape == (80,)
        assert curve.steps.shape == (80,)
        assert curve.l2_error.shape == (80,)
        assert curve.max_l2_error == pytest.approx(np.max(curve.l2_error))
    files = sorted(p.name for p in tmp_path.glob("pointwise_*.csv"))
    assert files == [
        "pointwise_alpha0p7_K80_r2-alpha.csv",
        "pointwise_alpha0p7_K80_rvariable.csv",
    ]
    data = [
        line
        for line in (tmp_path / files[1]).read_text().splitlines()
        if not line.startswith("#")
    ]
    assert data[0] == "level,t,step,l2_error"
    assert len(data) == 1 + 80
    with pytest.raises(ValidationError):
        run_pointwise_comparison(0.7, families=(), num_steps=8)


def test_soak_quick_pass(tmp_path):
    report = run_stability_soak(
        0.5,
        horizon=50.0,
        num_steps=120,
        split_time=1.0,
        split_steps=24,
        space="d1:64",
        out_dir=tmp_path,
    )
    assert report.passed and report.plateau_ok
    assert report.mesh_admissible
    assert report.growth_ratio <= report.plateau_factor
    assert report.residual_max <= 1e-10
    traj = tmp_path / "soak_trajectory.csv"
    summary = tmp_path / "soak_summary.json"
    assert traj.exists() and summary.exists()
    payload = json.loads(summary.read_text())
    assert payload["plateau_ok"] is True
    data = [line for line in traj.read_text().splitlines() if not line.startswith("#")]
    assert data[0] == "level,t,l2_norm,h1_seminorm"
    assert len(data) == 1 + 121


def test_soak_zero_source_decays():
    report = run_stability_soak(
        0.5,
        horizon=5.0,
        num_steps=60,
        split_time=1.0,
        split_steps=30,
        space="d1:64",
        zero_source=True,
    )
    assert report.zero_source
    assert report.h1_nonincreasing and report.l2_nonincreasing
    assert report.passed


def test_soak_warns_on_inadmissible_mesh():
    steps = np.concatenate([[1.0], np.cumprod(np.full(19, 0.2))])
    mesh = TimeMesh(np.concatenate([[0.0], np.cumsum(steps)]))
    with pytest.warns(RuntimeWarning):
        report = run_stability_soak(0.5, space="d1:32", mesh=mesh)
    assert not report.mesh_admissible
    assert report.first_violation == 2


def test_soak_respects_given_mesh():
    mesh = make_graded_mesh(2.0, 40, 2.0)
    report = run_stability_soak(0.5, space="d1:32", mesh=mesh)
    assert report.num_steps == 40
    assert report.horizon == 2.0
