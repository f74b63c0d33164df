"""Mesh construction, admissibility certification, and file round-trips."""
import math

import numpy as np
import pytest

from subdiff import (
    TimeMesh,
    admissibility_thresholds,
    certify_mesh,
    make_graded_mesh,
    make_graded_then_uniform,
    make_r_variable_mesh,
    make_uniform_mesh,
    pair_ratio_bound,
    read_mesh,
    write_mesh,
)
from subdiff.errors import MeshFileError, NonMonotoneMeshError, ValidationError
from subdiff.meshes import ratio_condition_margins

RHO_STAR = 0.3563409986801161
ETA = 0.4753295857871308


def mesh_from_ratios(ratios, first_step=1.0):
    """Mesh whose consecutive step ratios are exactly the given values."""
    factors = np.concatenate([[1.0], np.asarray(ratios, dtype=float)])
    steps = first_step * np.cumprod(factors)
    return TimeMesh(np.concatenate([[0.0], np.cumsum(steps)]))


def test_thresholds_frozen_values():
    rho_star, eta = admissibility_thresholds()
    assert rho_star == pytest.approx(RHO_STAR, abs=1e-13)
    assert eta == pytest.approx(ETA, abs=1e-13)
    # defining polynomial identities of the two roots
    assert rho_star * (1 + rho_star) == pytest.approx(
        1 - 3 * rho_star**2 * (1 + rho_star), abs=1e-12
    )
    assert 3 * eta**2 * (1 + eta) == pytest.approx(1.0, abs=1e-12)
    assert 0 < rho_star < eta < 1


def test_pair_ratio_bound_closed_form():
    rho = 0.36
    expected = rho**2 * (1 + rho) / (1 - 3 * rho**2 * (1 + rho))
    assert pair_ratio_bound(rho) == pytest.approx(expected, rel=1e-15)
    assert pair_ratio_bound(rho) == pytest.approx(0.374032, rel=1e-5)


def test_pair_ratio_bound_domain():
    with pytest.raises(ValidationError):
        pair_ratio_bound(0.0)
    with pytest.raises(ValidationError):
        pair_ratio_bound(ETA + 0.01)
    with pytest.raises(ValidationError):
        pair_ratio_bound(-0.2)


def test_ratio_condition_margins_signs():
    # ratios >= 1 satisfy the reciprocal condition comfortably
    good = ratio_condition_margins(np.array([1.0, 1.2, 0.9]))
    assert np.all(good >= 0.0)
    # 0.36 followed by 0.38 violates it
    bad = ratio_condition_margins(np.array([0.36, 0.38]))
    assert bad[0] < 0.0
    with pytest.raises(ValidationError):
        ratio_condition_margins(np.array([0.5, -1.0]))
    assert ratio_condition_margins(np.array([0.7])).size == 0


def test_time_mesh_basic_accessors():
    mesh = TimeMesh([0.0, 0.1, 0.4, 1.0])
    assert mesh.num_steps == 3
    assert mesh.horizon == 1.0
    assert np.allclose(mesh.steps, [0.1, 0.3, 0.6])
    assert np.allclose(mesh.ratios, [3.0, 2.0])
    head = mesh.head(2)
    assert head.num_steps == 2
    assert np.array_equal(head.nodes, mesh.nodes[:3])
    with pytest.raises(ValidationError):
        mesh.head(0)
    with pytest.raises(ValidationError):
        mesh.head(4)


def test_time_mesh_rejects_bad_nodes():
    with pytest.raises(NonMonotoneMeshError):
        TimeMesh([0.0, 0.5, 0.5, 1.0])
    with pytest.raises(NonMonotoneMeshError):
        TimeMesh([0.0, 0.5, 0.4, 1.0])
    with pytest.raises(NonMonotoneMeshError):
        TimeMesh([0.1, 0.5, 1.0])
    with pytest.raises(ValidationError):
        TimeMesh([0.0])
    with pytest.raises(ValidationError):
        TimeMesh([0.0, np.inf])
    mesh = TimeMesh([0.0, 1.0])
    with pytest.raises(ValueError):
        mesh.nodes[0] = 5.0


def test_uniform_and_graded_meshes_admissible():
    for mesh in (
        make_uniform_mesh(1.0, 40),
        make_graded_mesh(1.0, 40, 2.0),
        make_graded_mesh(1.0, 40, 2.0 / 0.3),
        make_graded_mesh(2.5, 64, 4.0),
    ):
        report = certify_mesh(mesh)
        assert report.satisfied
        assert report.first_violation is None
        assert np.all(report.per_step_margin > 0.0)


def test_uniform_margin_value():
    report = certify_mesh(make_uniform_mesh(1.0, 10))
    assert np.allclose(report.per_step_margin, 1.0 - RHO_STAR)


def test_r_variable_mesh_shape_and_admissibility():
    for alpha in (0.3, 0.5, 0.7):
        mesh = make_r_variable_mesh(1.0, 128, alpha)
        assert mesh.num_steps == 128
        assert mesh.horizon == 1.0
        assert certify_mesh(mesh).satisfied
        # grading relaxes: early steps much smaller than late ones
        assert mesh.steps[0] < mesh.steps[-1]


def test_graded_then_uniform_layout():
    mesh = make_graded_then_uniform(50.0, 500, 2.0, split_time=1.0, split_steps=100)
    assert mesh.num_steps == 500
    assert mesh.horizon == 50.0
    assert mesh.nodes[100] == pytest.approx(1.0)
    assert np.allclose(np.diff(mesh.nodes[100:]), 49.0 / 400.0)
    assert certify_mesh(mesh).satisfied
    with pytest.raises(ValidationError):
        make_graded_then_uniform(50.0, 500, 2.0, split_time=60.0, split_steps=100)
    with pytest.raises(ValidationError):
        make_graded_then_uniform(50.0, 500, 2.0, split_time=1.0, split_steps=500)


def test_certify_flags_small_ratio():
    # second ratio 0.2 is below the hard lower threshold
    mesh = TimeMesh([0.0, 0.5, 0.6, 0.62])
    report = certify_mesh(mesh)
    assert not report.satisfied
    assert report.first_violation == 2
    assert report.per_step_margin[0] < 0.0


def test_certify_flags_pair_violation():
    # 0.36 sits between the thresholds and caps the next ratio at ~0.374
    report = certify_mesh(mesh_from_ratios([0.36, 0.38]))
    assert not report.satisfied
    assert report.first_violation == 3


def test_certify_pair_at_bound_is_admissible():
    # a successor exactly at the cap is allowed (the cap is inclusive);
    # in particular the repeated ratio 0.36 satisfies its own cap of ~0.374
    report = certify_mesh(mesh_from_ratios([0.36, 0.36]))
    assert report.satisfied
    # a hair below the cap to absorb the node-difference rounding
    bound = pair_ratio_bound(0.36) * (1.0 - 1e-12)
    report = certify_mesh(mesh_from_ratios([0.36, bound]))
    assert report.satisfied


def test_certify_single_step_mesh():
    report = certify_mesh(TimeMesh([0.0, 1.0]))
    assert report.satisfied
    assert report.per_step_margin.size == 0
    assert certify_mesh(make_uniform_mesh(1.0, 1)).satisfied


def test_report_to_dict_round_trips():
    payload = certify_mesh(make_graded_mesh(1.0, 8, 2.0)).to_dict()
    assert payload["satisfied"] is True
    assert payload["first_violation"] is None
    assert len(payload["per_step_margin"]) == 7
    assert payload["rho_star"] == pytest.approx(RHO_STAR)


def test_mesh_builder_validation():
    with pytest.raises(ValidationError):
        make_uniform_mesh(0.0, 10)
    with pytest.raises(ValidationError):
        make_uniform_mesh(1.0, 0)
    with pytest.raises(ValidationError):
        make_graded_mesh(1.0, 10, 0.5)
    with pytest.raises(ValidationError):
        make_r_variable_mesh(1.0, 10, 1.5)
    # single-step meshes are legal everywhere
    assert make_uniform_mesh(1.0, 1).num_steps == 1
    assert make_graded_mesh(1.0, 1, 3.0).num_steps == 1
    assert make_r_variable_mesh(1.0, 1, 0.5).num_steps == 1


def test_graded_mesh_endpoints_exact():
    mesh = make_graded_mesh(0.7, 33, 2.0 / 0.7)
    assert mesh.nodes[0] == 0.0
    assert mesh.nodes[-1] == 0.7


def test_mesh_file_round_trip(tmp_path):
    mesh = make_graded_mesh(1.0, 25, 2.0 / 0.3)
    path = tmp_path / "mesh.txt"
    write_mesh(mesh, path, comments={"family": "graded"})
    back = read_mesh(path)
    assert np.array_equal(back.nodes, mesh.nodes)
    text = path.read_text()
    assert "# family: graded" in text
    assert "# num_steps: 25" in text


def test_mesh_file_round_trip_preserves_bits(tmp_path):
    mesh = make_r_variable_mesh(1.0, 64, 0.7)
    path = tmp_path / "mesh.txt"
    write_mesh(mesh, path)
    assert np.array_equal(read_mesh(path).nodes, mesh.nodes)


def test_read_mesh_errors(tmp_path):
    with pytest.raises(MeshFileError):
        read_mesh(tmp_path / "missing.txt")
    bad = tmp_path / "bad.txt"
    bad.write_text("0.0\nnot-a-number\n1.0\n")
    with pytest.raises(MeshFileError) as exc:
        read_mesh(bad)
    assert "bad.txt:2" in str(exc.value)
    short = tmp_path / "short.txt"
    short.write_text("# only comments\n0.0\n")
    with pytest.raises(MeshFileError):
        read_mesh(short)


def test_read_mesh_rejects_nonmonotone(tmp_path):
    path = tmp_path / "mesh.txt"
    path.write_text("0.0\n0.5\n0.25\n1.0\n")
    with pytest.raises(NonMonotoneMeshError):
        read_mesh(path)
