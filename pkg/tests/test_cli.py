"""Manifest loading and the command-line report surface."""

import json
import os

import numpy as np
import pytest

from tractorlab import __version__, cli
from tractorlab.affine import max_abs, sample_points
from tractorlab.manifest import (
    ManifestError,
    bundled_names,
    chart_to_manifest,
    load_bundled,
    loads,
)
from tractorlab.library import sphere_chart


def make_doc(**overrides):
    doc = {
        "format": "tractorlab-manifest",
        "version": 1,
        "name": "twodim",
        "dimension": 2,
        "coordinates": ["x1", "x2"],
        "domain": [[-1.0, 1.0], [-1.0, 1.0]],
        "gamma": {"0,0,0": "0.3*x2"},
    }
    doc.update(overrides)
    return doc


# -- loading -----------------------------------------------------------------------


def test_minimal_manifest_loads():
    m = loads(json.dumps(make_doc()))
    assert m.name == "twodim"
    assert m.chart.n == 2
    g = m.chart.gamma_at(np.array([0.5, 0.5]))
    assert abs(g[0, 0, 0] - 0.15) <= 1e-15
    assert m.base().shape == (2,)


def test_not_json_is_rejected():
    with pytest.raises(ManifestError, match="not valid JSON"):
        loads("{nope")


def test_schema_violations_carry_field_paths():
    doc = make_doc()
    del doc["domain"]
    with pytest.raises(ManifestError, match="domain"):
        loads(json.dumps(doc))
    with pytest.raises(ManifestError, match="version"):
        loads(json.dumps(make_doc(version="one")))
    with pytest.raises(ManifestError, match="extra_key"):
        loads(json.dumps(make_doc(extra_key=1)))


def test_unknown_coordinate_names_the_entry():
    doc = make_doc(gamma={"0,0,1": "x7 + 1"})
    with pytest.raises(ManifestError, match=r"\$\['gamma'\]\['0,0,1'\].*x7"):
        loads(json.dumps(doc))


def test_gamma_index_out_of_range():
    doc = make_doc(gamma={"2,0,0": "x1"})
    with pytest.raises(ManifestError, match=r"\['2,0,0'\].*out of range"):
        loads(json.dumps(doc))


def test_asymmetric_gamma_rejected_citing_torsion():
    doc = make_doc(gamma={"0,0,1": "x1", "0,1,0": "-x1"})
    with pytest.raises(ManifestError, match="torsion"):
        loads(json.dumps(doc))


def test_symmetrize_flag_takes_symmetric_part():
    doc = make_doc(gamma={"0,0,1": "x1", "0,1,0": "3*x1"}, symmetrize=True)
    m = loads(json.dumps(doc))
    assert m.symmetrized
    g = m.chart.gamma_at(np.array([0.5, 0.0]))
    assert abs(g[0, 0, 1] - 1.0) <= 1e-15
    assert abs(g[0, 1, 0] - 1.0) <= 1e-15


def test_base_point_must_lie_inside_domain():
    with pytest.raises(ManifestError, match="base_point"):
        loads(json.dumps(make_doc(base_point=[2.0, 0.0])))


def test_structure_shape_validation():
    with pytest.raises(ManifestError, match="expected 3 rows"):
        loads(json.dumps(make_doc(structures={"omega": [[0.0, 1.0], [-1.0, 0.0]]})))
    square = np.eye(3).tolist()
    with pytest.raises(ManifestError, match="between 1 and 2 columns"):
        loads(json.dumps(make_doc(structures={"K": square})))


def test_loop_plane_validation():
    doc = make_doc(loops=[{"plane": [0, 0], "size": 0.1}])
    with pytest.raises(ManifestError, match="plane"):
        loads(json.dumps(doc))


# -- bundled corpus ----------------------------------------------------------------


def test_bundled_corpus_inventory():
    assert bundled_names() == [
        "flat2", "flat3", "hyperbolic3", "product_rf3",
        "randpoly3", "sphere2", "sphere3",
    ]


def test_bundled_flat3_loads_with_zero_gamma():
    m = load_bundled("flat3")
    assert m.chart.n == 3
    for p in m.sample()[:10]:
        assert max_abs(m.chart.gamma_at(p)) == 0.0
    assert set(m.structures) == {"omega", "J", "h", "K"}
    assert len(m.loops) == 1 and len(m.curves) == 1


def test_unknown_bundled_name():
    with pytest.raises(ManifestError, match="no bundled manifest named"):
        load_bundled("klein_bottle")


def test_chart_to_manifest_round_trip():
    c = sphere_chart(2)
    doc = chart_to_manifest(c, name="resphere")
    m = loads(json.dumps(doc))
    for p in sample_points(c, seed=1, n_random=6, n_grid=0):
        assert max_abs(m.chart.gamma_at(p) - c.gamma_at(p)) <= 1e-14
    assert m.chart.metric is not None


# -- commands ----------------------------------------------------------------------


def test_compute_flat3_all_tensors_zero():
    rep = cli.run("compute", load_bundled("flat3"))
    maxima = rep["result"]["max_abs_over_samples"]
    assert set(maxima) == {"ricci", "rho", "weyl", "cotton"}
    for value in maxima.values():
        assert value == 0.0
    assert rep["all_pass"] is True
    assert rep["version"] == __version__


def test_detect_sphere3_reports_einstein():
    rep = cli.run("detect", load_bundled("sphere3"))
    res = rep["result"]
    assert "Einstein manifold" in res["labels"]
    assert "metric" in [c["kind"] for c in res["candidates"]]
    assert res["einstein"]["accepted"] is True
    assert res["einstein"]["h_signature"] == [4, 0]
    assert rep["all_pass"] is True
    names = [c["name"] for c in rep["checks"]]
    assert "einstein_parallel_residual" in names


def test_every_check_row_carries_its_tolerance():
    rep = cli.run("verify", load_bundled("randpoly3"), seed=2)
    assert rep["all_pass"] is True
    assert len(rep["checks"]) >= 6
    for row in rep["checks"]:
        assert row["residual"] <= row["tolerance"]


def test_unknown_command_raises():
    with pytest.raises(ValueError, match="unknown command"):
        cli.run("paint", load_bundled("flat2"))


def test_reports_are_byte_identical_for_fixed_seed():
    m1 = load_bundled("randpoly3")
    m2 = load_bundled("randpoly3")
    a = cli.render(cli.run("suite", m1, seed=3))
    b = cli.render(cli.run("suite", m2, seed=3))
    assert a == b
    parsed = json.loads(a)
    assert parsed["command"] == "suite"
    assert parsed["all_pass"] is True


def test_tol_scale_loosens_and_tightens():
    m = load_bundled("randpoly3")
    tight = cli.run("verify", m, tol_scale=1e-20)
    assert tight["all_pass"] is False
    loose = cli.run("verify", m, tol_scale=1e6)
    assert loose["all_pass"] is True


# -- entry point -------------------------------------------------------------------


def test_main_writes_report_and_exit_zero(tmp_path):
    out = tmp_path / "report.json"
    code = cli.main(["verify", "--manifest", "flat2", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["tool"] == "tractorlab"
    assert rep["manifest"] == "flat2"


def test_main_exit_one_on_failed_verdict(tmp_path):
    out = tmp_path / "report.json"
    code = cli.main(["verify", "--manifest", "randpoly3",
                     "--tol-scale", "1e-20", "--out", str(out)])
    assert code == 1
    rep = json.loads(out.read_text())
    assert rep["all_pass"] is False


def test_main_exit_two_on_input_error(capsys):
    assert cli.main(["compute", "--manifest", "no_such_chart"]) == 2
    err = capsys.readouterr().err
    assert "no bundled manifest named" in err


def test_main_requires_manifest_except_for_suite():
    with pytest.raises(SystemExit) as exc:
        cli.main(["compute"])
    assert exc.value.code == 2


def test_manifest_file_path_loading(tmp_path):
    path = tmp_path / "custom.json"
    path.write_text(json.dumps(make_doc()))
    code = cli.main(["verify", "--manifest", str(path), "--out",
                     str(tmp_path / "r.json")])
    assert code == 0


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("TRACTORLAB_THREADS", "2")
    monkeypatch.delenv("OMP_NUM_THREADS", raising=False)
    cli._apply_thread_cap()
    assert os.environ["OMP_NUM_THREADS"] == "2"


def test_suite_over_whole_bundled_corpus_exits_zero(tmp_path):
    out = tmp_path / "corpus.json"
    code = cli.main(["suite", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["manifest"] == "bundled-corpus"
    assert sorted(rep["reports"]) == bundled_names()
    assert rep["all_pass"] is True
