"""Structure chains: Einstein, contact, complex, foliation, decomposition.

Oracles worked out by hand for the flat model are frozen here: the contact
one-form theta = x1 dx2 - x2 dx1 - dx3 with Reeb field -e3, the transverse
field R(x) = Ax + b - x3 x of the standard fiber complex structure, and the
line metric h(s,s) = |x|^2 - 1 of the constant indefinite candidate.  The
curved charts check the signature bookkeeping instead, where the expected
values follow from the Ricci sign alone.
"""

import numpy as np
import pytest

from tractorlab.affine import project_change, sample_points
from tractorlab.expr import parse
from tractorlab.holonomy import infinitesimal_algebra
from tractorlab.library import (
    flat_chart,
    hyperbolic_chart,
    polynomial_chart,
    sphere_chart,
    twisted_chart,
)
from tractorlab.structures import (
    complex_reduction,
    contact_from_symplectic,
    einstein_check,
    einstein_to_tractor_metric,
    foliation_analysis,
    holonomy_decomposition_check,
    tractor_metric_to_einstein_verify,
)

OMEGA = np.zeros((4, 4))
OMEGA[0, 1] = 1.0
OMEGA[1, 0] = -1.0
OMEGA[2, 3] = 1.0
OMEGA[3, 2] = -1.0

J_STD = np.zeros((4, 4))
J_STD[0, 1] = -1.0
J_STD[1, 0] = 1.0
J_STD[2, 3] = -1.0
J_STD[3, 2] = 1.0


@pytest.fixture(scope="module")
def flat3():
    return flat_chart(3)


@pytest.fixture(scope="module")
def sphere3():
    return sphere_chart(3)


@pytest.fixture(scope="module")
def twisted():
    return twisted_chart()


def linear_ups(chart, seed, scale=0.15):
    rng = np.random.default_rng(seed)
    coef = rng.uniform(-scale, scale, size=(chart.n, chart.n))
    return [
        parse(
            "+".join(f"({coef[i, j]:.6f})*{c}" for j, c in enumerate(chart.coords)),
            chart.coords,
        )
        for i in range(chart.n)
    ]


# -- Einstein chain ------------------------------------------------------------


def test_sphere_einstein_chain(sphere3):
    for chart in (sphere_chart(2), sphere3):
        n = chart.n
        r = einstein_check(chart)
        assert r.accepted
        assert r.nabla_ric_norm <= 1e-8
        assert r.ric_signature == (n, 0)
        assert r.h_signature == (n + 1, 0)
        assert r.parallel_residual <= 1e-9
        assert r.transport_residual <= 1e-6
        assert r.meta["signature_rule_holds"]
        assert r.meta["einstein_coefficient_sign"] == 1


def test_hyperbolic_einstein_signature():
    r = einstein_check(hyperbolic_chart(3))
    assert r.accepted
    assert r.ric_signature == (0, 3)
    assert r.h_signature == (1, 3)
    assert r.meta["einstein_coefficient_sign"] == -1
    assert r.meta["signature_rule_holds"]
    assert r.parallel_residual <= 1e-9
    assert r.transport_residual <= 1e-6


def test_einstein_rejections(flat3, twisted):
    for chart in (flat3, twisted):
        r = einstein_check(chart)
        assert not r.accepted
        assert "degenerate" in r.reject_reason
    r = einstein_check(polynomial_chart())
    assert not r.accepted
    assert "covariant derivative" in r.reject_reason
    with pytest.raises(ValueError):
        einstein_to_tractor_metric(flat3)


def test_einstein_check_is_a_property_of_the_representative(sphere3):
    # the projective class keeps its parallel tractor metric, but only the
    # volume-compatible representative exhibits a parallel Ricci tensor
    changed = project_change(sphere3, linear_ups(sphere3, seed=9))
    r = einstein_check(changed)
    assert not r.accepted
    assert r.nabla_ric_norm > 1e-3


def test_sphere3_metric_round_trip(sphere3):
    h_at, report = einstein_to_tractor_metric(sphere3)
    out = tractor_metric_to_einstein_verify(sphere3, h_at(sphere3.center()))
    assert out["accepted"]
    assert not out["precondition_failed"]
    assert out["invariance_residual"] <= 1e-9
    assert out["consistency_residual"] <= 1e-8
    assert out["degenerate_fraction"] == 0.0


def test_flat_constant_candidate_verifies(flat3):
    h0 = np.diag([1.0, 1.0, 1.0, -1.0])
    out = tractor_metric_to_einstein_verify(flat3, h0)
    assert out["accepted"]
    assert out["consistency_residual"] is None
    pts = sample_points(flat3, seed=0)[:40]
    hss = np.array(out["line_metric_values"])
    expected = np.array([p @ p - 1.0 for p in pts])
    assert np.abs(hss - expected).max() <= 1e-12


def test_verify_rejects_noninvariant_candidate(twisted):
    out = tractor_metric_to_einstein_verify(twisted, np.eye(4))
    assert out["precondition_failed"]
    assert not out["accepted"]


# -- contact chain -------------------------------------------------------------


def test_flat_contact_hand_oracle(flat3):
    r = contact_from_symplectic(flat3, OMEGA)
    assert r.accepted
    assert r.dtheta_vs_omega <= 1e-9
    assert r.dtheta_reeb <= 1e-9
    assert r.weyl_in_H <= 1e-12
    # theta = x1 dx2 - x2 dx1 - dx3 and the Reeb field is -e3
    pts = sample_points(flat3, seed=0)[:8]
    for p, theta, reeb in zip(pts, r.theta, r.reeb):
        expected = np.array([-p[1], p[0], -1.0])
        assert np.abs(theta - expected).max() <= 1e-10
        assert np.abs(reeb - np.array([0.0, 0.0, -1.0])).max() <= 1e-9
    assert abs(r.vtheta_min - 2.0) <= 1e-9
    assert abs(r.vtheta_max - 2.0) <= 1e-9


def test_sphere3_contact_chain(sphere3):
    r = contact_from_symplectic(sphere3, OMEGA)
    assert r.accepted
    assert r.dtheta_vs_omega <= 1e-6
    assert r.dtheta_reeb <= 1e-6
    assert r.weyl_in_H <= 1e-7
    assert r.vtheta_min > 0.1 * r.vtheta_max
    assert r.theta_R_residual <= 1e-9


def test_contact_preconditions(flat3, twisted):
    r = contact_from_symplectic(flat_chart(2), np.eye(3))
    assert not r.accepted and "odd" in r.reject_reason
    r = contact_from_symplectic(flat3, np.zeros((4, 4)))
    assert not r.accepted and "degenerate" in r.reject_reason
    r = contact_from_symplectic(twisted, OMEGA)
    assert not r.accepted and "invariant" in r.reject_reason


def test_contact_detection_is_gauge_stable(flat3):
    base = contact_from_symplectic(flat3, OMEGA)
    changed = project_change(flat3, linear_ups(flat3, seed=9))
    other = contact_from_symplectic(changed, OMEGA)
    assert other.accepted == base.accepted
    floor = 1e-10
    assert other.dtheta_vs_omega <= max(10 * base.dtheta_vs_omega, floor)
    assert other.weyl_in_H <= max(10 * base.weyl_in_H, floor)
    assert abs(other.vtheta_min - base.vtheta_min) <= 1e-8


# -- complex chain -------------------------------------------------------------


def test_flat_complex_hand_oracle(flat3):
    r = complex_reduction(flat3, J_STD)
    assert r.accepted
    assert r.square_residual <= 1e-12
    assert r.in_span_residual <= 1e-12
    assert r.lie_invariance_residual <= 1e-6
    A = J_STD[:3, :3]
    b = J_STD[:3, 3]
    pts = sample_points(flat3, seed=0)[:6]
    for p, R in zip(pts, r.R_field):
        expected = A @ p + b - p[2] * p
        assert np.abs(R - expected).max() <= 1e-12
    for JH in r.J_H:
        assert np.abs(JH @ JH + np.eye(2)).max() <= 1e-12


def test_sphere3_complex_chain(sphere3):
    r = complex_reduction(sphere3, J_STD)
    assert r.accepted
    assert r.square_residual <= 1e-7
    assert r.lie_invariance_residual <= 1e-4
    assert len(r.degenerate_points) == 0


def test_complex_preconditions(flat3, twisted):
    r = complex_reduction(flat_chart(2), np.eye(3))
    assert not r.accepted and "odd" in r.reject_reason
    r = complex_reduction(flat3, np.eye(4))
    assert not r.accepted and "square" in r.reject_reason
    r = complex_reduction(twisted, J_STD)
    assert not r.accepted and "invariant" in r.reject_reason


def test_complex_detection_is_gauge_stable(flat3):
    base = complex_reduction(flat3, J_STD)
    changed = project_change(flat3, linear_ups(flat3, seed=9))
    other = complex_reduction(changed, J_STD)
    assert other.accepted == base.accepted
    floor = 1e-10
    assert other.square_residual <= max(10 * base.square_residual, floor)
    assert other.lie_invariance_residual <= max(10 * base.lie_invariance_residual, floor)


# -- foliation chain -----------------------------------------------------------


def k_basis(cols):
    out = np.zeros((4, len(cols)))
    for a, i in enumerate(cols):
        out[i, a] = 1.0
    return out


def test_twisted_foliation_rank2(twisted):
    r = foliation_analysis(twisted, k_basis([0, 1]))
    assert r.accepted
    assert not r.inconclusive
    assert r.integrability_residual <= 1e-12
    assert r.geodesy_residual <= 1e-12
    assert r.preserve_K_residual <= 1e-12
    assert r.rho_residual <= 1e-12
    assert r.ricci_on_K <= 1e-12
    assert r.covolume_status == "preserved"
    assert r.transport_agreement <= 1e-9
    assert r.line_intersection_fraction == 0.0
    # the distribution is the constant span of the first two coordinate fields
    for Y in r.K_basis:
        u, s, vt = np.linalg.svd(Y)
        assert abs(s[0] - 1.0) <= 1e-9 and abs(s[1] - 1.0) <= 1e-9
        assert np.abs(Y[2, :]).max() <= 1e-12


def test_twisted_foliation_rank3(twisted):
    r = foliation_analysis(twisted, k_basis([0, 1, 2]))
    assert r.accepted
    assert r.rho_residual <= 1e-12
    assert r.ricci_on_K <= 1e-12
    assert r.covolume_status == "preserved"


def test_foliation_gauge_check(twisted):
    base = foliation_analysis(twisted, k_basis([0, 1]))
    changed = project_change(twisted, linear_ups(twisted, seed=4, scale=0.2))
    other = foliation_analysis(changed, k_basis([0, 1]))
    assert other.accepted == base.accepted
    floor = 1e-10
    for name in ("integrability_residual", "geodesy_residual", "preserve_K_residual",
                 "rho_residual", "ricci_on_K", "covolume_residual",
                 "transport_agreement"):
        assert getattr(other, name) <= max(10 * getattr(base, name), floor), name
    assert other.covolume_status in ("preserved", "preserved after the trace correction")


def test_foliation_preconditions(twisted):
    bad = np.zeros((4, 2))
    bad[2, 0] = 1.0
    bad[3, 1] = 1.0
    r = foliation_analysis(twisted, bad)
    assert not r.accepted and "invariant" in r.reject_reason
    with pytest.raises(ValueError):
        foliation_analysis(twisted, np.zeros((3, 2)))
    with pytest.raises(ValueError):
        foliation_analysis(twisted, np.zeros((4, 5)))


# -- holonomy block decomposition ----------------------------------------------


def test_decomposition_twisted(twisted):
    alg = infinitesimal_algebra(twisted, twisted.center())
    d = holonomy_decomposition_check(twisted, alg)
    assert d["t_star_row_max"] <= 1e-9
    assert d["affine_containment_residual"] <= 1e-9
    assert d["affine_span_rank"] == 1
    assert d["tangent_column_state"] == "partial (rank 1)"
    assert d["decomposition"] is None
    assert "irreducible" in d["note"]


def test_decomposition_flat_cone_case(flat3):
    alg = infinitesimal_algebra(flat3, flat3.center())
    d = holonomy_decomposition_check(flat3, alg)
    assert d["t_star_row_max"] == 0.0
    assert d["tangent_column_state"] == "zero (cone case)"
    assert d["affine_span_rank"] == 0


def test_decomposition_needs_vanishing_tangent_row():
    chart = polynomial_chart()
    alg = infinitesimal_algebra(chart, chart.center())
    d = holonomy_decomposition_check(chart, alg)
    assert d["t_star_row_max"] > 1e-3
    assert d["decomposition"] is None
    assert "tangent-row" in d["note"]
    assert d["tangent_column_state"] == "full"
    assert d["affine_containment_residual"] <= 1e-9
