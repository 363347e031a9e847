import math

import numpy as np
import pytest

from tractorlab.affine import (
    ChartModel,
    Curve,
    OneFormField,
    TensorField,
    covariant_derivative,
    curvature,
    integrate_geodesic,
    max_abs,
    normalize_volume,
    project_change,
    ricci,
    sample_points,
    symmetrize,
    transport_vector,
)
from tractorlab.expr import num, parse, var
from tractorlab.library import (
    flat_chart,
    hyperbolic_chart,
    polynomial_chart,
    sphere_chart,
    twisted_chart,
)

P2 = np.array([0.2, -0.3])
P3 = np.array([0.2, -0.3, 0.1])


def test_flat_chart_has_zero_curvature():
    c = flat_chart(3)
    assert max_abs(curvature(c, P3).components) == 0.0
    assert max_abs(ricci(c, P3).components) == 0.0


def test_sphere2_christoffel_and_curvature_values():
    c = sphere_chart(2)
    g = c.gamma_at(P2)
    assert g[0, 0, 0] == pytest.approx(-40.0 / 113.0, abs=1e-15)
    R = curvature(c, P2).components
    assert R[0, 1, 0, 1] == pytest.approx(3.1325867334951836, abs=1e-12)
    ric = ricci(c, P2).components
    # unit 2-sphere: Ric = (n-1) g = g
    assert ric[0, 0] == pytest.approx(3.1325867334951836, abs=1e-12)
    gval = TensorField(c, c.metric, "dd").at(P2).components
    assert max_abs(ric - gval) <= 1e-12


def test_sphere3_frozen_values():
    c = sphere_chart(3)
    g = c.gamma_at(P3)
    assert g[0, 0, 0] == pytest.approx(-20.0 / 57.0, abs=1e-15)
    R = curvature(c, P3).components
    assert R[0, 1, 0, 1] == pytest.approx(3.077870113881194, abs=1e-12)
    ric = ricci(c, P3).components
    assert ric[0, 0] == pytest.approx(6.155740227762388, abs=1e-12)
    gval = TensorField(c, c.metric, "dd").at(P3).components
    assert max_abs(ric - 2.0 * gval) <= 1e-12


def test_hyperbolic3_frozen_values():
    c = hyperbolic_chart(3)
    g = c.gamma_at(P3)
    assert g[0, 0, 0] == pytest.approx(20.0 / 43.0, abs=1e-15)
    R = curvature(c, P3).components
    assert R[0, 1, 0, 1] == pytest.approx(-5.408328826392645, abs=1e-12)
    ric = ricci(c, P3).components
    assert ric[0, 0] == pytest.approx(-10.81665765278529, abs=1e-11)
    gval = TensorField(c, c.metric, "dd").at(P3).components
    assert max_abs(ric + 2.0 * gval) <= 1e-11


def test_twisted_chart_curvature_and_ricci():
    c = twisted_chart()
    p = np.array([0.15, 0.25, 0.35])
    R = curvature(c, p).components
    assert R[1, 2, 0, 2] == pytest.approx(0.35, abs=1e-14)
    assert max_abs(ricci(c, p).components) <= 1e-14
    # volume preserving already: trace of the symbols vanishes
    tr = [e.eval(c.env(p)) for e in c.trace_gamma_field()]
    assert max_abs(tr) == 0.0


def test_curvature_antisymmetry_and_first_bianchi():
    c = sphere_chart(3)
    R = curvature(c, P3).components
    assert max_abs(R + R.transpose(1, 0, 2, 3)) <= 1e-12
    n = 3
    worst = 0.0
    for h in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    cyc = R[h, j, k, l] + R[j, l, k, h] + R[l, h, k, j]
                    worst = max(worst, abs(cyc))
    assert worst <= 1e-12


def test_ricci_symmetric_for_metric_connections():
    for c in (sphere_chart(2), sphere_chart(3), hyperbolic_chart(3)):
        p = P2 if c.n == 2 else P3
        ric = ricci(c, p).components
        assert max_abs(ric - ric.T) <= 1e-12


def test_project_change_composes_and_inverts():
    c = polynomial_chart(3, seed=5)
    u1 = [c.parse("0.2*x2"), c.parse("x1*x3"), c.parse("-0.1")]
    u2 = [c.parse("x3"), c.parse("0.3"), c.parse("x1-x2")]
    both = [a + b for a, b in zip(u1, u2)]
    c12 = project_change(project_change(c, u1), u2)
    c_sum = project_change(c, both)
    back = project_change(project_change(c, u1), [-e for e in u1])
    for p in sample_points(c, seed=1, n_random=5, n_grid=5):
        assert max_abs(c12.gamma_at(p) - c_sum.gamma_at(p)) <= 1e-12
        assert max_abs(back.gamma_at(p) - c.gamma_at(p)) <= 1e-12


def test_project_change_shape():
    c = flat_chart(2)
    ups = [num(1.0), num(0.0)]
    c2 = project_change(c, ups)
    g = c2.gamma_at(np.zeros(2))
    # Gamma'^k_{ij} = d^k_j Ups_i + d^k_i Ups_j with Ups = dx1
    expect = np.zeros((2, 2, 2))
    expect[0, 0, 0] = 2.0
    expect[0, 0, 1] = expect[0, 1, 0] = 0.0
    expect[1, 0, 1] = expect[1, 1, 0] = 1.0
    assert max_abs(g - expect) == 0.0


def test_normalize_volume_kills_trace():
    c = sphere_chart(3)
    cv, ups = normalize_volume(c)
    for p in sample_points(c, seed=2, n_random=8, n_grid=4):
        tr = [e.eval(cv.env(p)) for e in cv.trace_gamma_field()]
        assert max_abs(tr) <= 1e-12
    # the one-form used is -tr(Gamma)/(n+1)
    tr0 = [e.eval(c.env(P3)) for e in c.trace_gamma_field()]
    assert max_abs(ups.at(P3) + np.array(tr0) / 4.0) <= 1e-15


def test_symmetrize_reports_asymmetry():
    n = 2
    gamma = np.full((n, n, n), num(0.0), dtype=object)
    gamma[0, 0, 1] = var("x2")
    c = ChartModel(("x1", "x2"), gamma, [[-1, 1], [-1, 1]])
    c2, worst = symmetrize(c)
    assert worst > 0.1
    p = np.array([0.4, 0.7])
    g = c2.gamma_at(p)
    assert max_abs(g - g.transpose(0, 2, 1)) == 0.0
    assert g[0, 0, 1] == pytest.approx(0.35)
    c3, worst3 = symmetrize(c2)
    assert worst3 <= 1e-15


def test_metric_compatibility_of_conformal_connections():
    for c in (sphere_chart(2), hyperbolic_chart(3)):
        field = TensorField(c, c.metric, "dd")
        nabla_g = covariant_derivative(c, field)
        p = P2 if c.n == 2 else P3
        assert max_abs(nabla_g.at(p).components) <= 1e-12


def test_covariant_derivative_leibniz():
    c = sphere_chart(2)
    vecs = np.array([c.parse("x2 + 0.5"), c.parse("x1*x1")], dtype=object)
    forms = np.array([c.parse("sin(x1)"), c.parse("x1 - x2")], dtype=object)
    V = TensorField(c, vecs, "u")
    w = TensorField(c, forms, "d")
    scalar = np.asarray(sum(forms[i] * vecs[i] for i in range(2)), dtype=object)
    s = TensorField(c, scalar, "")
    p = np.array([0.3, -0.1])
    ds = covariant_derivative(c, s).at(p).components
    dV = covariant_derivative(c, V).at(p).components
    dw = covariant_derivative(c, w).at(p).components
    Vp = V.at(p).components
    wp = w.at(p).components
    lhs = ds
    rhs = dw @ Vp + dV @ wp
    assert max_abs(lhs - rhs) <= 1e-12


def test_covariant_derivative_of_scalar_is_gradient():
    c = sphere_chart(2)
    s = TensorField(c, np.asarray(c.parse("x1*x2"), dtype=object), "")
    out = covariant_derivative(c, s).at(np.array([0.2, 0.5])).components
    assert out == pytest.approx([0.5, 0.2])


def test_flat_geodesic_is_straight():
    c = flat_chart(2)
    path = integrate_geodesic(c, [0.1, -0.2], [0.3, 0.5], t_end=1.0)
    assert not path.exited_domain
    assert path.converged
    assert max_abs(path.points[-1] - np.array([0.4, 0.3])) <= 1e-12
    assert max_abs(path.velocities[-1] - np.array([0.3, 0.5])) <= 1e-12


def test_sphere_geodesic_matches_great_circle():
    # unit-speed great circle through the chart origin: x(t) = tan(t/2) e1
    c = sphere_chart(2)
    path = integrate_geodesic(c, [0.0, 0.0], [0.5, 0.0], t_end=0.8, tol=1e-10)
    assert path.converged and not path.exited_domain
    end = path.points[-1]
    assert end[0] == pytest.approx(math.tan(0.4), abs=1e-9)
    assert abs(end[1]) <= 1e-12
    vend = path.velocities[-1]
    assert vend[0] == pytest.approx(0.5 / math.cos(0.4) ** 2, abs=1e-9)


def test_geodesic_domain_exit_is_flagged():
    c = flat_chart(2)
    path = integrate_geodesic(c, [0.9, 0.0], [1.0, 0.0], t_end=1.0)
    assert path.exited_domain
    assert path.points[-1][0] <= 1.0
    assert len(path.ts) < 130


def _point_polyline_distance(q, pts):
    a = pts[:-1]
    b = pts[1:]
    d = b - a
    denom = np.einsum("ij,ij->i", d, d)
    denom[denom == 0.0] = 1.0
    t = np.clip(np.einsum("ij,ij->i", q - a, d) / denom, 0.0, 1.0)
    proj = a + t[:, None] * d
    return float(np.sqrt(((q - proj) ** 2).sum(axis=1)).min())


def test_projective_change_preserves_geodesic_traces():
    c = sphere_chart(2)
    ups = [c.parse("0.3*x2"), c.parse("-0.2*x1")]
    c2 = project_change(c, ups)
    p0, v0 = [-0.2, 0.1], [0.45, 0.3]
    base = integrate_geodesic(c, p0, v0, t_end=1.2, tol=1e-10, record_steps=4096)
    other = integrate_geodesic(c2, p0, v0, t_end=0.6, tol=1e-10, record_steps=512)
    assert base.converged and other.converged
    assert not base.exited_domain and not other.exited_domain
    for idx in (len(other.points) // 2, -1):
        dist = _point_polyline_distance(other.points[idx], base.points)
        assert dist <= 1e-6


def test_transport_preserves_metric_norm():
    c = sphere_chart(2)
    curve = Curve.from_strings(["0.3*cos(t)", "0.3*sin(t)"], 0.0, math.pi / 2)
    v0 = np.array([0.2, -0.1])
    v1, _, ok = transport_vector(c, curve, v0, tol=1e-10)
    assert ok
    gfield = TensorField(c, c.metric, "dd")
    g0 = gfield.at(curve.point(0.0)).components
    g1 = gfield.at(curve.point(curve.t1)).components
    n0 = v0 @ g0 @ v0
    n1 = v1 @ g1 @ v1
    assert n1 == pytest.approx(n0, rel=1e-8)


def test_transport_is_linear():
    c = sphere_chart(2)
    curve = Curve.segment([-0.2, -0.1], [0.3, 0.25])
    a, b = 0.7, -1.3
    v = np.array([0.4, 0.1])
    w = np.array([-0.2, 0.5])
    tv, _, _ = transport_vector(c, curve, v)
    tw, _, _ = transport_vector(c, curve, w)
    tboth, _, _ = transport_vector(c, curve, a * v + b * w)
    assert max_abs(tboth - (a * tv + b * tw)) <= 1e-9


def test_flat_transport_is_identity():
    c = flat_chart(3)
    curve = Curve.from_strings(["0.5*sin(t)", "t*t/4", "-0.3*t"], 0.0, 1.0)
    v0 = np.array([1.0, -2.0, 0.5])
    v1, _, _ = transport_vector(c, curve, v0)
    assert max_abs(v1 - v0) <= 1e-12


def test_sample_points_deterministic_and_inside():
    c = sphere_chart(3)
    a = sample_points(c, seed=11)
    b = sample_points(c, seed=11)
    d = sample_points(c, seed=12)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, d)
    assert a.shape == (64, 3)
    for p in a:
        assert c.contains(p)


def test_chart_validation():
    with pytest.raises(ValueError):
        ChartModel(("x1",), np.full((1, 1, 1), num(0.0), dtype=object), [[-1, 1]])
    with pytest.raises(ValueError):
        ChartModel(("x1", "x1"), np.full((2, 2, 2), num(0.0), dtype=object),
                   [[-1, 1], [-1, 1]])
    with pytest.raises(ValueError):
        ChartModel(("x1", "sin"), np.full((2, 2, 2), num(0.0), dtype=object),
                   [[-1, 1], [-1, 1]])
    with pytest.raises(ValueError):
        ChartModel(("x1", "x2"), np.full((2, 2, 2), num(0.0), dtype=object),
                   [[1, -1], [-1, 1]])


def test_curve_helpers():
    seg = Curve.segment([0.0, 1.0], [2.0, -1.0])
    assert max_abs(seg.point(0.5) - np.array([1.0, 0.0])) == 0.0
    assert max_abs(seg.velocity(0.3) - np.array([2.0, -2.0])) == 0.0
    loop = Curve.from_strings(["cos(t)", "sin(t)"], 0.0, 2 * math.pi)
    assert loop.is_closed(tol=1e-12)
    assert not seg.is_closed()
