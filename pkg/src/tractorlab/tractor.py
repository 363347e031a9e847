"""The rank n+1 tractor bundle of a projective class.

In a chart splitting, a tractor has components (Y, a) with Y a tangent
vector and a a scalar.  The covariant derivative in coordinate direction i
acts through the matrix

    M_i = [[Gamma_i + w_i I,  e_i],
           [P[i, :],          w_i]],      w_i = -tr(Gamma_i)/(n+1),

so that parallel transport along x(t) solves vdot = -M(xdot) v.  The weight
term w_i makes every M_i trace free; transport operators therefore have
determinant one.  The curvature of this connection is block triangular,

    F_{hj} = [[W_{hj}, 0], [CY_{hj}, 0]],

with the projective Weyl tensor in the endomorphism block and the Cotton
tensor in the bottom row, whatever the representative connection.

Changing the representative by a one-form Ups rearranges the splitting:
components (Y, a) taken in the splitting of project_change(c, ups)
correspond to (Y, a + Ups(Y)) in the splitting of c.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .affine import ChartModel, Curve, max_abs, rk4_adaptive
from .expr import compile_exprs, num
from .projective import cotton_field, rho_field, weyl_field

__all__ = [
    "TractorVec",
    "TractorEndo",
    "AlgebraElement",
    "connection_matrix",
    "connection_matrix_field",
    "dual_connection_matrix",
    "splitting_matrix",
    "change_splitting",
    "tractor_curvature",
    "tractor_curvature_from_connection",
    "parallel_transport",
    "transport_operator",
    "loop_holonomy",
    "spread_structure",
]

_ZERO = num(0.0)
_ONE = num(1.0)


@dataclass(frozen=True)
class TractorVec:
    """Tractor components (Y, a) at a point, in a chart splitting."""

    point: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))
        if self.components.shape != (self.point.shape[0] + 1,):
            raise ValueError("tractor components must have length n+1")

    @property
    def top(self) -> np.ndarray:
        return self.components[:-1]

    @property
    def bottom(self) -> float:
        return float(self.components[-1])


@dataclass(frozen=True)
class TractorEndo:
    """Endomorphism of the tractor fiber at a point."""

    point: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))
        m = self.point.shape[0] + 1
        if self.matrix.shape != (m, m):
            raise ValueError("endomorphism must be (n+1) x (n+1)")


@dataclass(frozen=True)
class AlgebraElement:
    """Graded element (X, A, nu) of the tractor algebra sl(n+1).

    X is the tangent part, A the gl(n) part, nu the cotangent part; the
    embedded matrix is [[A, X], [nu, -tr A]].
    """

    X: np.ndarray
    A: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", np.asarray(self.X, dtype=float))
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        object.__setattr__(self, "nu", np.asarray(self.nu, dtype=float))
        n = self.X.shape[0]
        if self.A.shape != (n, n) or self.nu.shape != (n,):
            raise ValueError("block shapes are inconsistent")

    @property
    def matrix(self) -> np.ndarray:
        n = self.X.shape[0]
        out = np.zeros((n + 1, n + 1))
        out[:n, :n] = self.A
        out[:n, n] = self.X
        out[n, :n] = self.nu
        out[n, n] = -np.trace(self.A)
        return out

    @staticmethod
    def from_matrix(mat) -> "AlgebraElement":
        mat = np.asarray(mat, dtype=float)
        n = mat.shape[0] - 1
        if abs(np.trace(mat)) > 1e-9 * (1.0 + np.abs(mat).max()):
            raise ValueError("matrix is not trace free")
        return AlgebraElement(mat[:n, n], mat[:n, :n], mat[n, :n])

    def bracket(self, other: "AlgebraElement") -> "AlgebraElement":
        """Blockwise Lie bracket; agrees with the matrix commutator."""
        A1, X1, n1 = self.A, self.X, self.nu
        A2, X2, n2 = other.A, other.X, other.nu
        c1, c2 = -np.trace(A1), -np.trace(A2)
        A = A1 @ A2 - A2 @ A1 + np.outer(X1, n2) - np.outer(X2, n1)
        X = A1 @ X2 - A2 @ X1 + c2 * X1 - c1 * X2
        nu = n1 @ A2 - n2 @ A1 + c1 * n2 - c2 * n1
        return AlgebraElement(X, A, nu)


# -- connection matrices --------------------------------------------------------


def connection_matrix_field(chart: ChartModel) -> np.ndarray:
    """Symbolic M_i, shape (n, n+1, n+1)."""

    def build():
        n = chart.n
        P = rho_field(chart)
        tr = chart.trace_gamma_field()
        M = np.empty((n, n + 1, n + 1), dtype=object)
        for i in range(n):
            w = tr[i] / float(-(n + 1))
            for k in range(n):
                for m in range(n):
                    entry = chart.gamma[k, i, m]
                    if k == m:
                        entry = entry + w
                    M[i, k, m] = entry
                M[i, k, n] = _ONE if k == i else _ZERO
            for m in range(n):
                M[i, n, m] = P[i, m]
            M[i, n, n] = w
        return M

    return chart.symbolic("Mconn", build)


def _connection_at(chart: ChartModel, point) -> np.ndarray:
    n = chart.n
    fn = chart.compiled("Mconn", connection_matrix_field(chart).ravel())
    return fn(*np.asarray(point, dtype=float)).reshape(n, n + 1, n + 1)


def connection_matrix(chart: ChartModel, point, direction) -> np.ndarray:
    """M(X) = X^i M_i at a point; vdot = -M(xdot) v transports tractors."""
    X = np.asarray(direction, dtype=float)
    return np.einsum("i,ikl->kl", X, _connection_at(chart, point))


def dual_connection_matrix(chart: ChartModel, point, direction) -> np.ndarray:
    """Connection matrix on the dual bundle, assembled from its own blocks.

    For dual components (lam, b) the matrix is
    [[-Gamma_i^T - w_i I, -P[i,:]^T], [-e_i^T, -w_i]]; it equals -M(X)^T.
    """
    n = chart.n
    X = np.asarray(direction, dtype=float)
    g = chart.gamma_at(point)
    fnP = chart.compiled("P", rho_field(chart).ravel())
    P = fnP(*np.asarray(point, dtype=float)).reshape(n, n)
    trg = np.einsum("mim->i", g)
    w = -float(X @ trg) / (n + 1)
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = -np.einsum("i,kim->mk", X, g) - w * np.eye(n)
    out[:n, n] = -X @ P
    out[n, :n] = -X
    out[n, n] = -w
    return out


# -- splitting changes -------------------------------------------------------------


def splitting_matrix(ups_value) -> np.ndarray:
    """Matrix [[I, 0], [Ups, 1]] taking components in the splitting of
    project_change(c, ups) to components in the splitting of c."""
    u = np.asarray(ups_value, dtype=float)
    n = u.shape[0]
    out = np.eye(n + 1)
    out[n, :n] = u
    return out


def change_splitting(components, ups_value) -> np.ndarray:
    """(Y, a) in the changed splitting -> (Y, a + Ups(Y)) in the base one."""
    v = np.asarray(components, dtype=float)
    return splitting_matrix(ups_value) @ v


# -- curvature ---------------------------------------------------------------------


def tractor_curvature(chart: ChartModel, point) -> np.ndarray:
    """F[h,j] assembled from the Weyl and Cotton tensors, shape (n,n,n+1,n+1)."""
    n = chart.n
    p = np.asarray(point, dtype=float)
    W = chart.compiled("W", weyl_field(chart).ravel())(*p).reshape(n, n, n, n)
    CY = chart.compiled("CY", cotton_field(chart).ravel())(*p).reshape(n, n, n)
    F = np.zeros((n, n, n + 1, n + 1))
    F[:, :, :n, :n] = W
    F[:, :, n, :n] = CY
    return F


def tractor_curvature_from_connection(chart: ChartModel, point) -> np.ndarray:
    """F[h,j] = d_h M_j - d_j M_h + [M_h, M_j], straight from the matrices."""

    def build():
        n = chart.n
        M = connection_matrix_field(chart)
        dM = np.empty((n, n, n + 1, n + 1), dtype=object)
        for a in range(n):
            name = chart.coords[a]
            for i in range(n):
                for r in range(n + 1):
                    for s in range(n + 1):
                        dM[a, i, r, s] = M[i, r, s].diff(name)
        F = np.empty((n, n, n + 1, n + 1), dtype=object)
        for h in range(n):
            for j in range(n):
                for r in range(n + 1):
                    for s in range(n + 1):
                        term = dM[h, j, r, s] - dM[j, h, r, s]
                        for m in range(n + 1):
                            term = term + (M[h, r, m] * M[j, m, s]
                                           - M[j, r, m] * M[h, m, s])
                        F[h, j, r, s] = term
        return F

    n = chart.n
    field = chart.symbolic("Fdirect", build)
    fn = chart.compiled("Fdirect", field.ravel())
    return fn(*np.asarray(point, dtype=float)).reshape(n, n, n + 1, n + 1)


# -- transport ---------------------------------------------------------------------


def _curve_evaluators(curve: Curve):
    xs = compile_exprs(list(curve.components), ("t",))
    vs = compile_exprs(list(curve.velocity_exprs()), ("t",))
    return xs, vs


def parallel_transport(chart: ChartModel, curve: Curve, v0, tol: float = 1e-8):
    """Transport tractor components along a curve; returns (v1, steps, ok)."""
    n = chart.n
    fn = chart.compiled("Mconn", connection_matrix_field(chart).ravel())
    xs, vs = _curve_evaluators(curve)

    def f(t, v):
        x = xs(t)
        xd = vs(t)
        M = fn(*x).reshape(n, n + 1, n + 1)
        return -np.einsum("i,ikl,l->k", xd, M, v)

    return rk4_adaptive(f, np.asarray(v0, dtype=float), curve.t0, curve.t1, tol=tol)


def transport_operator(chart: ChartModel, curve: Curve, tol: float = 1e-8):
    """Full transport operator T along a curve: columns are transported frames."""
    n = chart.n
    fn = chart.compiled("Mconn", connection_matrix_field(chart).ravel())
    xs, vs = _curve_evaluators(curve)
    m = n + 1

    def f(t, y):
        x = xs(t)
        xd = vs(t)
        M = fn(*x).reshape(n, m, m)
        Mx = np.einsum("i,ikl->kl", xd, M)
        return (-Mx @ y.reshape(m, m)).ravel()

    out, steps, ok = rk4_adaptive(f, np.eye(m).ravel(), curve.t0, curve.t1, tol=tol)
    return out.reshape(m, m), steps, ok


def _compose_operators(chart: ChartModel, curves: Sequence[Curve], tol: float):
    T = np.eye(chart.n + 1)
    ok_all = True
    prev_end = None
    for c in curves:
        if prev_end is not None and max_abs(c.point(c.t0) - prev_end) > 1e-9:
            raise ValueError("curve segments do not chain")
        Ti, _, ok = transport_operator(chart, c, tol=tol)
        ok_all = ok_all and ok
        T = Ti @ T
        prev_end = c.point(c.t1)
    return T, ok_all


def loop_holonomy(chart: ChartModel, loop, tol: float = 1e-8):
    """Holonomy of a closed loop (one curve or chained segments).

    Returns (H, report) with the determinant drift in the report; the
    connection is trace free so det H should be 1.
    """
    if isinstance(loop, Curve):
        curves = [loop]
    else:
        curves = list(loop)
    start = curves[0].point(curves[0].t0)
    end = curves[-1].point(curves[-1].t1)
    if max_abs(end - start) > 1e-9:
        raise ValueError("loop is not closed")
    H, ok = _compose_operators(chart, curves, tol)
    report = {
        "det_drift": abs(float(np.linalg.det(H)) - 1.0),
        "converged": ok,
    }
    return H, report


def square_loop(point, i: int, j: int, eps: float) -> list:
    """ccw coordinate square at a point: +eps e_i, +eps e_j, back."""
    p = np.asarray(point, dtype=float)
    ei = np.zeros_like(p)
    ej = np.zeros_like(p)
    ei[i] = eps
    ej[j] = eps
    corners = [p, p + ei, p + ei + ej, p + ej, p]
    return [Curve.segment(a, b) for a, b in zip(corners[:-1], corners[1:])]


# -- spreading fiber data over the chart ----------------------------------------------


def _apply_transport(kind: str, T: np.ndarray, value: np.ndarray) -> np.ndarray:
    if kind == "vector":
        return T @ value
    if kind == "covector":
        return value @ np.linalg.inv(T)
    if kind in ("endo", "projector"):
        return T @ value @ np.linalg.inv(T)
    if kind == "bilinear":
        Tinv = np.linalg.inv(T)
        return Tinv.T @ value @ Tinv
    raise ValueError(f"unknown structure kind '{kind}'")


def spread_structure(chart: ChartModel, kind: str, value, base_point, points,
                     tol: float = 1e-8, check_paths: int = 0, seed: int = 0):
    """Transport a fiber object from a base point to each target point.

    Transport runs along the straight coordinate segment to each target (a
    star-shaped spanning tree).  When `check_paths` > 0, that many targets
    are re-reached through a random intermediate corner and the worst
    disagreement is reported; for genuinely parallel structures it should
    sit at the ODE tolerance.
    """
    base = np.asarray(base_point, dtype=float)
    value = np.asarray(value, dtype=float)
    pts = np.asarray(points, dtype=float)
    out = []
    for p in pts:
        T, _, _ = transport_operator(chart, Curve.segment(base, p), tol=tol)
        out.append(_apply_transport(kind, T, value))
    report = {"max_path_residual": 0.0, "paths_checked": 0}
    if check_paths > 0 and len(pts) > 0:
        rng = np.random.default_rng(seed)
        idxs = rng.choice(len(pts), size=min(check_paths, len(pts)), replace=False)
        worst = 0.0
        for idx in idxs:
            p = pts[idx]
            lo = np.minimum(base, p)
            hi = np.maximum(base, p)
            mid = lo + rng.random(chart.n) * (hi - lo)
            T1, _, _ = transport_operator(chart, Curve.segment(base, mid), tol=tol)
            T2, _, _ = transport_operator(chart, Curve.segment(mid, p), tol=tol)
            alt = _apply_transport(kind, T2 @ T1, value)
            scale = 1.0 + max_abs(out[idx])
            worst = max(worst, max_abs(alt - out[idx]) / scale)
        report = {"max_path_residual": worst, "paths_checked": int(len(idxs))}
    return np.array(out), report
