"""Coordinate charts carrying a torsion-free affine connection.

A chart is a box in R^n with named coordinates and Christoffel symbols
Gamma^k_{ij} given as symbolic expressions.  This module provides the
affine-level operations: curvature and Ricci tensors, projective change of
connection, volume normalization, covariant derivatives of symbolic tensor
fields, geodesic integration, and parallel transport of tangent vectors.

Index conventions used throughout the package:

* ``gamma[k, i, j]`` is Gamma^k_{ij} (symmetric in i, j);
* curvature components ``R[h, j, k, l]`` satisfy
  ``R = d_h Gamma^k_{jl} - d_j Gamma^k_{hl}
  + Gamma^k_{hm} Gamma^m_{jl} - Gamma^k_{jm} Gamma^m_{hl}``,
  i.e. the first two slots are the plane of rotation;
* ``Ric[j, l]`` contracts the first and third slots, ``R[k, j, k, l]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .expr import Expr, compile_exprs, num, parse, var, FUNCTION_NAMES

__all__ = [
    "ChartModel",
    "TensorValue",
    "TensorField",
    "OneFormField",
    "Curve",
    "GeodesicPath",
    "symmetrize",
    "curvature",
    "ricci",
    "project_change",
    "normalize_volume",
    "covariant_derivative",
    "integrate_geodesic",
    "transport_vector",
    "sample_points",
    "max_abs",
]

_ZERO = num(0.0)


def _as_expr_array(data, shape) -> np.ndarray:
    arr = np.empty(shape, dtype=object)
    src = np.asarray(data, dtype=object)
    if src.shape != shape:
        raise ValueError(f"expected component array of shape {shape}, got {src.shape}")
    it = np.nditer(src, flags=["multi_index", "refs_ok"])
    for item in it:
        val = item.item()
        if isinstance(val, Expr):
            arr[it.multi_index] = val
        elif isinstance(val, (int, float, np.integer, np.floating)):
            arr[it.multi_index] = num(float(val))
        else:
            raise TypeError(f"component {it.multi_index} is not an expression: {val!r}")
    return arr


def max_abs(arr) -> float:
    """Componentwise max-abs norm used for all residual reporting."""
    a = np.asarray(arr, dtype=float)
    return float(np.abs(a).max()) if a.size else 0.0


class ChartModel:
    """A coordinate box with Christoffel symbols as symbolic expressions."""

    def __init__(self, coords: Sequence[str], gamma, domain, metric=None, name: str = ""):
        coords = tuple(coords)
        n = len(coords)
        if n < 2:
            raise ValueError("charts need at least two coordinates")
        if len(set(coords)) != n:
            raise ValueError("coordinate names must be distinct")
        for c in coords:
            if c in FUNCTION_NAMES or not c.isidentifier():
                raise ValueError(f"invalid coordinate name '{c}'")
        self.coords = coords
        self.gamma = _as_expr_array(gamma, (n, n, n))
        dom = np.asarray(domain, dtype=float)
        if dom.shape != (n, 2) or not np.all(dom[:, 0] < dom[:, 1]):
            raise ValueError("domain must be an (n, 2) array of [lo, hi] pairs")
        self.domain = dom
        self.metric = None if metric is None else _as_expr_array(metric, (n, n))
        self.name = name
        self._compiled_cache: dict[str, Callable] = {}
        self._symbolic_cache: dict[str, object] = {}

    # -- basics ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.coords)

    def var(self, i: int) -> Expr:
        return var(self.coords[i])

    def parse(self, text: str) -> Expr:
        return parse(text, self.coords)

    def env(self, point) -> dict:
        point = np.asarray(point, dtype=float)
        if point.shape != (self.n,):
            raise ValueError(f"point must have {self.n} components")
        return dict(zip(self.coords, point))

    def contains(self, point) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.domain[:, 0]) and np.all(p <= self.domain[:, 1]))

    def center(self) -> np.ndarray:
        return self.domain.mean(axis=1)

    # -- compiled evaluators ----------------------------------------------------

    def compiled(self, key: str, exprs: Iterable[Expr]) -> Callable[..., np.ndarray]:
        fn = self._compiled_cache.get(key)
        if fn is None:
            fn = compile_exprs(exprs, self.coords)
            self._compiled_cache[key] = fn
        return fn

    def gamma_at(self, point) -> np.ndarray:
        n = self.n
        fn = self.compiled("gamma", self.gamma.ravel())
        return fn(*np.asarray(point, dtype=float)).reshape(n, n, n)

    def dgamma_field(self) -> np.ndarray:
        """Symbolic first derivatives d_h Gamma^k_{ij}, shape (n, n, n, n)."""
        key = "dgamma"
        arr = self._symbolic_cache.get(key)
        if arr is None:
            n = self.n
            arr = np.empty((n, n, n, n), dtype=object)
            for h in range(n):
                name = self.coords[h]
                for k in range(n):
                    for i in range(n):
                        for j in range(n):
                            arr[h, k, i, j] = self.gamma[k, i, j].diff(name)
            self._symbolic_cache[key] = arr
        return arr

    def dgamma_at(self, point) -> np.ndarray:
        n = self.n
        fn = self.compiled("dgamma", self.dgamma_field().ravel())
        return fn(*np.asarray(point, dtype=float)).reshape(n, n, n, n)

    def trace_gamma_field(self) -> np.ndarray:
        """tr(Gamma_i) = Gamma^m_{im}, shape (n,)."""
        key = "trgamma"
        arr = self._symbolic_cache.get(key)
        if arr is None:
            n = self.n
            arr = np.empty((n,), dtype=object)
            for i in range(n):
                s = _ZERO
                for m in range(n):
                    s = s + self.gamma[m, i, m]
                arr[i] = s
            self._symbolic_cache[key] = arr
        return arr

    def symbolic(self, key: str, builder: Callable[[], object]):
        val = self._symbolic_cache.get(key)
        if val is None:
            val = builder()
            self._symbolic_cache[key] = val
        return val

    def with_gamma(self, gamma, name=None, metric="keep") -> "ChartModel":
        return ChartModel(
            self.coords,
            gamma,
            self.domain,
            metric=self.metric if metric == "keep" else metric,
            name=self.name if name is None else name,
        )


@dataclass(frozen=True)
class TensorValue:
    """Tensor components evaluated at a point; variance is 'u'/'d' per slot."""

    point: np.ndarray
    components: np.ndarray
    variance: str

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))
        if self.components.ndim != len(self.variance):
            raise ValueError("variance string must have one letter per tensor slot")


@dataclass(frozen=True)
class TensorField:
    """Symbolic tensor field on a chart."""

    chart: ChartModel
    components: np.ndarray
    variance: str

    def __post_init__(self):
        raw = np.asarray(self.components, dtype=object)
        comps = _as_expr_array(raw, raw.shape)
        object.__setattr__(self, "components", comps)
        if comps.ndim != len(self.variance):
            raise ValueError("variance string must have one letter per tensor slot")
        if any(v not in "ud" for v in self.variance):
            raise ValueError("variance letters must be 'u' or 'd'")
        if comps.shape != (self.chart.n,) * comps.ndim:
            raise ValueError("tensor components must be n in every slot")

    def at(self, point) -> TensorValue:
        p = np.asarray(point, dtype=float)
        env = self.chart.env(p)
        out = np.array([e.eval(env) for e in self.components.ravel()], dtype=float)
        return TensorValue(p, out.reshape(self.components.shape), self.variance)


@dataclass(frozen=True)
class OneFormField:
    """A one-form with symbolic components, e.g. a projective change."""

    chart: ChartModel
    components: np.ndarray

    def __post_init__(self):
        comps = _as_expr_array(self.components, (self.chart.n,))
        object.__setattr__(self, "components", comps)

    def at(self, point) -> np.ndarray:
        env = self.chart.env(point)
        return np.array([e.eval(env) for e in self.components], dtype=float)

    def diff_at(self, point) -> np.ndarray:
        """Partial derivatives d_i Ups_j at a point, shape (n, n)."""
        env = self.chart.env(point)
        n = self.chart.n
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = self.components[j].diff(self.chart.coords[i]).eval(env)
        return out


@dataclass(frozen=True)
class Curve:
    """A parametric curve with symbolic components x(t)."""

    components: tuple
    t0: float
    t1: float

    @staticmethod
    def from_strings(texts: Sequence[str], t0: float, t1: float) -> "Curve":
        return Curve(tuple(parse(t, ("t",)) for t in texts), float(t0), float(t1))

    @staticmethod
    def segment(a, b) -> "Curve":
        """Straight coordinate segment from a to b, parametrized on [0, 1]."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        t = var("t")
        comps = tuple(num(ai) + (bi - ai) * t for ai, bi in zip(a, b))
        return Curve(comps, 0.0, 1.0)

    def velocity_exprs(self) -> tuple:
        return tuple(c.diff("t") for c in self.components)

    def point(self, t: float) -> np.ndarray:
        return np.array([c.eval({"t": t}) for c in self.components], dtype=float)

    def velocity(self, t: float) -> np.ndarray:
        return np.array([c.eval({"t": t}) for c in self.velocity_exprs()], dtype=float)

    def is_closed(self, tol: float = 1e-12) -> bool:
        return max_abs(self.point(self.t0) - self.point(self.t1)) <= tol


@dataclass(frozen=True)
class GeodesicPath:
    """Sampled geodesic: times, points, velocities, and a truncation flag."""

    ts: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    exited_domain: bool
    converged: bool


# -- curvature ------------------------------------------------------------------


def assemble_curvature(gamma, dgamma) -> np.ndarray:
    """R[h,j,k,l] from gamma[k,i,j] and dgamma[h,k,i,j]; works on floats or Expr."""
    n = gamma.shape[0]
    out = np.empty((n, n, n, n), dtype=gamma.dtype)
    for h in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    s = dgamma[h, k, j, l] - dgamma[j, k, h, l]
                    for m in range(n):
                        s = s + (gamma[k, h, m] * gamma[m, j, l] - gamma[k, j, m] * gamma[m, h, l])
                    out[h, j, k, l] = s
    return out


def assemble_ricci(curv) -> np.ndarray:
    """Ric[j,l] = R[k,j,k,l] (first and third slots contracted)."""
    n = curv.shape[0]
    out = np.empty((n, n), dtype=curv.dtype)
    for j in range(n):
        for l in range(n):
            s = curv[0, j, 0, l]
            for k in range(1, n):
                s = s + curv[k, j, k, l]
            out[j, l] = s
    return out


def curvature_field(chart: ChartModel) -> np.ndarray:
    return chart.symbolic("R", lambda: assemble_curvature(chart.gamma, chart.dgamma_field()))


def ricci_field(chart: ChartModel) -> np.ndarray:
    return chart.symbolic("Ric", lambda: assemble_ricci(curvature_field(chart)))


def curvature(chart: ChartModel, point) -> TensorValue:
    """Curvature tensor R[h,j,k,l] at a point (variance 'ddud')."""
    n = chart.n
    fn = chart.compiled("R", curvature_field(chart).ravel())
    comps = fn(*np.asarray(point, dtype=float)).reshape(n, n, n, n)
    return TensorValue(np.asarray(point, dtype=float), comps, "ddud")


def ricci(chart: ChartModel, point) -> TensorValue:
    """Ricci tensor Ric[j,l] at a point (not symmetrized)."""
    n = chart.n
    fn = chart.compiled("Ric", ricci_field(chart).ravel())
    comps = fn(*np.asarray(point, dtype=float)).reshape(n, n)
    return TensorValue(np.asarray(point, dtype=float), comps, "dd")


# -- connection-level operations ---------------------------------------------------


def symmetrize(chart: ChartModel, seed: int = 0) -> tuple[ChartModel, float]:
    """Return a torsion-free copy plus the max asymmetry found at samples."""
    n = chart.n
    sym = np.empty((n, n, n), dtype=object)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                sym[k, i, j] = 0.5 * (chart.gamma[k, i, j] + chart.gamma[k, j, i])
    pts = sample_points(chart, seed=seed, n_random=10)
    worst = 0.0
    for p in pts:
        g = chart.gamma_at(p)
        worst = max(worst, max_abs(g - g.transpose(0, 2, 1)))
    return chart.with_gamma(sym, name=chart.name), worst


def project_change(chart: ChartModel, ups) -> ChartModel:
    """Projective change of connection by a one-form.

    New symbols: Gamma'^k_{ij} = Gamma^k_{ij} + Ups_i d^k_j + Ups_j d^k_i.
    The result describes the same unparametrized geodesics.
    """
    if isinstance(ups, OneFormField):
        comps = ups.components
    else:
        comps = _as_expr_array(ups, (chart.n,))
    n = chart.n
    out = np.empty((n, n, n), dtype=object)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                term = chart.gamma[k, i, j]
                if k == j:
                    term = term + comps[i]
                if k == i:
                    term = term + comps[j]
                out[k, i, j] = term
    label = f"{chart.name}+change" if chart.name else "changed"
    return chart.with_gamma(out, name=label, metric=None)


def normalize_volume(chart: ChartModel) -> tuple[ChartModel, OneFormField]:
    """Projectively change to the connection preserving the coordinate volume.

    Returns the trace-free representative and the one-form used,
    Ups_i = -tr(Gamma_i)/(n+1).
    """
    n = chart.n
    tr = chart.trace_gamma_field()
    ups = np.array([tr[i] / float(-(n + 1)) for i in range(n)], dtype=object)
    form = OneFormField(chart, ups)
    out = project_change(chart, form)
    label = f"{chart.name}/vol" if chart.name else "volume-normalized"
    out.name = label
    return out, form


def covariant_derivative(chart: ChartModel, tensor: TensorField) -> TensorField:
    """Covariant derivative; result gains a leading lower slot."""
    if tensor.chart is not chart:
        raise ValueError("tensor field belongs to a different chart")
    n = chart.n
    shape = tensor.components.shape
    out = np.empty((n,) + shape, dtype=object)
    for a in range(n):
        name = chart.coords[a]
        for idx in np.ndindex(*shape) if shape else [()]:
            term = tensor.components[idx].diff(name)
            for slot, letter in enumerate(tensor.variance):
                i_s = idx[slot]
                for m in range(n):
                    swapped = idx[:slot] + (m,) + idx[slot + 1 :]
                    if letter == "u":
                        term = term + chart.gamma[i_s, a, m] * tensor.components[swapped]
                    else:
                        term = term - chart.gamma[m, a, i_s] * tensor.components[swapped]
            out[(a,) + idx] = term
    return TensorField(chart, out, "d" + tensor.variance)


# -- integration -------------------------------------------------------------------


def _rk4_fixed(f, y0: np.ndarray, t0: float, t1: float, steps: int, record: bool = False):
    y = np.array(y0, dtype=float)
    h = (t1 - t0) / steps
    ts = [t0]
    ys = [y.copy()]
    t = t0
    for _ in range(steps):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
        if record:
            ts.append(t)
            ys.append(y.copy())
    if record:
        return np.array(ts), np.array(ys)
    return y


def rk4_adaptive(f, y0, t0: float, t1: float, tol: float = 1e-8,
                 initial_steps: int = 64, max_steps: int = 65536):
    """Fixed-step RK4, halving the step until two resolutions agree.

    Returns (final_state, steps_used, converged).
    """
    steps = initial_steps
    prev = _rk4_fixed(f, y0, t0, t1, steps)
    while steps < max_steps:
        steps *= 2
        cur = _rk4_fixed(f, y0, t0, t1, steps)
        if max_abs(cur - prev) <= tol * (1.0 + max_abs(cur)):
            return cur, steps, True
        prev = cur
    return prev, steps, False


def integrate_geodesic(chart: ChartModel, point, velocity, t_end: float = 1.0,
                       tol: float = 1e-8, record_steps: int = 128) -> GeodesicPath:
    """Integrate the geodesic ODE xddot^k + Gamma^k_{ij} xdot^i xdot^j = 0.

    The path is truncated with a flag if it leaves the domain box.
    """
    n = chart.n
    p0 = np.asarray(point, dtype=float)
    v0 = np.asarray(velocity, dtype=float)
    fn = chart.compiled("gamma", chart.gamma.ravel())

    def f(t, y):
        x, v = y[:n], y[n:]
        g = fn(*x).reshape(n, n, n)
        acc = -np.einsum("kij,i,j->k", g, v, v)
        return np.concatenate([v, acc])

    y0 = np.concatenate([p0, v0])
    _, steps, converged = rk4_adaptive(f, y0, 0.0, t_end, tol=tol)
    record = max(record_steps, steps)
    ts, ys = _rk4_fixed(f, y0, 0.0, t_end, record, record=True)
    pts = ys[:, :n]
    vels = ys[:, n:]
    inside = np.array([chart.contains(p) for p in pts])
    if not inside.all():
        cut = int(np.argmin(inside))  # first step outside
        cut = max(cut, 1)
        return GeodesicPath(ts[:cut], pts[:cut], vels[:cut], True, converged)
    return GeodesicPath(ts, pts, vels, False, converged)


def transport_vector(chart: ChartModel, curve: Curve, v0, tol: float = 1e-8):
    """Parallel transport of a tangent vector along a curve: vdot = -Gamma_xdot v.

    Returns (vector_at_end, steps, converged).
    """
    n = chart.n
    fn = chart.compiled("gamma", chart.gamma.ravel())
    xs = compile_exprs(list(curve.components), ("t",))
    vs = compile_exprs(list(curve.velocity_exprs()), ("t",))

    def f(t, v):
        x = xs(t)
        xd = vs(t)
        g = fn(*x).reshape(n, n, n)
        return -np.einsum("kij,i,j->k", g, xd, v)

    out, steps, ok = rk4_adaptive(f, np.asarray(v0, dtype=float), curve.t0, curve.t1, tol=tol)
    return out, steps, ok


# -- sampling ------------------------------------------------------------------------


def _van_der_corput(k: int, base: int) -> float:
    x, denom = 0.0, 1.0
    while k:
        k, rem = divmod(k, base)
        denom *= base
        x += rem / denom
    return x


_HALTON_BASES = (2, 3, 5, 7, 11, 13)


def sample_points(chart: ChartModel, seed: int = 0, n_random: int = 50,
                  n_grid: int = 14, margin: float = 0.05) -> np.ndarray:
    """Deterministic sample set: Halton grid plus seeded uniform points.

    Points are drawn from the domain box shrunk inward by `margin` so that
    finite flows and loops started at samples stay inside.
    """
    n = chart.n
    lo = chart.domain[:, 0]
    hi = chart.domain[:, 1]
    span = hi - lo
    lo_m = lo + margin * span
    span_m = (1 - 2 * margin) * span
    rows = []
    for k in range(1, n_grid + 1):
        u = np.array([_van_der_corput(k, _HALTON_BASES[d]) for d in range(n)])
        rows.append(lo_m + u * span_m)
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        rows.append(lo_m + rng.random(n) * span_m)
    return np.array(rows)
