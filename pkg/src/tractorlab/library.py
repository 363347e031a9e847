"""Ready-made example charts.

These are the standard test geometries used across the test suite, the demo
scripts, and the bundled manifest files: flat space, round spheres and
hyperbolic balls in conformal coordinates, a Ricci-flat but curved chart,
and a seeded random polynomial connection.
"""

from __future__ import annotations

import numpy as np

from .affine import ChartModel
from .expr import Expr, num, var

__all__ = [
    "flat_chart",
    "sphere_chart",
    "hyperbolic_chart",
    "twisted_chart",
    "polynomial_chart",
    "conformal_chart",
]


def _coords(n: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(n))


def flat_chart(n: int, half_width: float = 1.0) -> ChartModel:
    """Flat R^n: all Christoffel symbols zero, identity metric."""
    coords = _coords(n)
    gamma = np.full((n, n, n), num(0.0), dtype=object)
    metric = np.full((n, n), num(0.0), dtype=object)
    for i in range(n):
        metric[i, i] = num(1.0)
    domain = np.array([[-half_width, half_width]] * n)
    return ChartModel(coords, gamma, domain, metric=metric, name=f"flat{n}")


def conformal_chart(n: int, dphi: list, conf: Expr, domain, name: str) -> ChartModel:
    """Levi-Civita connection of g = conf * identity with d(log conf)/2 = dphi.

    Gamma^k_{ij} = d^k_i dphi_j + d^k_j dphi_i - delta_ij dphi_k.
    """
    gamma = np.empty((n, n, n), dtype=object)
    for k in range(n):
        for i in range(n):
            for j in range(n):
                term = num(0.0)
                if k == i:
                    term = term + dphi[j]
                if k == j:
                    term = term + dphi[i]
                if i == j:
                    term = term - dphi[k]
                gamma[k, i, j] = term
    metric = np.full((n, n), num(0.0), dtype=object)
    for i in range(n):
        metric[i, i] = conf
    return ChartModel(_coords(n), gamma, np.asarray(domain, dtype=float), metric=metric, name=name)


def _r2(n: int) -> Expr:
    s = var("x1") * var("x1")
    for i in range(1, n):
        s = s + var(f"x{i + 1}") * var(f"x{i + 1}")
    return s


def sphere_chart(n: int, half_width: float = 0.8) -> ChartModel:
    """Unit round sphere in stereographic coordinates, g = 4/(1+r^2)^2 I."""
    denom = 1.0 + _r2(n)
    dphi = [-2.0 * var(f"x{i + 1}") / denom for i in range(n)]
    conf = 4.0 / (denom * denom)
    domain = [[-half_width, half_width]] * n
    return conformal_chart(n, dphi, conf, domain, name=f"sphere{n}")


def hyperbolic_chart(n: int, half_width: float = 0.5) -> ChartModel:
    """Unit-curvature hyperbolic ball, g = 4/(1-r^2)^2 I on r < 1."""
    denom = 1.0 - _r2(n)
    dphi = [2.0 * var(f"x{i + 1}") / denom for i in range(n)]
    conf = 4.0 / (denom * denom)
    domain = [[-half_width, half_width]] * n
    return conformal_chart(n, dphi, conf, domain, name=f"hyperbolic{n}")


def twisted_chart(half_width: float = 1.0) -> ChartModel:
    """Ricci-flat but non-flat chart on R^3: Gamma^1_{33} = x2*x3.

    The curvature has a single independent component R_{23}{}^1{}_3 = x3,
    the connection preserves the coordinate volume, and the plane spanned
    by the first two coordinate directions is invariant under transport.
    """
    n = 3
    gamma = np.full((n, n, n), num(0.0), dtype=object)
    gamma[0, 2, 2] = var("x2") * var("x3")
    domain = np.array([[-half_width, half_width]] * n)
    return ChartModel(_coords(n), gamma, domain, name="twisted3")


def polynomial_chart(n: int = 3, seed: int = 7, scale: float = 0.08,
                     half_width: float = 0.7) -> ChartModel:
    """Seeded random connection with degree-one polynomial symbols.

    Entries are small so that curvature stays mild on the box; the symbols
    are symmetrized in the lower index pair by construction.
    """
    rng = np.random.default_rng(seed)
    coords = _coords(n)
    gamma = np.empty((n, n, n), dtype=object)
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                c0 = scale * float(rng.uniform(-1.0, 1.0))
                term = num(c0)
                for d in range(n):
                    cd = scale * float(rng.uniform(-1.0, 1.0))
                    term = term + cd * var(coords[d])
                gamma[k, i, j] = term
                gamma[k, j, i] = term
    domain = np.array([[-half_width, half_width]] * n)
    return ChartModel(coords, gamma, domain, name=f"randpoly{n}")
