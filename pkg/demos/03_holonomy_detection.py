"""Estimating the tractor holonomy algebra and what it preserves.

Small-loop holonomy logarithms and iterated covariant derivatives of the
tractor curvature both span pieces of the holonomy algebra.  Once a basis
is in hand, linear algebra finds every bilinear form, complex structure,
or subspace the algebra preserves; each of those is a geometric structure
on the underlying chart.
"""

import numpy as np

from tractorlab.holonomy import (
    classify,
    invariant_complex,
    invariant_metric,
    invariant_subspaces,
    invariant_symplectic,
    loop_algebra,
)
from tractorlab.library import polynomial_chart, sphere_chart, twisted_chart

for chart in (sphere_chart(3), twisted_chart(), polynomial_chart(3, seed=20)):
    base = chart.center()
    alg = loop_algebra(chart, base, count=4, seed=0)
    cands = [invariant_metric(alg), invariant_symplectic(alg),
             invariant_complex(alg)]
    cands += invariant_subspaces(alg)
    table = classify(alg, cands)
    found = [c.kind for c in cands if c is not None and not c.meta.get("trivial")]
    print(f"{chart.name}:")
    print(f"  algebra rank {alg.rank} "
          f"(loops alone: {alg.details['loops_only_rank']}, "
          f"infinitesimal: {alg.details['infinitesimal_rank']})")
    print(f"  invariant structures: {found or 'none'}")
    print(f"  labels: {table['labels'] or 'none'}")
    if table["dimension_matches"]:
        print(f"  dimension matches: {table['dimension_matches']}")
    print()

print("caveat attached to every classification:")
print(" ", classify(loop_algebra(sphere_chart(2), np.zeros(2)), [])["caveat"])
