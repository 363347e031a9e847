"""Regenerate the bundled manifest corpus from the chart library.

Run from the repo root:  python3 scripts/regen_manifests.py
Output is deterministic (sorted keys, fixed float formatting via repr), so a
rerun with an unchanged library is a no-op in git.
"""

import json
from pathlib import Path

from tractorlab.library import (
    flat_chart,
    hyperbolic_chart,
    polynomial_chart,
    sphere_chart,
    twisted_chart,
)
from tractorlab.manifest import chart_to_manifest

OUT = Path(__file__).resolve().parent.parent / "src" / "tractorlab" / "manifests"

OMEGA = [
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0, 0.0],
]
J_STD = [
    [0.0, -1.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 1.0, 0.0],
]
H_CONST = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
]
K_PLANE = [
    [1.0, 0.0],
    [0.0, 1.0],
    [0.0, 0.0],
    [0.0, 0.0],
]

DOCS = [
    chart_to_manifest(flat_chart(2), name="flat2"),
    chart_to_manifest(
        flat_chart(3),
        name="flat3",
        structures={"omega": OMEGA, "J": J_STD, "h": H_CONST, "K": K_PLANE},
        loops=[{"plane": [0, 1], "size": 0.08}],
        curves=[{"components": ["0.6*t", "0.3*t", "-0.2*t"], "t0": 0.0, "t1": 1.0}],
    ),
    chart_to_manifest(sphere_chart(2), name="sphere2"),
    chart_to_manifest(
        sphere_chart(3),
        name="sphere3",
        structures={"omega": OMEGA},
        loops=[{"plane": [0, 2], "size": 0.08}],
    ),
    chart_to_manifest(hyperbolic_chart(3), name="hyperbolic3"),
    chart_to_manifest(
        twisted_chart(),
        name="product_rf3",
        structures={"K": K_PLANE},
        loops=[{"plane": [1, 2], "size": 0.1}],
    ),
    chart_to_manifest(polynomial_chart(), name="randpoly3"),
]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for doc in DOCS:
        path = OUT / f"{doc['name']}.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
