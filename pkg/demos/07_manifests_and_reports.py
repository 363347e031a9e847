"""Driving the tool from manifests, the way the CLI does.

A manifest is a strict JSON document: dimension, coordinates, sparse
Christoffel expressions, a domain box, and optional structures to test.
The same `run` function backs every CLI command; reports are plain dicts
with a checks table, and serializing with `render` gives byte-identical
output for a fixed (manifest, seed, version).

The shell equivalents of what this script does:

    tractorlab detect --manifest sphere3
    tractorlab suite                      # whole bundled corpus, exit 0
    tractorlab verify --manifest my_chart.json --seed 2 --out report.json
"""

import json

from tractorlab import cli
from tractorlab.manifest import bundled_names, load_bundled, loads

print(f"bundled corpus: {bundled_names()}\n")

doc = {
    "format": "tractorlab-manifest",
    "version": 1,
    "name": "demo-chart",
    "dimension": 2,
    "coordinates": ["x1", "x2"],
    "domain": [[-0.8, 0.8], [-0.8, 0.8]],
    "gamma": {"0,1,1": "0.4*x1", "1,0,0": "-0.2*x2"},
}
manifest = loads(json.dumps(doc))
report = cli.run("verify", manifest, seed=0)
print(f"verify on a hand-written manifest: all_pass={report['all_pass']}")
for row in report["checks"]:
    print(f"  {row['name']:28s} residual {row['residual']:.2e}  "
          f"tol {row['tolerance']:.0e}  pass={row['pass']}")

rep = cli.run("detect", load_bundled("sphere3"), seed=0)
print(f"\ndetect on the bundled sphere3: labels = {rep['result']['labels']}")

text = cli.render(cli.run("compute", manifest, seed=0))
again = cli.render(cli.run("compute", manifest, seed=0))
print(f"\nrendered report is {len(text)} bytes; "
      f"identical across reruns: {text == again}")
