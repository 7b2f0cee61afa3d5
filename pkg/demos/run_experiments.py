"""Driving the canned experiments: configs in, bundles out, always repeatable.

Every experiment kind takes one JSON config and writes one output
directory: a bundle.json with records, summary, and flags, schema-checked
CSVs, and plain-text plot data. The same config always produces the same
bundle, byte for byte, whatever the worker count. This script runs a small
escape-time sweep twice through the command-line entry point and checks
that claim.
"""

import json
import pathlib
import tempfile

from reachlab.harness.bundle import ResultBundle
from reachlab.harness.cli import main
from reachlab.harness.io import canonical_json

config = {
    "seed": 1,
    "potential": {"name": "double_well_1d"},
    "w0": [-1.0],
    "target": [1.0],
    "radius": 0.2,
    "d_grid": [0.25, 0.3, 0.4],
    "dt": 5e-3,
    "max_steps": 20000,
    "n_runs": 8,
}

root = pathlib.Path(tempfile.mkdtemp(prefix="reachlab_demo_"))
cfg_path = root / "sweep.json"
cfg_path.write_text(json.dumps(config, indent=2))

rc1 = main(["kramers-sweep", "--config", str(cfg_path), "--out", str(root / "a")])
rc2 = main(
    ["kramers-sweep", "--config", str(cfg_path), "--out", str(root / "b"), "--workers", "2"]
)
print(f"exit codes: {rc1}, {rc2}  (0 ok, 2 bad config, 3 failed run)")

a = ResultBundle.load(str(root / "a" / "bundle.json"))
b = ResultBundle.load(str(root / "b" / "bundle.json"))
print(f"records: {len(a.records)}, flags: {len(a.flags)}")
print(f"fitted barrier: {a.summary['barrier']:.4f}")
print(f"1 worker == 2 workers, modulo timing: "
      f"{canonical_json(a.result_fields()) == canonical_json(b.result_fields())}")

print(f"\neverything on disk under {root}:")
for p in sorted((root / "a").rglob("*")):
    if p.is_file():
        print(f"  {p.relative_to(root)}")
