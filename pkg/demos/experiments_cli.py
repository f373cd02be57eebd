"""Drive the experiment CLI on a small config and read its outputs.

The same code paths produce the full-size runs in configs/.
"""

import json
import os
import tempfile

from chanlab.experiments.cli import main

config = """
kind = "ppt-scan"
seed = 1
n_samples = 400

[grid]
d = [30]
s = [1]

[params]
families = ["UUbar", "HH"]
"""

with tempfile.TemporaryDirectory() as tmp:
    path = os.path.join(tmp, "scan.toml")
    with open(path, "w") as fh:
        fh.write(config)
    out = os.path.join(tmp, "out")
    code = main(["ppt-scan", "--config", path, "--out", out])
    print("exit code", code)
    with open(os.path.join(out, "summary.json")) as fh:
        summary = json.load(fh)
    for pt in summary["points"]:
        lo, hi = pt["wilson_95"]
        print(f"{pt['family']:>6}: PPT fraction {pt['ppt_fraction']:.3f} in [{lo:.3f}, {hi:.3f}],"
              f" reference {pt['reference_fraction']:.3f}")
    with open(os.path.join(out, "samples.csv")) as fh:
        print("first rows of samples.csv:")
        for _ in range(3):
            print("  " + fh.readline().rstrip())

# Exact moments are one command away.
main(["oracle", "--target", "lambda1", "--d", "3", "--s", "2", "--p", "2"])
