"""
Test, then threshold, from the shell
====================================

Writes a score file, checks the global null, and if it is rejected, writes
the selected indices. The same steps as shell commands::

    randthresh test scores.txt
    randthresh threshold scores.txt --variant fixed --window 200 --out selected.txt
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from randthresh.distributions import make_rng

workdir = Path(tempfile.mkdtemp())
rng = make_rng(5)
y = rng.normal(size=500)
y[rng.permutation(500)[:100]] += 5.0
scores = workdir / "scores.txt"
scores.write_text("# demo scores\n" + "".join(f"{v!r}\n" for v in y.tolist()))


def randthresh(*args):
    proc = subprocess.run([sys.executable, "-m", "randthresh", *map(str, args)],
                          capture_output=True, text=True)
    return proc.returncode, proc.stdout, proc.stderr


code, out, _ = randthresh("test", scores)
print("test exit code", code, "D_n =", round(json.loads(out)["d_n"], 3))

if code == 3:
    selected = workdir / "selected.txt"
    code, out, _ = randthresh("threshold", scores, "--variant", "fixed", "--window", 200,
                              "--out", selected, "--eta-out", workdir / "eta.csv")
    report = json.loads(out)
    print("k_hat", report["k_hat"], "threshold", round(report["threshold_value"], 3))
    idx = np.loadtxt(selected, dtype=int, ndmin=1)
    print("first selected indices:", idx[:8].tolist())

# Small samples need their own critical value.
small = workdir / "small.txt"
small.write_text("".join(f"{v!r}\n" for v in rng.normal(size=40).tolist()))
code, _, err = randthresh("test", small)
print("n = 40 without calibration -> exit", code, "|", err.strip().splitlines()[-1])
cal = workdir / "calibration.json"
randthresh("calibrate", "--n", 40, "--replicates", 2000, "--output", cal)
code, out, _ = randthresh("test", small, "--calibration", cal)
print("with calibration -> exit", code, "critical", round(json.loads(out)["critical_value"], 4))
