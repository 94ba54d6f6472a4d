"""Smoke test for the hymflow_py extension.

Builds the extension with cargo when it is not importable, then runs the
stable line-bundle scenario and a few algebra calls.
Usage: python3 python/smoke_test.py
"""

import importlib
import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    try:
        return importlib.import_module("hymflow_py")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "hymflow-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libhymflow_py.so"
    dest = Path(tempfile.mkdtemp()) / "hymflow_py.so"
    shutil.copy(lib, dest)
    sys.path.insert(0, str(dest.parent))
    return importlib.import_module("hymflow_py")


def main():
    m = load_module()
    assert m.leq([1.0, -1.0], [2.0, -2.0])
    assert not m.leq([2.0, -2.0], [1.0, -1.0])
    assert abs(m.hym_of_type([1.0, -1.0]) - 4 * 3.141592653589793) < 1e-12
    ok, report = m.run_props(seed=1, cases=200)
    assert ok, report

    with tempfile.TemporaryDirectory() as out:
        summary, trace = m.run_scenario(str(ROOT / "scenarios" / "S1.toml"), out)
        s = json.loads(summary)
        assert s["converged"] and s["monotone_ok"], s
        assert trace.splitlines()[0].startswith("t,ym,hym,")
        t, steps, fields = m.inspect_checkpoint(str(Path(out) / "final.ckpt"))
        assert steps == s["steps"] and fields[0][0] == "h"
    print("smoke test passed: S1 hym_final =", s["hym_final"])


if __name__ == "__main__":
    main()
