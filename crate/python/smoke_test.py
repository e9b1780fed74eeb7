"""Smoke test for the qdo Python extension.

Build the extension first:

    cargo build --release -p qdo-py

The script imports ``qdo`` from the path, falling back to the shared
library under ``target/``.
"""

import csv
import io
import importlib.util
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_qdo():
    try:
        import qdo

        return qdo
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libqdo.so"
        if lib.exists():
            tmp = Path(tempfile.mkdtemp()) / "qdo.so"
            shutil.copy(lib, tmp)
            spec = importlib.util.spec_from_file_location("qdo", tmp)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("qdo extension not found; run `cargo build --release -p qdo-py`")


def main():
    qdo = load_qdo()

    dimer = [[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]]
    exact = 3.0 - 0.5 * (2 * math.sqrt(1.125) + 2 * math.sqrt(0.875) + math.sqrt(1.25) + math.sqrt(0.75))
    e = qdo.energy_breakdown(dimer)
    assert abs(e["binding_e"] - exact) < 1e-12, e
    assert abs(e["delta2"] - 0.75 / 64) < 1e-15

    trimer = qdo.trimer_positions(2.5, 2.0)
    report = qdo.tangle_report(trimer)
    assert len(report["tau_mode"]) == 9
    assert report["tau_tilde_total"] <= report["bound_rhs"] + 1e-10
    assert abs(qdo.edi(trimer, 0, 1) - 1.0) < 0.5

    theta_star = math.acos((1.5 - math.sqrt(8.25)) / 3.0)
    grid = [math.pi / 3 + (math.pi - math.pi / 3) * k / 99 for k in range(100)]
    b = qdo.find_boundary("at_zero", grid, fixed=3.0)
    assert abs(b["root"] - theta_star) < 1e-6, b

    rows = list(csv.DictReader(io.StringIO(qdo.trimer_scan(rho=(2.0, 3.0, 3), theta=(1.2, 3.0, 3)))))
    assert len(rows) == 9 and all(r["status"] == "ok" for r in rows)

    q = qdo.qubit_trimer(4.0, math.pi)
    assert q["binding"]["delta_qub"] > 0 and q["delta3"] > 0

    try:
        qdo.energy_breakdown([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    except ValueError:
        pass
    else:
        raise AssertionError("coincident sites accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
