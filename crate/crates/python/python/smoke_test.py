"""Smoke test for the kpratio Python module.

Build the extension first:

    cargo build --release -p kpratio-py --features extension-module

then run this script from anywhere. Set KPRATIO_LIB to point at a specific
shared library instead of the one found under target/.
"""

import importlib.util
import math
import os
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[3]


def find_library():
    if "KPRATIO_LIB" in os.environ:
        return pathlib.Path(os.environ["KPRATIO_LIB"])
    for profile in ("release", "debug"):
        for name in ("libkpratio_py.so", "libkpratio_py.dylib", "kpratio_py.dll"):
            p = ROOT / "target" / profile / name
            if p.exists():
                return p
    sys.exit("kpratio extension not built; see the module docstring")


def load():
    lib = find_library()
    suffix = ".pyd" if lib.suffix == ".dll" else ".so"
    target = pathlib.Path(tempfile.mkdtemp()) / ("kpratio" + suffix)
    shutil.copy(lib, target)
    spec = importlib.util.spec_from_file_location("kpratio", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    kp = load()

    diamond = kp.Domain.preset("diamond")
    assert len(diamond) == 4
    assert diamond.circumscribed_rectangle() == (2.0, 2.0)
    assert diamond.vertical_support() == (True, True)
    assert diamond.max_boundary_slope() == 1.0
    assert kp.Domain.from_json(diamond.to_json()).vertices == diamond.vertices

    # cone over the diamond: |u_x| = 1 on an area of 2
    cone = kp.ConcaveFunction.envelope(diamond, [(0.0, 0.0, 1.0)])
    assert cone.is_concave()
    assert close(cone.norm(1.0), 2.0, 1e-12)
    assert close(cone.evaluate(0.5, 0.0), 0.5, 1e-12)
    assert close(cone.ratio(math.inf), 1.0, 1e-12)

    disc = kp.Domain.preset("disc", 512)
    tent = kp.ConcaveFunction.tent(disc, (0.0, -1.0), (0.0, 1.0), 1.0)
    assert close(tent.scanline_l1(0.0) / tent.scanline_l1(90.0), 2.0, 1e-3)
    assert kp.k1_upper_bound(disc)[0] == 2.0

    report = kp.bound_report(diamond, 2.0)
    assert close(report["K_p_upper"], 1.0 + 2.0 / math.pi, 2e-3)
    assert kp.bound_report(kp.Domain.preset("square"), 2.0)["K_p_upper"] == math.inf

    assert close(kp.poincare_constant(2.0), 1.0 / math.pi**2, 1e-4)

    est = kp.estimate(disc, 1.0, budget=64)
    assert 1.99 <= est["best_ratio"] <= est["upper_bound"] + 1e-9
    assert est == kp.estimate(disc, 1.0, budget=64)

    rows = kp.family_table(kp.Domain.preset("square"), "u-omega-vertical", math.inf)
    assert all(close(r["norm_h1"] * r["parameter"], 1.0, 1e-9) for r in rows)

    suite = kp.verify("sandwich", cases=50)
    assert suite["violations"] == 0 and suite["first_counterexample"] is None

    try:
        kp.Domain([(0.0, 0.0), (1.0, 0.0)])
    except ValueError:
        pass
    else:
        raise AssertionError("degenerate domain accepted")

    print("kpratio python smoke test: ok")


if __name__ == "__main__":
    main()
