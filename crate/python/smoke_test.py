"""Smoke test for the wpmec_py extension module.

Build first, e.g. `maturin develop -m crates/py/Cargo.toml --release`, or
copy the cdylib from `cargo build -p wpmec-py --release --features
extension-module` next to this file as `wpmec_py.so`.
"""

import math
import os
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import wpmec_py as w


def main():
    assert abs(w.path_loss(10.0, 2.0) - 1e-5) < 1e-18
    assert abs(w.amplitude(0.43 * math.pi - math.pi / 2) - 0.2) < 1e-12
    assert w.amplitude(0.3, beta_min=1.0) == 1.0

    cfg = w.Config(p_max_w=20)
    assert cfg.get("p_max_w") == "20"
    try:
        cfg.set("eta", "2")
    except ValueError:
        pass
    else:
        raise AssertionError("eta = 2 accepted")
    assert "SCHEMES" in dir(w) and "no_irs" in w.SCHEMES

    alloc, row = w.solve(cfg, seed=3, scheme="no_irs")
    assert row["status"] == "ok", row
    assert alloc.violations == [], alloc.violations
    assert alloc.tau1 == 0.0 and alloc.objective_bits > 0
    assert abs(alloc.tau2 + alloc.t1 - 1.0) < 1e-9
    again, _ = w.solve(cfg, seed=3, scheme="no_irs")
    assert again.objective_bits == alloc.objective_bits

    with tempfile.TemporaryDirectory() as d:
        spec = os.path.join(d, "p.sweep")
        with open(spec, "w") as f:
            f.write("param = P_max\nvalues = 10, 40\nseeds = 0\nschemes = no_irs\n")
        rows = w.sweep(spec)
        assert [r["value"] for r in rows] == [10.0, 40.0]
        assert rows[1]["objective_bits"] >= rows[0]["objective_bits"]

    print(alloc)
    print("smoke test ok")


if __name__ == "__main__":
    main()
