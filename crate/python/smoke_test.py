"""Smoke test for the schauder_lab extension.

Build and install first:  maturin develop -m crates/py/Cargo.toml --features extension-module
"""

import math
import pathlib
import tempfile

import schauder_lab as sl


def main():
    model = sl.StableModel.isotropic(0.5, 1)
    assert model.alpha == 0.5 and model.dim == 1
    assert abs(model.symbol([2.0]) + math.sqrt(2.0)) < 1e-12

    k = sl.kernel(model, 1.0, 4096)
    assert abs(k["total_mass"] - 1.0) < 1e-3, k["total_mass"]
    assert abs(k["at_origin"] - 2.0 / math.pi) < 1e-3, k["at_origin"]

    try:
        sl.StableModel.isotropic(2.5, 1)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha outside (0, 2) accepted")

    drift = sl.DriftField.holder_cusp(1, 1.0, 0.6, [0.0])
    report = sl.flow_stability(drift, 0.6, pairs=50)
    assert math.isfinite(report["max_ratio"]), report

    values = [abs(math.sin(-math.pi + 2 * math.pi * i / 1024)) ** 0.5 for i in range(1024)]
    h = sl.holder_seminorm(values, math.pi, 0.5, pairs=2000)
    assert 0.5 < h["seminorm"] < 2.0, h

    config = pathlib.Path(__file__).resolve().parents[1] / "configs" / "flow.toml"
    with tempfile.TemporaryDirectory() as out:
        manifest = sl.run_experiment(config.read_text(), out)
    assert all(c["verdict"] == "PASS" for c in manifest["checks"]), manifest["checks"]

    print("smoke test OK")


if __name__ == "__main__":
    main()
