#!/usr/bin/env python3
"""Smoke test for the topodemon extension module.

Builds the cdylib with cargo, stages it under an importable name, then
exercises geometry, decoding, the ledger, and a tiny sweep.
"""

import json
import math
import pathlib
import shutil
import subprocess
import sys
import sysconfig
import tempfile

REPO = pathlib.Path(__file__).resolve().parents[1]


def build_and_import():
    subprocess.run(
        ["cargo", "build", "-p", "topodemon-py", "--release"],
        cwd=REPO,
        check=True,
    )
    built = REPO / "target" / "release" / "libtopodemon.so"
    stage = pathlib.Path(tempfile.mkdtemp(prefix="topodemon-py-"))
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy2(built, stage / f"topodemon{suffix}")
    sys.path.insert(0, str(stage))
    import topodemon

    return topodemon


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol * max(1.0, abs(a), abs(b)), f"{a} != {b}"


def main():
    td = build_and_import()

    g = td.Geometry(4, 3)
    assert g.num_edges == 2 * 4 * 3 + 4 + 3 == 31
    assert g.num_vertices == 5 * 4 == 20
    assert g.num_plaquettes == 12
    assert g.euler_characteristic == -1
    assert len(g.logical_z(1)) == 4
    assert len(g.logical_x(2)) == 3 + 1
    assert g.path_independent(0, 3)
    assert "Geometry(n=4, l=3)" == repr(g)

    # noiseless shot always succeeds and spends the full battery gap
    ok, spent, syndromes = td.run_shot(10, 3, 1e-12, 5, seed=42)
    assert ok
    approx(spent, td.DEFAULT_DELTA_E)
    assert syndromes == 6

    # determinism of the Monte Carlo estimate
    a = td.estimate_p_succ(12, 3, 0.02, 5, shots=200, master_seed=9)
    b = td.estimate_p_succ(12, 3, 0.02, 5, shots=200, master_seed=9)
    assert a == b
    assert 0.0 <= a[1] <= a[0] <= a[2] <= 1.0

    # partial-information channel, pinned against the closed form
    approx(td.effective_success(0.62, 2.7, 1.0), 0.637539539514705)
    assert td.effective_success(0.0) == 0.5
    assert td.effective_success(1.0) == 1.0

    # calibration anchor: n_max = 78 at perfect decoding, L = 7, p = 0.005
    approx(td.calibrate_infrastructure(78.0), 1.54794437033255e-3, tol=1e-12)
    approx(td.horizon_n_max(1.0, 0.005, 7), 78.0, tol=1e-9)
    assert td.horizon_n_max(0.5, 0.005, 7) is None

    approx(td.temperature_from_p(0.005), -4.0 / math.log(0.005))

    lg = td.ledger(0.9, 0.005, 7, 40)
    approx(lg["e_b"], 0.8 * td.DEFAULT_DELTA_E)
    approx(lg["w_net"], lg["e_b"] - lg["w_ops"] - lg["w_bulk"])
    approx(lg["q_bath"], td.DEFAULT_DELTA_E + lg["w_ops"] + lg["w_bulk"] - lg["e_b"])
    assert lg["ds_total"] > 0.0

    # tiny sweep through the JSON spec interface
    spec = json.loads(td.default_spec_json("suppression", 3))
    spec["shots"] = 100
    spec["n_list"] = [5]
    spec["l_list"] = [2, 3]
    spec["p_list"] = [0.02]
    spec["rounds"] = {"fixed": 3}
    result = json.loads(td.run_experiment_json(json.dumps(spec)))
    assert result["header"][0] == "p"
    assert len(result["rows"]) == 2
    assert result["metadata"]["spec"]["shots"] == 100

    # invalid parameters surface as ValueError naming the field
    try:
        td.estimate_p_succ(10, 3, 1.5, 5, 10, 0)
    except ValueError as e:
        assert "p" in str(e)
    else:
        raise AssertionError("expected ValueError for p = 1.5")

    print("smoke test passed")


if __name__ == "__main__":
    main()
