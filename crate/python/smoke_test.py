#!/usr/bin/env python3
"""Smoke test for the primatlas_py extension module.

Builds the cdylib if needed, loads it from target/, and runs a handful of
end-to-end checks against known values.

Usage: python3 python/smoke_test.py [--release]
"""

import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build_and_import(release: bool):
    profile = "release" if release else "debug"
    cmd = ["cargo", "build", "-p", "primatlas-py"]
    if release:
        cmd.append("--release")
    subprocess.run(cmd, cwd=ROOT, check=True)
    so = ROOT / "target" / profile / "libprimatlas_py.so"
    if not so.exists():
        sys.exit(f"missing extension library: {so}")
    tmp = pathlib.Path(tempfile.mkdtemp(prefix="primatlas_py_"))
    shutil.copy(so, tmp / "primatlas_py.so")
    sys.path.insert(0, str(tmp))
    import primatlas_py

    return primatlas_py


def main():
    release = "--release" in sys.argv[1:]
    pa = build_and_import(release)
    failures = 0

    def check(name, cond):
        nonlocal failures
        status = "ok" if cond else "FAIL"
        if not cond:
            failures += 1
        print(f"  {name}: {status}")

    print(f"primatlas_py {pa.__version__}")

    # Heisenberg group law: Y * X = X Y Z
    g = pa.HeisElem(0, 1, 0).mul(pa.HeisElem(1, 0, 0))
    check("heisenberg product", (g.x, g.y, g.z) == (1, 1, 1))
    check("heisenberg inverse", g.mul(g.inverse()) == pa.HeisElem(0, 0, 0))

    # Torsion classification of (v_theta, (1/2, 1/3))
    point = {
        "v": [{"coeffs": [["1", "1"]]}, {"coeffs": [["0", "1"], ["1", "1"]]}],
        "w": [{"a": "1/2", "b": "0"}, {"a": "1/3", "b": "0"}],
    }
    out = json.loads(pa.classify_sl2(json.dumps(point)))
    check("sl2 torsion class", out == {"kind": "Torsion", "m": "6", "t": "0"})

    # Diagonal coset classification and stabilizer
    a23 = [
        [{"coeffs": [["2", "1"]]}, {"coeffs": []}, {"coeffs": []}],
        [{"coeffs": []}, {"coeffs": [["3", "2"]]}, {"coeffs": []}],
        [{"coeffs": []}, {"coeffs": []}, {"coeffs": [["1", "3"]]}],
    ]
    out = json.loads(pa.classify_sl3(json.dumps(a23)))
    check("sl3 diagonal class", out["kind"] == "Q0")
    st = json.loads(pa.stabilizer(json.dumps(a23)))
    check("sl3 stabilizer tag", st["tag"] == "H3")

    # Quasi-orbit limit oracle
    check(
        "sl3 vanishing limit",
        pa.limit("sl3", '{"kind":"Q0Seq","s":"0","t":"0"}', '{"kind":"Zero"}'),
    )
    check(
        "sl3 corner limit",
        pa.limit(
            "sl3",
            '{"kind":"Q1Seq","r":"3","boundedAwayFromZero":true}',
            '{"kind":"Q0","s":{"coeffs":[["5","1"]]},"t":{"coeffs":[["3","1"]]}}',
        ),
    )

    # Odd-m witness identity
    w = json.loads(pa.modd_witness("1", "1", 3))
    check("modd witness", w["gamma"] == [[3, 1], [2, 1]] and w["product"][3] == "1/3")

    # Diagonal approach residuals shrink
    r10 = pa.diag_witness_residual("i", "1/100", "1/10", "1", "1")
    r1k = pa.diag_witness_residual("i", "1/1000000", "1/1000", "1", "1")
    check("witness residual decreases", r1k < r10 < 0.3)

    # Irreducible representation of the order-2 point
    mats = pa.heis_rep("1/2", "0", "0")
    mat_x = mats[0]
    check("clock-shift rep", abs(mat_x[0][1][0] - 1.0) < 1e-12 and abs(mat_x[0][0][0]) < 1e-12)

    # Restriction hull size equals the central order
    hull = json.loads(pa.res_hull("1/4", "0", "1/2", "gamma1"))
    check("restriction hull size", len(hull["Finite"]) == 4)

    # Torsion transitivity
    check("torsion transitivity", all(pa.transitivity(n) for n in range(1, 13)))

    # Folner boundary ratio
    check("folner ratio", pa.folner_ratio_h3(2, 1, 0, 0) == "2/5")

    # Primitive spectrum convergence oracle
    check(
        "prim interior convergence",
        pa.limit(
            "prim",
            '{"kind":"Strat1Seq","r":"2","x":{"kind":"Const","m":"3","t":"1/2"}}',
            '{"stratum":"s1","r":{"coeffs":[["2","1"]]},"x":{"kind":"Pt","m":"3","t":"1/2"}}',
        ),
    )
    check(
        "prim t0",
        pa.t0_check(
            '{"stratum":"s1","r":{"coeffs":[["1","1"]]},"x":{"kind":"Pt","m":"1","t":"0"}}',
            '{"stratum":"s2","r":{"coeffs":[["1","1"]]},"x":{"kind":"Pt","m":"1","t":"0"}}',
        ),
    )

    if failures:
        sys.exit(f"{failures} smoke check(s) failed")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
