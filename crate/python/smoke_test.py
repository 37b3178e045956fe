"""Smoke test for the pyhitchin extension module.

Build and install first, e.g. `maturin develop --release -m crates/python/Cargo.toml`.
"""

import json
import math
import os
import tempfile

import pyhitchin as ph


def check(cond, msg):
    if not cond:
        raise SystemExit(f"FAIL: {msg}")
    print(f"ok  {msg}")


def main():
    r = ph.solve(2, 2)
    d = r.data
    h = 1 / math.sqrt(2)
    check(all(abs(v - h) < 1e-12 for row in d.F + d.G for v in row), "solve(2,2) gives 1/sqrt(2)")
    check(abs(d.b0 - 1) < 1e-15 and abs(d.a0 - 1) < 1e-12, "a0 = b0 = 1")
    check(r.scaled_residual <= 1e-12, "converged residual")

    cf = ph.InstantonData.closed_form(2, 4)
    rep = cf.residual_report()
    check(rep.scaled_max < 1e-14, "closed form (2,4) solves the system")
    check(cf.unknown_count() == 2 * 2 * 4 - 2 - 4 + 2, "unknown count")
    check(cf.equation_count() == 2 * 2 * 4 - 2 - 4 + 1, "equation count")

    s = cf.scaled(2.0).residual_report()
    check(s.max_abs <= 4 * rep.max_abs + 1e-14, "quadratic scaling")

    adhm = cf.adhm()
    d1, d2 = adhm.donaldson_residuals()
    check(adhm.dim == 8 and max(d1, d2) < 1e-13, "Donaldson residuals vanish")
    check(adhm.check_pattern(2, 4), "equivariant pattern")
    passed, ratio = adhm.genericity()
    check(passed and ratio > 0, "genericity")

    bad = ph.InstantonData(2, 2, [[1.0], [2.0]], [[0.5, 3.0]], 1.0, 1.5)
    check(bad.residual_report().max_abs > 1e-3, "non-solution has residual")
    check(bad.correspondence_error() < 1e-14, "ADHM and lattice residuals correspond")

    const = ph.LatticeField.constant(3, 3, 2, 1.5, 0.5 + 0.25j)
    certs = const.integrability_certificate([0, 1, 1j, -1j, 2 + 3j])
    check(all(c <= 1e-12 for _, c, _ in certs), "constant field is integrable")
    rnd = ph.LatticeField.random(3, 3, 2, seed=7)
    certs = rnd.integrability_certificate([0, 1j])
    check(all(c > 1e-3 and c <= b * (1 + 1e-12) for _, c, b in certs), "random field is not")

    rows, order = ph.holomorphic_convergence("exp", [16, 32, 64, 128])
    check(len(rows) == 4 and order >= 0.9, f"holomorphic order {order:.3f}")
    rows, order = ph.nahm_convergence([8, 16, 32])
    check(abs(rows[-1][2] - math.pi / 2) < 5 / 32, f"Nahm central value {rows[-1][2]:.4f}")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "d.json")
        d.write(path)
        back = ph.InstantonData.read(path)
        check(back.F == d.F and back.G == d.G and back.a0 == d.a0, "JSON round trip")
        check(json.load(open(path))["n1"] == 2, "JSON layout")

    try:
        ph.solve(4, 4, max_iterations=1)
    except RuntimeError as e:
        check("did not converge" in str(e), "non-convergence raises")
    else:
        raise SystemExit("FAIL: expected RuntimeError")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
