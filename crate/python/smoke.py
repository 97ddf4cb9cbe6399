"""Smoke test for the pyinterfero extension module.

Build and install with `maturin develop -m crates/python/Cargo.toml`
(or `pip install crates/python`), then run `python python/smoke.py`.
"""

import math

import pyinterfero as pi


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


bs = pi.BeamSplitter.balanced()
assert close(bs.reflectance, 0.5) and close(bs.transmittance, 0.5)
m = bs.matrix()
assert close(abs(m[0][0]) ** 2 + abs(m[1][0]) ** 2, 1.0)

unbalanced = pi.BeamSplitter.from_reflectance(0.36)
d1, d2 = pi.closed_fractions(unbalanced, 0.0)
assert close(d1, 0.0784) and close(d2, 0.9216), (d1, d2)
r_mz, t_mz, _ = pi.mzi_closed_coeffs(unbalanced, 0.0, 0.0)
assert close(abs(r_mz) ** 2, d1) and close(abs(t_mz) ** 2, d2)

probs = pi.mzi_open_matrix(unbalanced).detection_probs("b")
assert close(probs["o1"], 0.64) and close(probs["o2"], 0.36), probs

try:
    pi.BeamSplitter(0.8, 0.8, math.pi / 2, 0.0)
except ValueError:
    pass
else:
    raise AssertionError("lossy splitter accepted")

circuit = pi.Circuit.builtin("mzi_closed.circ")
assert circuit.modes == ["b", "v"] and circuit.removable == ["BS_out"]
closed = circuit.elaborate(True, {"phi_e": 0.7})
builtin = pi.mzi_closed_matrix(bs, 0.7, 0.0)
for row_a, row_b in zip(closed.entries(), builtin.entries()):
    for a, b in zip(row_a, row_b):
        assert abs(a - b) < 1e-12
assert closed.unitarity_residual() < 1e-12

try:
    pi.Circuit.parse("modes b v; bs X balanced b q -> s f; detect D1 s; detect D2 f;")
except ValueError as e:
    assert "q" in str(e)
else:
    raise AssertionError("undeclared mode accepted")

spacelike, margin, t_choice, in_flight = pi.spacelike_check()
assert spacelike and in_flight and abs(margin - 12.02) <= 0.01 and t_choice == 120.0

counts, report = pi.sweep(circuit, policy="random", steps=9, trials=20000, seed=42)
assert len(counts) == 18
assert report["closed"]["visibility"] >= 0.99, report
assert report["open"]["flatness_p"] > 0.01, report
again, _ = pi.sweep(circuit, policy="random", steps=9, trials=20000, seed=42)
assert again == counts

print("pyinterfero smoke test passed")
