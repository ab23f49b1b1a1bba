"""Smoke test for the Python bindings.

Build and install first:
    cd crates/python && maturin develop --release
"""

import json

import markov_codes as mc

A1 = mc.Matrix([[1, 1], [1, 0]])
A2 = mc.Matrix([[0, 1, 0], [0, 0, 1], [1, 1, 0]])
F2 = mc.Matrix.full(2)

# invalid matrices raise ValueError(reason, message)
try:
    mc.Matrix([[1, 0], [0, 1]])
except ValueError as e:
    assert e.args[0] == "is_permutation", e.args
else:
    raise AssertionError("identity accepted")

assert A1.words(3) == [[1, 1, 1], [1, 1, 2], [1, 2, 1], [2, 1, 1], [2, 1, 2]]
assert A1.periodic_point_count(1) == 1
assert mc.Matrix.from_json(A1.to_json()) == A1

c1 = mc.MarkovCode(A1, [[1], [2, 1]])
assert (c1.k0, c1.min_l) == (2, 1)
assert c1.coded_matrix() == F2

x = mc.Point([2], [1])
y = c1.encode(x)
assert str(y) == "2(1)^∞", str(y)
assert c1.decode(y) == x
assert c1.decode(mc.Point([], [1, 2])) == mc.Point([], [1, 2, 1])
assert c1.stream_step([1, 2, 1]) == ([1, 2], [])

try:
    mc.MarkovCode(F2, [[1], [1, 2], [2, 2]])
except ValueError as e:
    assert e.args[0] == "prefix", e.args
else:
    raise AssertionError("non-prefix code accepted")

c2 = mc.MarkovCode(A2, [[1, 2], [2, 3], [3, 2, 3], [3, 1, 2]])
assert c2.coded_matrix().rows() == [[0, 0, 1, 1], [1, 1, 0, 0], [1, 1, 0, 0], [0, 0, 1, 1]]
assert c2.coded_matrix().amalgamate().is_isomorphic(F2)

w = c1.coe_witness()
checks = w.verify(A1.sample_points(20))
assert all(passed for _, passed, _, _ in checks), checks
w2 = mc.CoeWitness.from_json(w.to_json())
assert w2.l == w.l

conj = mc.conjugacy(c2.coded_matrix(), F2)
assert conj is not None
for p in c2.coded_matrix().sample_points(10):
    assert conj.backward(conj.forward(p)) == p

assert mc.conjugacy(F2, mc.Matrix.full(3), wmax=1) is None

cert = mc.elementary_equivalence(A1, F2)
assert cert is not None and len(cert) == 1
assert all(passed for _, passed, _, _ in cert.verify(samples=30))
assert all(passed for _, passed, _, _ in cert.reversed().verify(samples=30))
back = mc.elementary_equivalence(F2, A2)
chain = cert.chain(back)
assert len(chain) == 2
assert all(passed for _, passed, _, _ in chain.verify(samples=30))
json.loads(chain.to_json())

print("smoke test passed")
