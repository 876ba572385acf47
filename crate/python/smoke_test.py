"""Smoke test for the eflab extension module.

Build and install first:

    pip install --no-build-isolation -e crates/python

then run `python python/smoke_test.py` (or `pytest python/smoke_test.py`).
"""

import json
import math

import eflab


def test_algebra_and_elements():
    m2 = eflab.Algebra("M2")
    assert m2.blocks == [2] and m2.weights == [1.0] and m2.dim == 4
    one = m2.identity()
    x = m2.parse("E12 + E21")
    y = m2.parse("diag(1,-1)")
    comm = x * y - y * x
    # [E12 + E21, diag(1,-1)] = 2(E21 - E12), normalized trace.
    assert math.isclose(comm.two_norm(), 2.0, abs_tol=1e-14)
    assert one.inner(one) == 1
    u = m2.haar_unitary(7)
    assert u.unitary_defect() < 1e-12
    assert (2 * u).op_norm() > 1.99
    a = m2.element([[[0.5, 0.25j], [0.0, -0.3]]])
    w1, w2 = eflab.avg_two_unitaries(a)
    assert ((w1 + w2) * 0.5).distance(a) < 1e-10
    v, p = eflab.polar(a)
    assert v.mul(p).distance(a) < 1e-12
    assert eflab.nearest_unitary(a).distance(v) == 0.0


def test_formulas():
    f = eflab.Formula("sup x:C1. inf y:U. n2(x.y - y.x)")
    assert f.op().op() == f
    assert f.u().quantifier_count == 2
    inner, free = f.strip(1)
    assert free == ["x"] and inner.quantifier_count == 1
    r = eflab.evaluate(eflab.Formula("sup x:U. n2(x - one)"), eflab.Algebra("M2"), seed=3, restarts=4)
    assert r["schema_version"] == 1
    assert 1.9 < r["value"] <= 2.0 + 1e-12


def test_games():
    t = eflab.play("unitary", "M4", "M4", 6, 1e-9, seed=1, p2="copy")
    assert t.winner == "player2" and all(v == 0.0 for _, v, _ in t.margins)
    back = eflab.Transcript.from_json(t.to_json())
    assert back.readjudicate().to_json() == t.to_json()
    s = eflab.play("unitary", "M2", "C", 2, 0.5, seed=2, p1="scripted:M:one; M:diag(1,-1)", p2="gram-match")
    assert s.winner == "player1" and s.margins[0][1] == 1.0
    assert json.loads(s.to_json())["verdict"]["forfeit"] is False


def test_net_and_verify():
    m2 = eflab.Algebra("M2")
    out = eflab.build_net([m2.identity(), m2.parse("diag(1,-1)")], 0.5, seed=1, samples=2000)
    assert out["cover"]["passed"] and out["net"]["dim"] == 2
    r = eflab.run_verify("z4-identity", seed=7, trials=50, battery=["M2", "C+C:1/3,2/3"])
    assert r["pass"] and r["trials"] == 100


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok {name}")
