import math
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _sim import equal_up_to_phase, unitary
from qforensics import qasm
from qforensics.backend import falcon_map, synth_backend
from qforensics.circuit import Circuit, CircuitError, GateOp
from qforensics.circuit_gen import GenSpec, random_circuit
from qforensics.qasm import QasmArityError, QasmSyntaxError, QasmUnsupportedError, parse, serialize
from qforensics.transpiler import transpile

HEAD = 'OPENQASM 2.0;\ninclude "qelib1.inc";\n'


def test_minimal_program():
    c = parse(HEAD + "qreg q[2];\ncx q[0],q[1];\n")
    assert c.num_qubits == 2
    assert c.ops == (GateOp("cx", (), (0, 1)),)


def test_pi_expressions():
    c = parse(HEAD + "qreg q[4];\nrz(pi/2) q[3];\nrz(-pi) q[0];\nrz(3*pi/4) q[1];\nrz(2*pi) q[2];\nrz(0.25) q[2];\n")
    params = [op.params[0] for op in c.ops]
    assert params == [math.pi / 2, -math.pi, 3 * math.pi / 4, 2 * math.pi, 0.25]
    assert c.ops[0].qubits == (3,)


def test_registers_flatten_in_declaration_order():
    c = parse(HEAD + "qreg a[2];\nqreg b[3];\ncreg c[2];\ncx a[1],b[0];\nmeasure b[2] -> c[1];\n")
    assert c.num_qubits == 5 and c.num_clbits == 2
    assert c.ops[0].qubits == (1, 2)
    assert c.ops[1] == GateOp("measure", (), (4,), (1,))


def test_register_broadcast():
    c = parse(HEAD + "qreg q[3];\ncreg c[3];\nh q;\nmeasure q -> c;\n")
    assert [op.qubits for op in c.ops] == [(0,), (1,), (2,), (0,), (1,), (2,)]
    assert [op.clbits for op in c.ops[3:]] == [(0,), (1,), (2,)]


def test_barrier_round_trip():
    c = Circuit(3, (GateOp("barrier", (), (0, 1, 2)),))
    text = serialize(c)
    assert text.count("barrier") == 1
    assert "barrier q[0],q[1],q[2];" in text
    assert parse(text) == c


def test_empty_circuit():
    text = serialize(Circuit(1))
    assert "qreg q[1];" in text
    assert parse(text) == Circuit(1)
    assert parse(text).ops == ()


def test_comments_and_whitespace():
    c = parse("// leading\nOPENQASM 2.0;  include \"qelib1.inc\";\nqreg q[2]; // two\n  x q[0]; sx q[1];\n")
    assert [op.name for op in c.ops] == ["x", "sx"]


@pytest.mark.parametrize("body,exc,where", [
    ("qreg q[2];\ncx q[0] q[1];\n", QasmSyntaxError, (4, 9)),
    ("qreg q[2];\nfoo q[0];\n", QasmUnsupportedError, (4, 1)),
    ("qreg q[2];\ncx q[0];\n", QasmArityError, (4, 1)),
    ("qreg q[2];\nrz q[0];\n", QasmArityError, (4, 1)),
    ("qreg q[2];\nx(0.5) q[0];\n", QasmArityError, (4, 1)),
    ("qreg q[2];\ncx q[0],q[0];\n", QasmArityError, (4, 1)),
    ("qreg q[2];\nx q[2];\n", QasmSyntaxError, (4, 5)),
    ("qreg q[2];\nx r[0];\n", QasmSyntaxError, (4, 3)),
])
def test_errors_carry_position(body, exc, where):
    with pytest.raises(exc) as info:
        parse(HEAD + body)
    assert (info.value.line, info.value.col) == where
    assert f"line {where[0]}, column {where[1]}" in str(info.value)


@pytest.mark.parametrize("src,construct", [
    ("gate foo a { x a; }\n", "gate"),
    ("opaque foo a;\n", "opaque"),
    ("qreg q[1];\ncreg c[1];\nif(c==1) x q[0];\n", "if"),
    ("qreg q[1];\nreset q[0];\n", "reset"),
    ("qreg q[2];\nCX q[0],q[1];\n", "CX"),
    ("qreg q[1];\nrz(pi+1) q[0];\n", "+"),
    ("qreg q[1];\nrz((pi)) q[0];\n", "("),
])
def test_unsupported_constructs(src, construct):
    with pytest.raises(QasmUnsupportedError, match=re.escape(construct)):
        parse(HEAD + src)


def test_openqasm3_rejected():
    with pytest.raises(QasmUnsupportedError):
        parse("OPENQASM 3.0;\nqubit[2] q;\n")


def test_header_required():
    with pytest.raises(QasmSyntaxError):
        parse("qreg q[2];\n")


def test_other_includes_rejected():
    with pytest.raises(QasmUnsupportedError, match="stdgates"):
        parse('OPENQASM 2.0;\ninclude "stdgates.inc";\nqreg q[1];\n')


@pytest.mark.parametrize("gate,params", [
    ("u1", (0.7,)), ("u2", (0.3, -1.1)), ("u3", (0.4, 1.3, -0.8)), ("u3", (math.pi, 0.0, math.pi)),
])
def test_u_gates_rewrite_exactly(gate, params):
    args = ",".join(repr(p) for p in params)
    c = parse(HEAD + f"qreg q[1];\n{gate}({args}) q[0];\n")
    assert {op.name for op in c.ops} <= {"rz", "sx"}
    theta, phi, lam = {"u1": (0.0, 0.0, params[0]), "u2": (math.pi / 2, *params), "u3": params}[gate]
    ref = np.array([
        [math.cos(theta / 2), -np.exp(1j * lam) * math.sin(theta / 2)],
        [np.exp(1j * phi) * math.sin(theta / 2), np.exp(1j * (phi + lam)) * math.cos(theta / 2)],
    ])
    assert equal_up_to_phase(unitary(c), ref)


def test_physical_marker():
    c = Circuit(3, (GateOp("cx", (), (0, 2)),), is_physical=True)
    text = serialize(c)
    assert qasm.PHYSICAL_MARKER in text
    assert parse(text).is_physical
    assert not parse(serialize(Circuit(3))).is_physical
    assert parse(serialize(Circuit(3)), physical=True).is_physical


def test_circuit_invariants():
    with pytest.raises(CircuitError):
        Circuit(2, (GateOp("x", (), (2,)),))
    with pytest.raises(CircuitError):
        GateOp("cx", (), (1, 1))
    with pytest.raises(CircuitError):
        GateOp("rz", (), (0,))


def test_file_round_trip(tmp_path):
    c = random_circuit(GenSpec(6, 8, seed=2))
    path = tmp_path / "c.qasm"
    qasm.dump(c, path)
    assert qasm.load(path) == c


_ops_1q = st.sampled_from(["id", "x", "sx", "h"])
_angles = st.floats(-10, 10, allow_nan=False) | st.sampled_from([math.pi, -math.pi / 3, 1e-17, 5e-324])


@st.composite
def circuits(draw):
    n = draw(st.integers(1, 6))
    ops = []
    for _ in range(draw(st.integers(0, 25))):
        kind = draw(st.integers(0, 4))
        if kind == 0 or n == 1:
            ops.append(GateOp(draw(_ops_1q), (), (draw(st.integers(0, n - 1)),)))
        elif kind == 1:
            ops.append(GateOp("rz", (draw(_angles),), (draw(st.integers(0, n - 1)),)))
        elif kind == 2:
            a, b = draw(st.lists(st.integers(0, n - 1), min_size=2, max_size=2, unique=True))
            ops.append(GateOp(draw(st.sampled_from(["cx", "ecr", "swap"])), (), (a, b)))
        elif kind == 3:
            qs = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
            ops.append(GateOp("barrier", (), tuple(qs)))
        else:
            q = draw(st.integers(0, n - 1))
            ops.append(GateOp("measure", (), (q,), (q,)))
    return Circuit(n, tuple(ops), num_clbits=n, is_physical=draw(st.booleans()))


@settings(max_examples=300, deadline=None)
@given(circuits())
def test_round_trip_property(c):
    assert parse(serialize(c)) == c


def test_round_trip_transpiled():
    backend = synth_backend(falcon_map(), 1)
    c = random_circuit(GenSpec(20, 10, seed=3))
    t = transpile(c, backend, trials=2, seed=0)
    assert t.circuit.is_physical
    assert parse(serialize(t.circuit)) == t.circuit
