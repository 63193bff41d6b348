"""Rewrite rules from the toolkit gate set into a hardware basis.

Rules are exact up to global phase. Two-qubit templates, in circuit order:

* ``cx(a, b)``  -> ``x(a); ecr(a, b); rz(pi/2)(a); sx(b)``
* ``ecr(a, b)`` -> ``x(a); cx(a, b); rz(-pi/2)(a); sx(b); x(b)``
* ``swap(a, b)`` -> ``cx(a, b); cx(b, a); cx(a, b)``, each lowered further
"""

from __future__ import annotations

import math

from ..circuit import DIRECTIVES, TWO_QUBIT_GATES, Circuit, GateOp

HALF_PI = math.pi / 2


class UnknownGateError(ValueError):
    def __init__(self, gate: str, basis):
        self.gate = gate
        super().__init__(f"no rewrite rule takes gate {gate!r} into basis {sorted(basis)}")


def _two_qubit_target(basis) -> str:
    names = set(basis) & {"cx", "ecr"}
    if len(names) != 1:
        raise ValueError(f"basis needs exactly one of cx/ecr, got {sorted(basis)}")
    return names.pop()


def lower_single(op: GateOp, basis) -> list[GateOp]:
    name, q = op.name, op.qubits
    if name in basis or name in DIRECTIVES:
        return [op]
    if name == "id":
        return []
    if name == "h" and {"rz", "sx"} <= basis:
        return [GateOp("rz", (HALF_PI,), q), GateOp("sx", (), q), GateOp("rz", (HALF_PI,), q)]
    if name == "x" and "sx" in basis:
        return [GateOp("sx", (), q), GateOp("sx", (), q)]
    raise UnknownGateError(name, basis)


def _x(q, basis):
    if "x" in basis:
        return [GateOp("x", (), (q,))]
    return [GateOp("sx", (), (q,)), GateOp("sx", (), (q,))]


def lower_cx(a: int, b: int, basis) -> list[GateOp]:
    target = _two_qubit_target(basis)
    if target == "cx":
        return [GateOp("cx", (), (a, b))]
    return [
        *_x(a, basis),
        GateOp("ecr", (), (a, b)),
        GateOp("rz", (HALF_PI,), (a,)),
        GateOp("sx", (), (b,)),
    ]


def lower_ecr(a: int, b: int, basis) -> list[GateOp]:
    target = _two_qubit_target(basis)
    if target == "ecr":
        return [GateOp("ecr", (), (a, b))]
    return [
        *_x(a, basis),
        GateOp("cx", (), (a, b)),
        GateOp("rz", (-HALF_PI,), (a,)),
        GateOp("sx", (), (b,)),
        *_x(b, basis),
    ]


def lower_swap(a: int, b: int, basis) -> list[GateOp]:
    return lower_cx(a, b, basis) + lower_cx(b, a, basis) + lower_cx(a, b, basis)


def lower_two_qubit(name: str, a: int, b: int, basis) -> list[GateOp]:
    if name == "cx":
        return lower_cx(a, b, basis)
    if name == "ecr":
        return lower_ecr(a, b, basis)
    if name == "swap":
        return lower_swap(a, b, basis)
    raise UnknownGateError(name, basis)


def decompose(circuit: Circuit, basis, keep_two_qubit: bool = False) -> Circuit:
    """Rewrite every gate of ``circuit`` into ``basis`` (plus barrier/measure).

    With ``keep_two_qubit`` the two-qubit gates are left untouched, which is
    the form the router consumes. A circuit already in the basis is returned
    as is.
    """
    basis = frozenset(basis)
    if all(op.name in basis or op.name in DIRECTIVES or (keep_two_qubit and op.is_two_qubit)
           for op in circuit.ops):
        return circuit
    out: list[GateOp] = []
    for op in circuit.ops:
        if op.name in TWO_QUBIT_GATES:
            if keep_two_qubit or op.name in basis:
                out.append(op)
            else:
                out.extend(lower_two_qubit(op.name, *op.qubits, basis))
        else:
            out.extend(lower_single(op, basis))
    return Circuit(circuit.num_qubits, tuple(out), circuit.num_clbits, circuit.is_physical)
