"""Estimated success probability of a physical circuit under a calibration.

The score is the product of ``(1 - e)`` over every gate instance, where ``e``
is the calibrated error of that gate on its qubit or link. Barriers and
measurements contribute a factor of one. Sums run in log space so deep
circuits do not underflow.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

from ..backend import CalibrationTable, link
from ..circuit import DIRECTIVES, Circuit


class MissingCalibrationError(KeyError):
    def __init__(self, gate: str, operand):
        self.gate = gate
        self.operand = operand
        where = f"link {operand[0]}-{operand[1]}" if isinstance(operand, tuple) else f"qubit {operand}"
        super().__init__(f"no calibrated error for {gate} on {where}")

    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class FidelityScore:
    value: float
    log_value: float

    @classmethod
    def from_log(cls, log_value: float) -> "FidelityScore":
        return cls(math.exp(log_value), log_value)


def gate_error(gate: str, qubits, calibration: CalibrationTable) -> float:
    if len(qubits) == 2:
        lk = link(*qubits)
        try:
            return calibration.two_qubit_error[lk]
        except KeyError:
            raise MissingCalibrationError(gate, lk) from None
    q = qubits[0]
    try:
        return calibration.single_qubit_error[q][gate]
    except KeyError:
        raise MissingCalibrationError(gate, q) from None


def fidelity(circuit: Circuit, calibration: CalibrationTable) -> FidelityScore:
    """Per-instance product of ``(1 - e)``, accumulated as a sum of logs."""
    if not circuit.is_physical:
        raise ValueError("fidelity is defined for physical circuits only")
    terms = [
        math.log1p(-gate_error(op.name, op.qubits, calibration))
        for op in circuit.ops
        if op.name not in DIRECTIVES
    ]
    return FidelityScore.from_log(math.fsum(terms))


def gate_counts(circuit: Circuit) -> Counter:
    """Instances of each (gate, qubit-or-link) pair, links unordered."""
    counts = Counter()
    for op in circuit.ops:
        if op.name in DIRECTIVES:
            continue
        key = link(*op.qubits) if len(op.qubits) == 2 else op.qubits[0]
        counts[op.name, key] += 1
    return counts


def fidelity_grouped(circuit: Circuit, calibration: CalibrationTable) -> FidelityScore:
    """Same score in exponent form: the product over gate kinds of ``(1 - e_g) ** n_g``."""
    if not circuit.is_physical:
        raise ValueError("fidelity is defined for physical circuits only")
    terms = []
    for (gate, key), n in gate_counts(circuit).items():
        operand = key if isinstance(key, tuple) else (key,)
        terms.append(n * math.log1p(-gate_error(gate, operand, calibration)))
    return FidelityScore.from_log(math.fsum(terms))
