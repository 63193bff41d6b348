"""Gate and circuit containers shared by every stage of the toolkit."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

# name -> (qubit arity, parameter count); barrier arity is variable
GATE_SPECS: dict[str, tuple[int | None, int]] = {
    "id": (1, 0),
    "x": (1, 0),
    "sx": (1, 0),
    "rz": (1, 1),
    "h": (1, 0),
    "cx": (2, 0),
    "ecr": (2, 0),
    "swap": (2, 0),
    "measure": (1, 0),
    "barrier": (None, 0),
}

TWO_QUBIT_GATES = frozenset(n for n, (a, _) in GATE_SPECS.items() if a == 2)
SINGLE_QUBIT_GATES = frozenset(
    n for n, (a, _) in GATE_SPECS.items() if a == 1 and n != "measure"
)
DIRECTIVES = frozenset({"barrier", "measure"})


class CircuitError(ValueError):
    """A gate or circuit violates its structural invariants."""


@dataclass(frozen=True, slots=True)
class GateOp:
    name: str
    params: tuple[float, ...] = ()
    qubits: tuple[int, ...] = ()
    clbits: tuple[int, ...] = ()

    def __post_init__(self):
        spec = GATE_SPECS.get(self.name)
        if spec is None:
            raise CircuitError(f"unsupported gate {self.name!r}")
        arity, nparams = spec
        if arity is None:
            if not self.qubits:
                raise CircuitError("barrier needs at least one qubit")
        elif len(self.qubits) != arity:
            raise CircuitError(
                f"{self.name} takes {arity} qubit(s), got {len(self.qubits)}"
            )
        if len(self.params) != nparams:
            raise CircuitError(
                f"{self.name} takes {nparams} parameter(s), got {len(self.params)}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise CircuitError(f"{self.name} has repeated qubit operands {self.qubits}")
        if self.name == "measure" and len(self.clbits) != 1:
            raise CircuitError("measure needs exactly one classical target")
        if self.name != "measure" and self.clbits:
            raise CircuitError(f"{self.name} takes no classical operands")

    @property
    def is_two_qubit(self) -> bool:
        return self.name in TWO_QUBIT_GATES


@dataclass(frozen=True)
class Circuit:
    """An ordered gate list over a flat qubit index space.

    ``is_physical`` marks circuits whose indices are hardware qubits, which
    is the case for anything produced by the transpiler.
    """

    num_qubits: int
    ops: tuple[GateOp, ...] = ()
    num_clbits: int = 0
    is_physical: bool = False
    _counts: Counter = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.ops, tuple):
            object.__setattr__(self, "ops", tuple(self.ops))
        if self.num_qubits < 1:
            raise CircuitError("a circuit needs at least one qubit")
        if self.num_clbits < 0:
            raise CircuitError("negative classical register width")
        n, m = self.num_qubits, self.num_clbits
        for i, op in enumerate(self.ops):
            for q in op.qubits:
                if not 0 <= q < n:
                    raise CircuitError(f"op {i} ({op.name}) uses qubit {q} outside [0, {n})")
            for c in op.clbits:
                if not 0 <= c < m:
                    raise CircuitError(f"op {i} ({op.name}) uses clbit {c} outside [0, {m})")

    def __len__(self):
        return len(self.ops)

    def count_ops(self) -> Counter:
        if self._counts is None:
            object.__setattr__(self, "_counts", Counter(op.name for op in self.ops))
        return self._counts

    def two_qubit_ops(self) -> list[GateOp]:
        return [op for op in self.ops if op.is_two_qubit]

    def num_two_qubit_gates(self) -> int:
        return sum(1 for op in self.ops if op.is_two_qubit)

    def depth(self) -> int:
        """Longest path in layers; barriers synchronise their qubits without adding a layer."""
        level = [0] * self.num_qubits
        for op in self.ops:
            top = max(level[q] for q in op.qubits)
            if op.name != "barrier":
                top += 1
            for q in op.qubits:
                level[q] = top
        return max(level, default=0)
