"""Seeded random layered circuits used as the forensic workload."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import qasm
from .circuit import SINGLE_QUBIT_GATES, TWO_QUBIT_GATES, Circuit, GateOp

DEFAULT_POOL = frozenset({"h", "rz", "sx", "x", "cx"})
DEFAULT_DEPTH = 40
DEFAULT_TWO_QUBIT_FRACTION = 0.5

# from this depth on, qubits left without a two-qubit gate are paired in the last layer
COVERAGE_MIN_DEPTH = 10

_PARAM_GATES = {"rz"}


@dataclass(frozen=True)
class GenSpec:
    num_qubits: int
    depth: int = DEFAULT_DEPTH
    seed: int = 0
    two_qubit_fraction: float = DEFAULT_TWO_QUBIT_FRACTION
    gate_pool: frozenset[str] = field(default=DEFAULT_POOL)

    def __post_init__(self):
        object.__setattr__(self, "gate_pool", frozenset(self.gate_pool))
        if self.num_qubits < 2:
            raise ValueError(f"random circuits need at least 2 qubits, got {self.num_qubits}")
        if self.depth < 1:
            raise ValueError(f"depth must be positive, got {self.depth}")
        if not 0.0 < self.two_qubit_fraction <= 1.0:
            raise ValueError(f"two_qubit_fraction must lie in (0, 1], got {self.two_qubit_fraction}")
        unknown = self.gate_pool - SINGLE_QUBIT_GATES - TWO_QUBIT_GATES
        if unknown:
            raise ValueError(f"unsupported gates in pool: {sorted(unknown)}")
        if not self.gate_pool & SINGLE_QUBIT_GATES or not self.gate_pool & TWO_QUBIT_GATES:
            raise ValueError("gate pool needs at least one single-qubit and one two-qubit gate")

    def with_seed(self, seed: int) -> "GenSpec":
        return GenSpec(self.num_qubits, self.depth, seed, self.two_qubit_fraction, self.gate_pool)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gate_pool"] = sorted(self.gate_pool)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GenSpec":
        return cls(int(d["num_qubits"]), int(d["depth"]), int(d["seed"]),
                   float(d["two_qubit_fraction"]), frozenset(d["gate_pool"]))


def expected_engaged_fraction(num_qubits: int, two_qubit_fraction: float) -> float:
    """Expected share of a layer's qubits that land in a two-qubit gate.

    Qubits are visited in shuffled order; each visit with at least two
    qubits left opens a pair with probability ``two_qubit_fraction``.
    """
    f = two_qubit_fraction
    e = [0.0, 0.0]
    for n in range(2, num_qubits + 1):
        e.append(f * (2 + e[n - 2]) + (1 - f) * e[n - 1])
    return e[num_qubits] / num_qubits


def _one_qubit(name: str, q: int, rng) -> GateOp:
    params = (float(rng.uniform(0.0, 2 * math.pi)),) if name in _PARAM_GATES else ()
    return GateOp(name, params, (q,))


def random_circuit(spec: GenSpec) -> Circuit:
    """Layered random circuit: ``spec.depth`` layers, each a disjoint cover of all qubits."""
    rng = np.random.default_rng(spec.seed)
    one_q = sorted(spec.gate_pool & SINGLE_QUBIT_GATES)
    two_q = sorted(spec.gate_pool & TWO_QUBIT_GATES)
    n = spec.num_qubits
    ops: list[GateOp] = []
    touched = np.zeros(n, dtype=bool)
    for layer in range(spec.depth):
        order = [int(q) for q in rng.permutation(n)]
        if layer == spec.depth - 1 and spec.depth >= COVERAGE_MIN_DEPTH and not touched.all():
            lonely = [q for q in order if not touched[q]]
            rest = [q for q in order if touched[q]]
            if len(lonely) % 2:
                lonely.append(rest.pop(0))
            pairs = [lonely[i:i + 2] for i in range(0, len(lonely), 2)]
            for a, b in pairs:
                ops.append(GateOp(two_q[rng.integers(len(two_q))], (), (a, b)))
            for q in rest:
                ops.append(_one_qubit(one_q[rng.integers(len(one_q))], q, rng))
            touched[:] = True
            continue
        # an odd register with nothing touched yet needs one pair now so the
        # final repair layer has a touched partner for its odd qubit
        force = (layer == spec.depth - 2 and spec.depth >= COVERAGE_MIN_DEPTH
                 and n % 2 == 1 and not touched.any())
        i = 0
        while i < n:
            if n - i >= 2 and (force or rng.random() < spec.two_qubit_fraction):
                force = False
                a, b = order[i], order[i + 1]
                ops.append(GateOp(two_q[rng.integers(len(two_q))], (), (a, b)))
                touched[a] = touched[b] = True
                i += 2
            else:
                ops.append(_one_qubit(one_q[rng.integers(len(one_q))], order[i], rng))
                i += 1
    return Circuit(n, tuple(ops))


def generate_corpus(spec: GenSpec, count: int) -> list[Circuit]:
    """``count`` circuits seeded ``spec.seed``, ``spec.seed + 1``, ..."""
    if count < 1:
        raise ValueError(f"corpus size must be at least 1, got {count}")
    return [random_circuit(spec.with_seed(spec.seed + i)) for i in range(count)]


def corpus_filename(seed: int) -> str:
    return f"circuit_s{seed}.qasm"


def write_corpus(spec: GenSpec, count: int, directory) -> dict:
    """Write the corpus as ``.qasm`` files plus ``manifest.json``; returns the manifest."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for i, circuit in enumerate(generate_corpus(spec, count)):
        name = corpus_filename(spec.seed + i)
        qasm.dump(circuit, os.path.join(directory, name))
        files.append(name)
    manifest = {"spec": spec.to_dict(), "count": count, "files": files}
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest
