"""
Transpiling a circuit onto a noisy device
=========================================

The transpiler picks an initial layout, inserts SWAPs so every two-qubit
gate lands on a coupled pair, lowers everything into the backend basis
(ECR, RZ, SX, X) and keeps the candidate with the best estimated fidelity.
"""

from qforensics import qasm
from qforensics.backend import falcon_map, synth_backend
from qforensics.circuit_gen import GenSpec, random_circuit
from qforensics.forensics import extract_topology
from qforensics.transpiler import coupling_violations, fidelity, route, transpile

backend = synth_backend(falcon_map(), seed=4)

# A seeded random circuit: layers of disjoint cx pairs and single-qubit gates.
circuit = random_circuit(GenSpec(num_qubits=8, depth=12, seed=1))
print(f"logical circuit: {circuit.num_qubits} qubits, {len(circuit.ops)} ops,"
      f" {circuit.num_two_qubit_gates()} two-qubit gates")

# Best of 20 layout trials.
result = transpile(circuit, backend, trials=20, seed=0)
print("initial layout:", result.initial_layout.logical_to_physical)
print("final layout:  ", result.final_layout.logical_to_physical)
print(f"swaps {result.swap_count}, depth {result.depth}, ECR count {result.two_qubit_count}")
print(f"estimated fidelity {result.fidelity.value:.4f}")
print("coupling violations:", coupling_violations(result.circuit, backend))

# Routing from the trivial layout with the noise terms switched off shows
# what the calibration-aware search buys.
from qforensics.transpiler import Layout

plain = route(circuit, backend, Layout.trivial(8), noise_weight=0.0, distance_weight=0.0)
print(f"trivial layout, distance-only routing: fidelity {plain.fidelity.value:.4f},"
      f" swaps {plain.swap_count}")

# The physical circuit serializes to OpenQASM 2.0 and parses back unchanged.
text = qasm.serialize(result.circuit)
print("\n".join(text.splitlines()[:8]))
print("...")
assert qasm.parse(text) == result.circuit

# Which links did this one circuit use?
used = extract_topology(result.circuit)
print(f"{len(used)} of {len(backend.coupling.edges)} links used:", sorted(used))
err = backend.calibration.two_qubit_error
print(f"mean error of used links {sum(err[e] for e in used) / len(used):.4f},"
      f" device mean {sum(err.values()) / len(err):.4f}")
