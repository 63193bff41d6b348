"""
Devices: coupling maps and calibration tables
=============================================

A backend is a coupling graph plus per-gate error rates. This walk-through
builds the shipped heavy-hex maps, draws a synthetic calibration and looks
at the graph utilities the router relies on.
"""

import numpy as np

from qforensics.backend import (
    distance_matrix,
    eagle_map,
    falcon_map,
    heavy_hex_map,
    shell_order,
    synth_backend,
    tiered_calibration,
)

# The two checked-in maps. Edges are undirected (u < v) pairs.
eagle = eagle_map()
falcon = falcon_map()
print(f"eagle:  {eagle.num_qubits} qubits, {len(eagle.edges)} edges")
print(f"falcon: {falcon.num_qubits} qubits, {len(falcon.edges)} edges")

# The parametric generator grows the same lattice family; d=7 reproduces
# the Eagle edge list exactly.
for d in (3, 5, 7):
    cmap = heavy_hex_map(d)
    print(f"heavy_hex_map({d}): {cmap.num_qubits} qubits, {len(cmap.edges)} edges,"
          f" max degree {max(len(cmap.neighbors(q)) for q in range(cmap.num_qubits))}")
print("generator matches data file:", heavy_hex_map(7).edges == eagle.edges)

# Hop distances come from one BFS per source.
dist = distance_matrix(eagle)
print("eagle diameter:", int(dist.max()))

# Synthetic calibration: link errors log-uniform in [0.003, 0.03] and much
# smaller single-qubit errors. The seed fixes every number.
backend = synth_backend(eagle, seed=0, log_uniform=True)
errs = np.array(list(backend.calibration.two_qubit_error.values()))
print(f"link errors: min {errs.min():.4f}, median {np.median(errs):.4f}, max {errs.max():.4f}")
best = min(backend.calibration.two_qubit_error, key=backend.calibration.two_qubit_error.get)
print("best link:", best, backend.calibration.two_qubit_error[best])

# A tiered calibration puts links into a few discrete error classes. With
# shell_order the best tier is a connected patch around one qubit.
order = shell_order(falcon, 13)
tiers = tiered_calibration(falcon, [0.002, 0.02, 0.2], [10, 9, 9], seed=0, order=order)
good = sorted(e for e, x in tiers.two_qubit_error.items() if x == 0.002)
print("best-tier links around qubit 13:", good)
