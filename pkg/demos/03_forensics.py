"""
Recovering link quality from transpiled circuits
================================================

Someone who only sees the transpiled circuits can still learn which links
the compiler trusted: fidelity-aware compilation keeps returning to the
good links. Counting link usage across a corpus and ranking the counts
recovers much of the device's error ranking.

Pass an output directory to keep every artifact (corpus, transpiled QASM,
rankings, report, histogram and a manifest that reruns the experiment).
"""

import sys

from qforensics.backend import falcon_map, synth_backend
from qforensics.circuit_gen import GenSpec
from qforensics.experiment import run_experiment

out_dir = sys.argv[1] if len(sys.argv) > 1 else None
backend = synth_backend(falcon_map(), seed=3, log_uniform=True)

# 30 circuits of 6 qubits each, best of 20 layouts per circuit, 4 bins.
# Narrow circuits leave the layout search room to avoid bad links.
result = run_experiment(backend, GenSpec(6, 10, seed=7), 30, trials=20, num_bins=4, seed=0,
                        out_dir=out_dir)

freqs = result.frequencies.counts
err = backend.calibration.two_qubit_error
print(f"{'link':>8} {'count':>6} {'error':>7} {'freq bin':>9} {'true bin':>9}")
for lk in sorted(freqs, key=lambda e: -freqs[e])[:10]:
    print(f"{str(lk):>8} {freqs[lk]:>6} {err[lk]:>7.4f} {result.forensic.assignment[lk]:>9}"
          f" {result.truth.assignment[lk]:>9}")

# The bin-difference histogram summarizes agreement: diff 0 means the link
# landed in the same quality bin as its calibration says.
print("histogram of |bin difference|:", dict(result.report.histogram))
for k in (0, 1, 2):
    print(f"share within {k} bins: {result.report.fraction_within[k]:.2f}")
print(f"spearman(frequency, -error) = {result.spearman:.3f}")
print(f"coverage: {result.coverage:.0%} of links used at least once")
if out_dir:
    print("artifacts written to", out_dir)
