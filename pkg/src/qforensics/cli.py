"""Command-line entry point: ``qforensics <command> --out DIR ...``.

Exit codes: 0 success, 2 usage error, 3 bad input, 4 pipeline failure.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys

from . import qasm
from .backend import (
    TOPOLOGIES,
    Backend,
    BackendError,
    CouplingMap,
    heavy_hex_map,
    load_backend,
    load_calibration_csv,
    save_backend,
    synth_calibration,
)
from .circuit_gen import DEFAULT_DEPTH, DEFAULT_POOL, DEFAULT_TWO_QUBIT_FRACTION, GenSpec, write_corpus
from .experiment import (
    StageError,
    frequencies_csv,
    ranking_csv,
    read_frequencies_csv,
    read_ranking_csv,
    rerun_manifest,
    run_experiment,
    write_compare_outputs,
    write_json,
    write_text,
)
from .forensics import COUNTING_MODES, GATE_INSTANCES, ForensicsError, bin_rank, compare, link_frequencies, truth_ranking
from .schemas import BACKEND, SIDECAR, validate
from .transpiler import DEFAULT_CAP, DEFAULT_SLACK, DEFAULT_TRIALS, transpile, transpile_exhaustive

log = logging.getLogger("qforensics")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_PIPELINE = 0, 2, 3, 4


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _load_backend(path) -> Backend:
    try:
        return load_backend(path)
    except OSError as exc:
        raise InputError(f"cannot read backend {path}: {exc.strerror}") from None
    except BackendError as exc:
        raise InputError(f"{path}: {exc}") from None


def _qasm_inputs(path) -> list[str]:
    if os.path.isdir(path):
        files = sorted(glob.glob(os.path.join(path, "*.qasm")))
        if not files:
            raise InputError(f"no .qasm files in {path}")
        return files
    if not os.path.exists(path):
        raise InputError(f"no such file: {path}")
    return [path]


def _load_circuit(path, physical):
    try:
        return qasm.load(path, physical=physical)
    except qasm.QasmError as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_gen_backend(args) -> None:
    if not 0.0 <= args.low < args.high < 1.0:
        raise UsageError(f"need 0 <= --low < --high < 1, got low={args.low} high={args.high}")
    if args.topology == "heavy-hex":
        coupling = heavy_hex_map(args.distance)
    elif args.topology == "file":
        if not args.edges:
            raise UsageError("--topology file needs --edges")
        try:
            with open(args.edges, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read edge list {args.edges}: {exc}") from None
        edges = data["edges"] if isinstance(data, dict) else data
        coupling = CouplingMap.from_edges(edges, data.get("num_qubits") if isinstance(data, dict) else None)
    else:
        if args.edges:
            raise UsageError("--edges only applies to --topology file")
        coupling = TOPOLOGIES[args.topology]()
    if args.calibration_csv:
        cal = load_calibration_csv(args.calibration_csv, timestamp=args.calibration_csv)
    else:
        cal = synth_calibration(coupling, args.seed, args.low, args.high, log_uniform=args.log_uniform)
    name = args.name or f"{args.topology}-{coupling.num_qubits}q-s{args.seed}"
    backend = Backend(name, coupling, cal)
    path = _out(args, args.output)
    save_backend(backend, path)
    with open(path, encoding="utf-8") as fh:
        validate(json.load(fh), BACKEND)
    print(path)


def cmd_gen_circuits(args) -> None:
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    try:
        spec = GenSpec(args.qubits, args.depth, args.seed, args.fraction, frozenset(args.pool.split(",")))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    manifest = write_corpus(spec, args.count, args.out)
    print(f"wrote {len(manifest['files'])} circuits to {args.out}")


def cmd_transpile(args) -> None:
    if args.exhaustive and args.trials != DEFAULT_TRIALS:
        raise UsageError("--trials does not apply with --exhaustive")
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    backend = _load_backend(args.backend)
    for i, path in enumerate(_qasm_inputs(args.input)):
        circuit = _load_circuit(path, physical=False)
        try:
            if args.exhaustive:
                result = transpile_exhaustive(circuit, backend, slack=args.slack, cap=args.cap)
            else:
                result = transpile(circuit, backend, trials=args.trials,
                                   seed=args.seed + i * args.trials, slack=args.slack)
        except ValueError as exc:
            raise StageError("transpile", exc) from exc
        name = os.path.basename(path)
        qasm.dump(result.circuit, _out(args, name))
        write_json(_out(args, os.path.splitext(name)[0] + ".json"), result.sidecar(), SIDECAR)
        log.info("%s: %d swaps, fidelity %.3e", name, result.swap_count, result.fidelity.value)


def cmd_extract(args) -> None:
    reference = _load_backend(args.backend).coupling if args.backend else None
    corpus = [_load_circuit(p, physical=True) for p in _qasm_inputs(args.input)]
    try:
        freqs = link_frequencies(corpus, args.mode, reference=reference)
    except ForensicsError as exc:
        raise InputError(str(exc)) from None
    write_text(_out(args, "frequencies.csv"), frequencies_csv(freqs))
    seen = sum(1 for c in freqs.counts.values() if c)
    print(f"{seen} links used across {len(corpus)} circuits")


def cmd_rank(args) -> None:
    if bool(args.frequencies) == bool(args.backend):
        raise UsageError("give exactly one of --frequencies or --backend")
    try:
        if args.frequencies:
            freqs = read_frequencies_csv(args.frequencies)
            ranking = bin_rank(freqs.as_scores(), args.bins, "descending", "frequency")
            name = "ranking_forensic.csv"
        else:
            cal = _load_backend(args.backend).calibration
            ranking = truth_ranking(cal, args.bins)
            name = "ranking_truth.csv"
    except (OSError, KeyError, ValueError) as exc:
        raise InputError(str(exc)) from None
    write_text(_out(args, name), ranking_csv(ranking))
    print(_out(args, name))


def cmd_compare(args) -> None:
    try:
        forensic = read_ranking_csv(args.forensic, "frequency")
        truth = read_ranking_csv(args.truth, "calibration")
        if forensic.num_bins != truth.num_bins:
            raise ForensicsError(f"bin counts differ: {forensic.num_bins} vs {truth.num_bins}")
        report = compare(forensic, truth)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from None
    write_compare_outputs(report, args.out)
    print(json.dumps({k: v for k, v in report.fraction_within.items()}))


def cmd_run(args) -> None:
    if args.manifest:
        if not os.path.exists(args.manifest):
            raise InputError(f"no such manifest: {args.manifest}")
        try:
            result = rerun_manifest(args.manifest, args.out)
        except (ValueError, BackendError) as exc:
            if isinstance(exc, StageError):
                raise
            raise InputError(str(exc)) from None
    else:
        if not args.backend:
            raise UsageError("run needs --backend or --manifest")
        if args.circuits < 1:
            raise UsageError("--circuits must be at least 1")
        if args.trials < 1:
            raise UsageError("--trials must be at least 1")
        backend = _load_backend(args.backend)
        try:
            gen = GenSpec(args.qubits, args.depth, args.seed, args.fraction, frozenset(args.pool.split(",")))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        if args.bins < 1 or args.bins > len(backend.coupling.edges):
            raise UsageError(f"--bins must be in [1, {len(backend.coupling.edges)}]")
        result = run_experiment(backend, gen, args.circuits, trials=args.trials, num_bins=args.bins,
                                mode=args.mode, slack=args.slack, seed=args.seed, out_dir=args.out,
                                backend_path=args.backend)
    fw = result.report.fraction_within
    print(f"links={result.report.num_links} within0={fw[0]:.3f} within1={fw.get(1, 1.0):.3f} "
          f"within2={fw.get(2, 1.0):.3f} spearman={result.spearman:.3f}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qforensics", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--out", default=".", help="output directory")
        p.set_defaults(func=func)
        return p

    p = add("gen-backend", cmd_gen_backend, "write a backend JSON with synthetic or imported calibration")
    p.add_argument("--topology", choices=[*TOPOLOGIES, "heavy-hex", "file"], default="eagle")
    p.add_argument("--distance", type=int, default=7, help="heavy-hex row count (odd, >= 3)")
    p.add_argument("--edges", help="JSON edge list for --topology file")
    p.add_argument("--calibration-csv", help="qubit,gate,error CSV to use instead of synthetic errors")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--low", type=float, default=0.003)
    p.add_argument("--high", type=float, default=0.03)
    p.add_argument("--log-uniform", action="store_true")
    p.add_argument("--name")
    p.add_argument("--output", default="backend.json", help="file name inside --out")

    def gen_flags(p, qubits_flag):
        p.add_argument(qubits_flag, dest="qubits", type=int, default=100)
        p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
        p.add_argument("--fraction", type=float, default=DEFAULT_TWO_QUBIT_FRACTION)
        p.add_argument("--pool", default=",".join(sorted(DEFAULT_POOL)))
        p.add_argument("--seed", type=int, default=0)

    p = add("gen-circuits", cmd_gen_circuits, "write a seeded random circuit corpus")
    gen_flags(p, "--qubits")
    p.add_argument("--count", type=int, default=5)

    p = add("transpile", cmd_transpile, "transpile .qasm files onto a backend")
    p.add_argument("--backend", required=True)
    p.add_argument("--input", required=True, help=".qasm file or directory")
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slack", type=float, default=DEFAULT_SLACK)
    p.add_argument("--exhaustive", action="store_true")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)

    p = add("extract", cmd_extract, "count link usage in a transpiled corpus")
    p.add_argument("--input", required=True, help="directory of transpiled .qasm files")
    p.add_argument("--backend", help="reference backend; unused links get count 0")
    p.add_argument("--mode", choices=COUNTING_MODES, default=GATE_INSTANCES)

    p = add("rank", cmd_rank, "bin links by frequency or by calibrated error")
    p.add_argument("--frequencies")
    p.add_argument("--backend")
    p.add_argument("--bins", type=int, default=6)

    p = add("compare", cmd_compare, "compare two rankings")
    p.add_argument("--forensic", required=True)
    p.add_argument("--truth", required=True)

    p = add("run", cmd_run, "run the whole experiment")
    p.add_argument("--backend")
    p.add_argument("--manifest", help="rerun the experiment recorded in this manifest")
    gen_flags(p, "--qubits")
    p.add_argument("--circuits", type=int, default=5)
    p.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    p.add_argument("--slack", type=float, default=DEFAULT_SLACK)
    p.add_argument("--bins", type=int, default=6)
    p.add_argument("--mode", choices=COUNTING_MODES, default=GATE_INSTANCES)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"qforensics {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, BackendError, qasm.QasmError) as exc:
        print(f"qforensics {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StageError as exc:
        print(f"qforensics {args.command}: pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
