"""End-to-end forensic experiment: corpus -> transpile -> count -> bin -> compare."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass

from . import __version__, qasm
from .backend import Backend, dumps_backend, link_key, load_backend, parse_link_key
from .circuit import Circuit
from .circuit_gen import GenSpec, corpus_filename, generate_corpus
from .forensics import (
    GATE_INSTANCES,
    BinDiffReport,
    BinRanking,
    LinkFrequencyMap,
    bin_rank,
    compare,
    link_frequencies,
    signal_correlation,
    truth_ranking,
)
from .schemas import MANIFEST, REPORT, SIDECAR, validate
from .svg import diff_histogram_svg
from .transpiler import DEFAULT_SLACK, DEFAULT_TRIALS, TranspiledCircuit, transpile


class StageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


@dataclass
class ExperimentResult:
    backend: Backend
    corpus: list[Circuit]
    transpiled: list[TranspiledCircuit]
    frequencies: LinkFrequencyMap
    forensic: BinRanking
    truth: BinRanking
    report: BinDiffReport
    spearman: float

    @property
    def coverage(self) -> float:
        """Share of coupling edges selected at least once."""
        counts = self.frequencies.counts
        return sum(1 for c in counts.values() if c > 0) / len(counts)


def transpile_seed(seed: int, index: int, trials: int) -> int:
    return seed + index * trials


def run_experiment(backend: Backend, gen: GenSpec, count: int, trials: int = DEFAULT_TRIALS,
                   num_bins: int = 6, mode: str = GATE_INSTANCES, slack: float = DEFAULT_SLACK,
                   seed: int = 0, out_dir=None, backend_path=None) -> ExperimentResult:
    """Run the full pipeline; with ``out_dir`` every intermediate file is written there.

    Circuit ``i`` is transpiled with seeds starting at ``seed + i * trials`` so
    no two circuits share layout draws.
    """
    if count < 1:
        raise StageError("generate", ValueError(f"corpus size must be at least 1, got {count}"))
    try:
        corpus = generate_corpus(gen, count)
    except ValueError as exc:
        raise StageError("generate", exc) from exc
    try:
        transpiled = [
            transpile(c, backend, trials=trials, seed=transpile_seed(seed, i, trials), slack=slack)
            for i, c in enumerate(corpus)
        ]
    except ValueError as exc:
        raise StageError("transpile", exc) from exc
    try:
        freqs = link_frequencies([t.circuit for t in transpiled], mode, reference=backend.coupling)
        forensic = bin_rank(freqs.as_scores(), num_bins, "descending", "frequency")
        truth = truth_ranking(backend.calibration, num_bins, links=freqs.links())
        report = compare(forensic, truth)
    except ValueError as exc:
        raise StageError("rank", exc) from exc
    result = ExperimentResult(backend, corpus, transpiled, freqs, forensic, truth, report,
                              signal_correlation(freqs, backend.calibration))
    if out_dir is not None:
        write_artifacts(result, out_dir)
        manifest = build_manifest(result, gen, count, trials, slack, num_bins, mode, seed,
                                  out_dir, backend_path)
        write_json(os.path.join(out_dir, "manifest.json"), manifest, MANIFEST)
    return result


# file formats

def frequencies_csv(freqs: LinkFrequencyMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["link", "count"])
    for lk, c in freqs.counts.items():
        w.writerow([link_key(lk), c])
    return buf.getvalue()


def ranking_csv(ranking: BinRanking) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["link", "bin"])
    for lk, b in ranking.assignment.items():
        w.writerow([link_key(lk), b])
    return buf.getvalue()


def read_ranking_csv(path, source: str = "file") -> BinRanking:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"link", "bin"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns 'link,bin'")
        assignment = {}
        for lineno, row in enumerate(reader, start=2):
            lk = parse_link_key(row["link"])
            try:
                b = int(row["bin"])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad bin {row['bin']!r}") from None
            if lk in assignment:
                raise ValueError(f"{path}:{lineno}: duplicate link {row['link']}")
            if b < 1:
                raise ValueError(f"{path}:{lineno}: bins start at 1, got {b}")
            assignment[lk] = b
    if not assignment:
        raise ValueError(f"{path}: no rankings")
    return BinRanking(max(assignment.values()), assignment, source)


def read_frequencies_csv(path, mode: str = GATE_INSTANCES) -> LinkFrequencyMap:
    with open(path, newline="", encoding="utf-8") as fh:
        counts = {parse_link_key(r["link"]): int(r["count"]) for r in csv.DictReader(fh)}
    return LinkFrequencyMap(counts, mode, corpus_size=0)


def report_dict(report: BinDiffReport, spearman: float | None = None, **extra) -> dict:
    d = report.to_dict()
    d["per_link_diff"] = {link_key(lk): v for lk, v in report.per_link_diff.items()}
    if spearman is not None:
        d["spearman"] = None if spearman != spearman else spearman
    d.update(extra)
    return d


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_json(path, data, schema=None) -> None:
    if schema is not None:
        validate(data, schema)
    write_text(path, json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_compare_outputs(report: BinDiffReport, out_dir, spearman=None, **extra) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    data = report_dict(report, spearman, **extra)
    write_json(os.path.join(out_dir, "report.json"), data, REPORT)
    write_text(os.path.join(out_dir, "histogram.svg"), diff_histogram_svg(report))
    return data


def write_artifacts(result: ExperimentResult, out_dir) -> None:
    corpus_dir = os.path.join(out_dir, "corpus")
    tdir = os.path.join(out_dir, "transpiled")
    os.makedirs(corpus_dir, exist_ok=True)
    os.makedirs(tdir, exist_ok=True)
    write_text(os.path.join(out_dir, "backend.json"), dumps_backend(result.backend))
    for i, (c, t) in enumerate(zip(result.corpus, result.transpiled)):
        name = corpus_filename(i)
        qasm.dump(c, os.path.join(corpus_dir, name))
        qasm.dump(t.circuit, os.path.join(tdir, name))
        write_json(os.path.join(tdir, name[:-5] + ".json"), t.sidecar(), SIDECAR)
    write_text(os.path.join(out_dir, "frequencies.csv"), frequencies_csv(result.frequencies))
    write_text(os.path.join(out_dir, "ranking_forensic.csv"), ranking_csv(result.forensic))
    write_text(os.path.join(out_dir, "ranking_truth.csv"), ranking_csv(result.truth))
    write_compare_outputs(
        result.report, out_dir, result.spearman,
        backend=result.backend.name, mode=result.frequencies.mode,
        corpus_size=result.frequencies.corpus_size, coverage=result.coverage,
    )


# manifests

def sha256_file(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def build_manifest(result: ExperimentResult, gen: GenSpec, count, trials, slack, num_bins, mode,
                   seed, out_dir, backend_path=None) -> dict:
    if backend_path is None:
        backend_path = os.path.join(out_dir, "backend.json")
    backend_path = os.path.abspath(backend_path)
    return {
        "backend": backend_path,
        "gen": gen.to_dict(),
        "count": count,
        "trials": trials,
        "slack": slack,
        "num_bins": num_bins,
        "mode": mode,
        "seed": seed,
        "version": __version__,
        "hashes": {
            "backend": sha256_file(backend_path),
            "frequencies.csv": sha256_file(os.path.join(out_dir, "frequencies.csv")),
            "report.json": sha256_file(os.path.join(out_dir, "report.json")),
        },
    }


def load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    validate(manifest, MANIFEST)
    return manifest


def rerun_manifest(path, out_dir) -> ExperimentResult:
    """Repeat the experiment a manifest describes, after checking the backend hash."""
    manifest = load_manifest(path)
    backend_path = manifest["backend"]
    if not os.path.isabs(backend_path):
        backend_path = os.path.join(os.path.dirname(os.path.abspath(path)), backend_path)
    if sha256_file(backend_path) != manifest["hashes"]["backend"]:
        raise ValueError(f"backend file {backend_path} changed since the manifest was written")
    return run_experiment(
        load_backend(backend_path), GenSpec.from_dict(manifest["gen"]), manifest["count"],
        trials=manifest["trials"], num_bins=manifest["num_bins"], mode=manifest["mode"],
        slack=manifest["slack"], seed=manifest["seed"], out_dir=out_dir, backend_path=backend_path,
    )
