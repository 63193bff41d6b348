"""Recovering link quality from transpiled programs.

A transpiler that maximises estimated fidelity keeps steering two-qubit
gates onto its best links. Counting how often each link appears across a
corpus of transpiled circuits therefore ranks the links, and binning that
ranking makes it comparable with a ranking built from calibration data.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from scipy import stats

from .backend import CalibrationTable, CouplingMap, Link, link, link_key
from .circuit import Circuit

GATE_INSTANCES = "gate-instances"
CIRCUIT_PRESENCE = "circuit-presence"
COUNTING_MODES = (GATE_INSTANCES, CIRCUIT_PRESENCE)


class ForensicsError(ValueError):
    pass


class LinkSetMismatch(ForensicsError):
    def __init__(self, only_forensic, only_truth):
        self.only_forensic = sorted(only_forensic)
        self.only_truth = sorted(only_truth)
        fmt = lambda links: ", ".join(link_key(e) for e in links) or "-"
        super().__init__(
            "rankings cover different links; only in first: "
            f"{fmt(self.only_forensic)}; only in second: {fmt(self.only_truth)}"
        )


def extract_topology(circuit: Circuit) -> frozenset[Link]:
    """The unordered qubit pairs touched by two-qubit gates.

    Transpiled programs only place two-qubit gates on coupled qubits, so the
    result is a subgraph of the hardware coupling map.
    """
    if not circuit.is_physical:
        raise ForensicsError("topology extraction needs a physical (transpiled) circuit")
    return frozenset(link(*op.qubits) for op in circuit.ops if op.is_two_qubit)


@dataclass(frozen=True)
class LinkFrequencyMap:
    counts: Mapping[Link, int]
    mode: str
    corpus_size: int

    def __post_init__(self):
        object.__setattr__(self, "counts", dict(sorted(self.counts.items())))

    def __getitem__(self, key: Link) -> int:
        return self.counts[link(*key)]

    def links(self) -> list[Link]:
        return list(self.counts)

    def as_scores(self) -> dict[Link, float]:
        return {k: float(v) for k, v in self.counts.items()}


def link_frequencies(corpus: Sequence[Circuit], mode: str = GATE_INSTANCES,
                     reference: CouplingMap | None = None) -> LinkFrequencyMap:
    """Aggregate link usage over ``corpus``.

    ``gate-instances`` counts two-qubit gate occurrences; ``circuit-presence``
    counts circuits using the link at least once. With a ``reference`` map,
    unused edges are reported with count 0 and links outside it are an
    error, since a program compiled for that device cannot contain them.
    """
    if mode not in COUNTING_MODES:
        raise ForensicsError(f"unknown counting mode {mode!r}; choose from {COUNTING_MODES}")
    if not corpus:
        raise ForensicsError("cannot count link frequencies over an empty corpus")
    counts: Counter = Counter()
    for circuit in corpus:
        if not circuit.is_physical:
            raise ForensicsError("link frequencies need physical (transpiled) circuits")
        if mode == GATE_INSTANCES:
            counts.update(link(*op.qubits) for op in circuit.ops if op.is_two_qubit)
        else:
            counts.update(extract_topology(circuit))
    if reference is not None:
        edges = reference.edge_set
        foreign = sorted(set(counts) - edges)
        if foreign:
            raise ForensicsError(
                "corpus uses links absent from the reference coupling map: "
                + ", ".join(link_key(e) for e in foreign)
            )
        counts = Counter({e: counts.get(e, 0) for e in reference.edges})
    return LinkFrequencyMap(dict(counts), mode, len(corpus))


@dataclass(frozen=True)
class BinRanking:
    num_bins: int
    assignment: Mapping[Link, int]  # 1 is the best bin
    source: str = "frequency"

    def __post_init__(self):
        object.__setattr__(self, "assignment", dict(sorted(self.assignment.items())))

    def bins(self) -> list[list[Link]]:
        groups = [[] for _ in range(self.num_bins)]
        for lk, b in self.assignment.items():
            groups[b - 1].append(lk)
        return groups

    def sizes(self) -> list[int]:
        return [len(g) for g in self.bins()]


def bin_sizes(n: int, num_bins: int) -> list[int]:
    q, r = divmod(n, num_bins)
    return [q + 1 if i < r else q for i in range(num_bins)]


def bin_rank(scores: Mapping[Link, float], num_bins: int, order: str = "descending",
             source: str = "frequency") -> BinRanking:
    """Split links into ``num_bins`` contiguous groups by score.

    ``descending`` puts the highest scores in bin 1 (use it for selection
    frequencies), ``ascending`` the lowest (use it for error rates). Ties
    fall back to the link key. When the link count does not divide evenly
    the first bins take one extra link each.
    """
    if order not in ("ascending", "descending"):
        raise ForensicsError(f"order must be 'ascending' or 'descending', got {order!r}")
    n = len(scores)
    if num_bins < 1 or num_bins > n:
        raise ForensicsError(f"num_bins must be in [1, {n}], got {num_bins}")
    sign = -1.0 if order == "descending" else 1.0
    ranked = sorted(scores, key=lambda lk: (sign * float(scores[lk]), link(*lk)))
    assignment = {}
    start = 0
    for b, size in enumerate(bin_sizes(n, num_bins), start=1):
        for lk in ranked[start:start + size]:
            assignment[link(*lk)] = b
        start += size
    return BinRanking(num_bins, assignment, source)


def truth_ranking(calibration: CalibrationTable, num_bins: int,
                  links: Iterable[Link] | None = None) -> BinRanking:
    """Bin links by calibrated two-qubit error, lowest error in bin 1."""
    errors = calibration.two_qubit_error
    if links is not None:
        links = list(links)
        missing = [lk for lk in links if lk not in errors]
        if missing:
            raise ForensicsError(
                "calibration lacks two-qubit errors for " + ", ".join(link_key(e) for e in missing)
            )
        errors = {lk: errors[lk] for lk in links}
    return bin_rank(errors, num_bins, order="ascending", source="calibration")


@dataclass(frozen=True)
class BinDiffReport:
    num_bins: int
    per_link_diff: Mapping[Link, int]
    histogram: Mapping[int, int]
    fraction_within: Mapping[int, float]

    @property
    def num_links(self) -> int:
        return len(self.per_link_diff)

    def density(self) -> dict[int, float]:
        n = self.num_links
        return {d: c / n for d, c in self.histogram.items()}

    def to_dict(self) -> dict:
        return {
            "num_bins": self.num_bins,
            "num_links": self.num_links,
            "histogram": {str(d): c for d, c in self.histogram.items()},
            "fraction_within": {str(k): v for k, v in self.fraction_within.items()},
        }


def compare(forensic: BinRanking, truth: BinRanking) -> BinDiffReport:
    """Per-link absolute bin difference, its histogram and cumulative shares."""
    if forensic.num_bins != truth.num_bins:
        raise ForensicsError(f"bin counts differ: {forensic.num_bins} vs {truth.num_bins}")
    a, b = set(forensic.assignment), set(truth.assignment)
    if a != b:
        raise LinkSetMismatch(a - b, b - a)
    diffs = {lk: abs(forensic.assignment[lk] - truth.assignment[lk]) for lk in sorted(a)}
    hist = Counter(diffs.values())
    histogram = {d: hist.get(d, 0) for d in range(forensic.num_bins)}
    n = len(diffs)
    fraction_within = {}
    running = 0
    for k in range(forensic.num_bins):
        running += histogram[k]
        fraction_within[k] = running / n
    return BinDiffReport(forensic.num_bins, diffs, histogram, fraction_within)


def signal_correlation(frequencies: LinkFrequencyMap, calibration: CalibrationTable) -> float:
    """Spearman correlation between link frequency and negated link error."""
    links = frequencies.links()
    freq = [frequencies.counts[lk] for lk in links]
    neg_err = [-calibration.two_qubit_error[lk] for lk in links]
    if len(set(freq)) < 2 or len(set(neg_err)) < 2:
        return math.nan
    return float(stats.spearmanr(freq, neg_err).statistic)
