"""Hardware model: coupling graphs, calibration tables and backends.

Links are undirected throughout; every edge is stored as ``(min, max)``.
"""

from __future__ import annotations

import csv
import json
import math
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

Link = tuple[int, int]

DEFAULT_BASIS = frozenset({"ecr", "rz", "sx", "x", "id"})
SINGLE_QUBIT_BASIS_GATES = ("id", "rz", "sx", "x")
TWO_QUBIT_BASIS_GATES = frozenset({"ecr", "cx"})


class BackendError(ValueError):
    """Base class for malformed or inconsistent hardware descriptions."""


class BackendFormatError(BackendError):
    """Input could not be parsed; the message names the field or position."""


class BackendInvariantError(BackendError):
    """Parsed data violates a structural invariant."""


class DisconnectedError(BackendError):
    def __init__(self, u: int, v: int):
        self.pair = (u, v)
        super().__init__(f"coupling map is disconnected: no path between {u} and {v}")


def link(u: int, v: int) -> Link:
    return (u, v) if u < v else (v, u)


def link_key(edge: Link) -> str:
    u, v = link(*edge)
    return f"{u}-{v}"


def parse_link_key(key: str) -> Link:
    parts = key.replace("_", "-").split("-")
    if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
        raise BackendFormatError(f"bad link key {key!r}; expected 'u-v'")
    return link(int(parts[0]), int(parts[1]))


@dataclass(frozen=True)
class CouplingMap:
    num_qubits: int
    edges: tuple[Link, ...]
    _adj: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise BackendInvariantError("num_qubits must be positive")
        seen = set()
        for e in self.edges:
            u, v = e
            if u == v:
                raise BackendInvariantError(f"self-loop on qubit {u}")
            if not (0 <= u < self.num_qubits and 0 <= v < self.num_qubits):
                raise BackendInvariantError(f"link {u}-{v} outside [0, {self.num_qubits})")
            key = link(u, v)
            if key in seen:
                raise BackendInvariantError(f"duplicate link {key[0]}-{key[1]}")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))
        adj = [[] for _ in range(self.num_qubits)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    @classmethod
    def from_edges(cls, edges: Iterable[Iterable[int]], num_qubits: int | None = None) -> "CouplingMap":
        edges = [tuple(int(x) for x in e) for e in edges]
        if num_qubits is None:
            num_qubits = 1 + max((max(e) for e in edges), default=-1)
        return cls(num_qubits, tuple(edges))

    @property
    def edge_set(self) -> frozenset[Link]:
        return frozenset(self.edges)

    def neighbors(self, q: int) -> tuple[int, ...]:
        return self._adj[q]

    def degree(self, q: int) -> int:
        return len(self._adj[q])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def is_connected(self, nodes: Iterable[int] | None = None) -> bool:
        """Connectivity of the whole graph, or of the subgraph induced by ``nodes``."""
        allowed = set(range(self.num_qubits)) if nodes is None else set(nodes)
        if not allowed:
            return False
        start = min(allowed)
        seen = {start}
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in self._adj[u]:
                if w in allowed and w not in seen:
                    seen.add(w)
                    queue.append(w)
        return seen == allowed


def line_map(n: int) -> CouplingMap:
    return CouplingMap(n, tuple((i, i + 1) for i in range(n - 1)))


def ring_map(n: int) -> CouplingMap:
    return CouplingMap(n, tuple((i, (i + 1) % n) for i in range(n)))


def heavy_hex_map(distance_parameter: int) -> CouplingMap:
    """IBM-style heavy-hex lattice with ``distance_parameter`` long rows.

    Each long row spans ``2 * d + 1`` columns; the first row drops its last
    column and the final row its first. Consecutive rows are joined through
    bridge qubits sitting on every fourth column, offset by two on alternate
    gaps. Numbering follows the devices: a row left to right, then the
    bridges beneath it, then the next row. ``d = 7`` gives the 127-qubit
    Eagle layout (144 links) and ``d = 5`` the 65-qubit Hummingbird.
    ``d`` must be odd and at least 3.
    """
    d = int(distance_parameter)
    if d < 3 or d % 2 == 0:
        raise BackendInvariantError(
            f"heavy-hex distance parameter must be an odd integer >= 3, got {distance_parameter}"
        )
    width = 2 * d + 1
    index: dict[tuple[int, int], int] = {}  # (row, col) -> qubit
    edges: list[Link] = []
    n = 0
    rows = []
    for r in range(d):
        lo = 1 if r == d - 1 else 0
        hi = width - 1 if r == 0 else width
        cols = list(range(lo, hi))
        rows.append(cols)
        for c in cols:
            index[(r, c)] = n
            n += 1
        edges.extend((index[(r, c)], index[(r, c + 1)]) for c in cols[:-1])
        if r < d - 1:
            start = 0 if r % 2 == 0 else 2
            bridges = list(range(start, width, 4))
            pending = []
            for c in bridges:
                pending.append((c, n))
                edges.append((index[(r, c)], n))
                n += 1
            index.update({("bridge", r, c): b for c, b in pending})
    for r in range(d - 1):
        start = 0 if r % 2 == 0 else 2
        for c in range(start, width, 4):
            edges.append((index[("bridge", r, c)], index[(r + 1, c)]))
    cmap = CouplingMap(n, tuple(edges))
    if not cmap.is_connected():
        raise BackendInvariantError("heavy-hex construction produced a disconnected graph")
    return cmap


def _load_topology(name: str) -> CouplingMap:
    text = resources.files("qforensics.data").joinpath(name).read_text(encoding="utf-8")
    data = json.loads(text)
    return CouplingMap.from_edges(data["edges"], data["num_qubits"])


def eagle_map() -> CouplingMap:
    """The 127-qubit Eagle coupling map from the bundled edge list."""
    return _load_topology("eagle_127.json")


def falcon_map() -> CouplingMap:
    """The 27-qubit Falcon coupling map from the bundled edge list."""
    return _load_topology("falcon_27.json")


TOPOLOGIES = {"eagle": eagle_map, "falcon": falcon_map}


def distance_matrix(coupling: CouplingMap) -> np.ndarray:
    """All-pairs hop counts via one BFS per source qubit."""
    n = coupling.num_qubits
    dist = np.full((n, n), -1, dtype=np.int64)
    for src in range(n):
        row = dist[src]
        row[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for w in coupling.neighbors(u):
                if row[w] < 0:
                    row[w] = row[u] + 1
                    queue.append(w)
        missing = np.flatnonzero(row < 0)
        if missing.size:
            raise DisconnectedError(src, int(missing[0]))
    return dist


@dataclass(frozen=True)
class CalibrationTable:
    """Per-qubit single-qubit gate errors and per-link two-qubit errors."""

    single_qubit_error: Mapping[int, Mapping[str, float]]
    two_qubit_error: Mapping[Link, float]
    timestamp: str = ""

    def __post_init__(self):
        sq = {}
        for q, gates in self.single_qubit_error.items():
            q = int(q)
            if q < 0:
                raise BackendInvariantError(f"negative qubit index {q}")
            entry = {}
            for g, e in gates.items():
                entry[str(g)] = _check_prob(e, f"single_qubit_error[{q}][{g}]")
            sq[q] = MappingProxyType(entry)
        tq = {}
        for key, e in self.two_qubit_error.items():
            lk = link(*key)
            if lk in tq:
                raise BackendInvariantError(f"duplicate link error for {link_key(lk)}")
            tq[lk] = _check_prob(e, f"two_qubit_error[{link_key(lk)}]")
        object.__setattr__(self, "single_qubit_error", MappingProxyType(dict(sorted(sq.items()))))
        object.__setattr__(self, "two_qubit_error", MappingProxyType(dict(sorted(tq.items()))))

    def link_error(self, u: int, v: int) -> float:
        return self.two_qubit_error[link(u, v)]

    def gate_error(self, gate: str, q: int) -> float:
        return self.single_qubit_error[q][gate]


def _check_prob(value, where: str) -> float:
    try:
        e = float(value)
    except (TypeError, ValueError):
        raise BackendFormatError(f"{where}: not a number: {value!r}") from None
    if not (0.0 <= e < 1.0) or math.isnan(e):
        raise BackendInvariantError(f"{where}: error probability {e} outside [0, 1)")
    return e


@dataclass(frozen=True)
class Backend:
    name: str
    coupling: CouplingMap
    calibration: CalibrationTable
    basis_gates: frozenset[str] = DEFAULT_BASIS

    def __post_init__(self):
        object.__setattr__(self, "basis_gates", frozenset(self.basis_gates))
        two = self.basis_gates & TWO_QUBIT_BASIS_GATES
        if len(two) != 1:
            raise BackendInvariantError(
                f"basis must contain exactly one two-qubit gate from {sorted(TWO_QUBIT_BASIS_GATES)}, "
                f"got {sorted(two)}"
            )
        unknown = self.basis_gates - TWO_QUBIT_BASIS_GATES - set(SINGLE_QUBIT_BASIS_GATES)
        if unknown:
            raise BackendInvariantError(f"unsupported basis gates {sorted(unknown)}")
        edges = self.coupling.edge_set
        for lk in self.calibration.two_qubit_error:
            if lk not in edges:
                raise BackendInvariantError(
                    f"calibration has an error for link {link_key(lk)}, which is not a coupling edge"
                )
        for q in self.calibration.single_qubit_error:
            if q >= self.coupling.num_qubits:
                raise BackendInvariantError(
                    f"calibration has single-qubit errors for qubit {q} >= num_qubits "
                    f"{self.coupling.num_qubits}"
                )

    @property
    def num_qubits(self) -> int:
        return self.coupling.num_qubits

    @property
    def two_qubit_gate(self) -> str:
        return next(iter(self.basis_gates & TWO_QUBIT_BASIS_GATES))


def synth_calibration(
    coupling: CouplingMap,
    seed: int,
    low: float = 0.003,
    high: float = 0.03,
    log_uniform: bool = False,
    timestamp: str | None = None,
) -> CalibrationTable:
    """Random calibration: link errors in ``[low, high]``, single-qubit errors far below.

    Each qubit's ``sx``/``x``/``id`` error is drawn from 2-10% of the midpoint
    of its incident link errors; ``rz`` is virtual and error-free.
    """
    if not (0.0 <= low < high < 1.0):
        raise BackendInvariantError(f"need 0 <= low < high < 1, got low={low}, high={high}")
    if log_uniform and low <= 0.0:
        raise BackendInvariantError("log-uniform draws need low > 0")
    rng = np.random.default_rng(seed)
    u = rng.random(len(coupling.edges))
    if log_uniform:
        errs = np.exp(np.log(low) + u * (np.log(high) - np.log(low)))
    else:
        errs = low + u * (high - low)
    errs = np.clip(errs, low, high)
    two = {e: float(x) for e, x in zip(coupling.edges, errs)}
    scale = rng.uniform(0.02, 0.1, size=coupling.num_qubits)
    single = {}
    for q in range(coupling.num_qubits):
        incident = [two[link(q, w)] for w in coupling.neighbors(q)]
        mid = 0.5 * (min(incident) + max(incident)) if incident else 0.5 * (low + high)
        e1 = float(scale[q] * mid)
        single[q] = {"id": e1, "rz": 0.0, "sx": e1, "x": e1}
    if timestamp is None:
        timestamp = f"synthetic(seed={seed},low={low!r},high={high!r},log_uniform={log_uniform})"
    return CalibrationTable(single, two, timestamp)


def shell_order(coupling: CouplingMap, center: int) -> list[Link]:
    """Links ordered by hop distance from ``center`` (nearer endpoint, then farther, then key).

    Every prefix of this order is a connected edge set containing ``center``.
    """
    dist = distance_matrix(coupling)[center]
    return sorted(coupling.edges, key=lambda e: (min(dist[e[0]], dist[e[1]]), max(dist[e[0]], dist[e[1]]), e))


def tiered_calibration(
    coupling: CouplingMap,
    tiers: Iterable[float],
    sizes: Iterable[int],
    seed: int,
    single_qubit_error: float | None = None,
    order: Sequence[Link] | None = None,
) -> CalibrationTable:
    """Assign link errors from discrete tiers.

    ``sizes`` gives how many links fall in each tier and must sum to the
    number of edges. Links are taken in ``order`` when given (for instance
    :func:`shell_order`, which makes each tier a ring around a centre),
    otherwise in a random permutation drawn from ``seed``.
    """
    tiers, sizes = list(tiers), list(sizes)
    if len(tiers) != len(sizes) or sum(sizes) != len(coupling.edges):
        raise BackendInvariantError("tier sizes must match tiers and sum to the edge count")
    if order is None:
        rng = np.random.default_rng(seed)
        ordered = [coupling.edges[i] for i in rng.permutation(len(coupling.edges))]
    else:
        ordered = [link(*e) for e in order]
        if sorted(ordered) != sorted(coupling.edges):
            raise BackendInvariantError("order must list every coupling edge exactly once")
    values = np.repeat(np.asarray(tiers, dtype=float), sizes)
    two = {e: float(x) for e, x in zip(ordered, values)}
    e1 = min(tiers) / 10 if single_qubit_error is None else single_qubit_error
    single = {q: {"id": e1, "rz": 0.0, "sx": e1, "x": e1} for q in range(coupling.num_qubits)}
    return CalibrationTable(single, two, f"tiered(seed={seed},tiers={tiers})")


def synth_backend(coupling: CouplingMap, seed: int, name: str | None = None, **kwargs) -> Backend:
    return Backend(
        name or f"synthetic-{coupling.num_qubits}q-s{seed}",
        coupling,
        synth_calibration(coupling, seed, **kwargs),
    )


# serialization

def backend_to_dict(backend: Backend) -> dict:
    cal = backend.calibration
    return {
        "name": backend.name,
        "num_qubits": backend.num_qubits,
        "edges": [list(e) for e in backend.coupling.edges],
        "basis_gates": sorted(backend.basis_gates),
        "single_qubit_error": {
            str(q): dict(sorted(g.items())) for q, g in cal.single_qubit_error.items()
        },
        "two_qubit_error": {link_key(e): x for e, x in cal.two_qubit_error.items()},
        "timestamp": cal.timestamp,
    }


def dumps_backend(backend: Backend) -> str:
    return json.dumps(backend_to_dict(backend), indent=2) + "\n"


def save_backend(backend: Backend, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_backend(backend))


def _require(data: dict, key: str, kind):
    if key not in data:
        raise BackendFormatError(f"missing field {key!r}")
    value = data[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise BackendFormatError(f"field {key!r} has wrong type {type(value).__name__}")
    return value


def backend_from_dict(data: dict) -> Backend:
    if not isinstance(data, dict):
        raise BackendFormatError("top-level JSON value must be an object")
    name = _require(data, "name", str)
    num_qubits = _require(data, "num_qubits", int)
    raw_edges = _require(data, "edges", list)
    edges = []
    for i, e in enumerate(raw_edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e)):
            raise BackendFormatError(f"edges[{i}] must be a pair of integers, got {e!r}")
        edges.append(tuple(e))
    coupling = CouplingMap(num_qubits, tuple(edges))
    basis = _require(data, "basis_gates", list) if "basis_gates" in data else sorted(DEFAULT_BASIS)
    single_raw = data.get("single_qubit_error", {})
    if not isinstance(single_raw, dict):
        raise BackendFormatError("field 'single_qubit_error' must be an object")
    one_q = [g for g in basis if g in SINGLE_QUBIT_BASIS_GATES]
    single = {}
    for key, value in single_raw.items():
        if not str(key).isdigit():
            raise BackendFormatError(f"single_qubit_error key {key!r} is not a qubit index")
        if isinstance(value, dict):
            single[int(key)] = value
        else:
            # one shared value for every single-qubit basis gate
            single[int(key)] = {g: value for g in one_q}
    two_raw = _require(data, "two_qubit_error", dict)
    two = {parse_link_key(k): v for k, v in two_raw.items()}
    cal = CalibrationTable(single, two, str(data.get("timestamp", "")))
    return Backend(name, coupling, cal, frozenset(basis))


def loads_backend(text: str) -> Backend:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BackendFormatError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    return backend_from_dict(data)


def load_backend(path) -> Backend:
    """Read a backend JSON file and check all backend invariants."""
    with open(path, encoding="utf-8") as fh:
        return loads_backend(fh.read())


def load_calibration_csv(path, timestamp: str = "") -> CalibrationTable:
    """Import ``qubit,gate,error`` rows; two-qubit rows use ``u-v`` or ``u_v`` in the qubit column."""
    single: dict[int, dict[str, float]] = {}
    two: dict[Link, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = {c.strip().lower(): c for c in reader.fieldnames or []}
        for need in ("qubit", "gate", "error"):
            if need not in cols:
                raise BackendFormatError(f"{path}: missing CSV column {need!r}")
        for lineno, row in enumerate(reader, start=2):
            where = f"{path}:{lineno}"
            qubit = row[cols["qubit"]].strip()
            gate = row[cols["gate"]].strip().lower()
            value = _check_prob(row[cols["error"]].strip(), where)
            if "-" in qubit or "_" in qubit:
                lk = parse_link_key(qubit)
                if lk in two:
                    raise BackendInvariantError(f"{where}: duplicate entry for link {link_key(lk)}")
                two[lk] = value
            elif qubit.isdigit():
                single.setdefault(int(qubit), {})[gate] = value
            else:
                raise BackendFormatError(f"{where}: bad qubit field {qubit!r}")
    return CalibrationTable(single, two, timestamp)
