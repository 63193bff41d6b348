"""SWAP routing of logical circuits onto a coupling map.

The router is a front-layer lookahead heuristic: while no front gate sits on
a coupled pair, every SWAP touching a front-layer qubit is scored by the
summed hop distance of the front layer after the SWAP, plus a 0.5-weighted
extended set of the next 20 two-qubit gates, scaled by a decay factor that
discourages reusing the same qubits.

Two noise terms bias the search toward good links. Distances blend hop
counts with shortest paths under a per-link penalty ``(-log(1 - e))**gamma``
(normalised to mean 1), and each candidate SWAP pays that penalty for the
link it runs on. :func:`post_layout` re-places a routed circuit onto the
isomorphic spot of the coupling graph with the best estimated fidelity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from networkx.algorithms import isomorphism
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from ..backend import Backend, distance_matrix, link
from ..circuit import TWO_QUBIT_GATES, Circuit, GateOp
from .decompose import decompose, lower_single, lower_two_qubit
from ._sabre import sabre_route

EXTENDED_SET_SIZE = 20
EXTENDED_SET_WEIGHT = 0.5
DECAY_DELTA = 0.001
DECAY_RESET = 5
# noise awareness: a per-SWAP link penalty plus error-weighted distances.
# Equal weights make every step along a cheapest path score alike, so the
# router does not favour crossing an expensive link to shrink weighted distance.
NOISE_WEIGHT = 0.8
DISTANCE_WEIGHT = 0.8
PENALTY_EXPONENT = 3.0
# post-layout re-placement: backends up to this size, this many leading
# candidates, at most this many mappings each
POST_LAYOUT_MAX_QUBITS = 32
POST_LAYOUT_CANDIDATES = 4
POST_LAYOUT_MAPPINGS = 2000

_KIND = {"cx": 0, "ecr": 1, "swap": 2}
_ONE_Q_TYPES = ("id", "rz", "sx", "x", "measure")


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class Layout:
    """Injective logical -> physical assignment; index is the logical qubit."""

    logical_to_physical: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "logical_to_physical", tuple(int(p) for p in self.logical_to_physical))
        if len(set(self.logical_to_physical)) != len(self.logical_to_physical):
            raise LayoutError(f"layout is not injective: {self.logical_to_physical}")
        if any(p < 0 for p in self.logical_to_physical):
            raise LayoutError("negative physical qubit in layout")

    def __len__(self):
        return len(self.logical_to_physical)

    def __getitem__(self, logical: int) -> int:
        return self.logical_to_physical[logical]

    def physical_to_logical(self) -> dict[int, int]:
        return {p: q for q, p in enumerate(self.logical_to_physical)}

    @classmethod
    def trivial(cls, n: int) -> "Layout":
        return cls(tuple(range(n)))

    @classmethod
    def random(cls, num_logical: int, num_physical: int, rng: np.random.Generator) -> "Layout":
        return cls(tuple(int(p) for p in rng.permutation(num_physical)[:num_logical]))

    def check(self, num_logical: int, num_physical: int) -> None:
        if len(self) != num_logical:
            raise LayoutError(f"layout covers {len(self)} logical qubits, circuit has {num_logical}")
        bad = [p for p in self.logical_to_physical if p >= num_physical]
        if bad:
            raise LayoutError(f"layout uses physical qubits {bad} outside [0, {num_physical})")


class RoutingContext:
    """Per-backend tables reused across routing calls."""

    def __init__(self, backend: Backend, noise_weight: float = NOISE_WEIGHT,
                 distance_weight: float = DISTANCE_WEIGHT, penalty_exponent: float = PENALTY_EXPONENT):
        self.backend = backend
        cmap = backend.coupling
        n = cmap.num_qubits
        self.num_physical = n
        self.dist = distance_matrix(cmap)
        width = max((cmap.degree(q) for q in range(n)), default=0)
        self.nbr = np.full((n, max(width, 1)), -1, dtype=np.int64)
        for q in range(n):
            for j, w in enumerate(cmap.neighbors(q)):
                self.nbr[q, j] = w
        self.noise_weight = float(noise_weight)
        self.distance_weight = float(distance_weight)
        basis = backend.basis_gates
        self.basis = basis
        cal = backend.calibration

        # log(1 - e) tables; NaN marks missing calibration entries
        self.log_link = np.full((n, n), np.nan)
        for (u, v), e in cal.two_qubit_error.items():
            self.log_link[u, v] = self.log_link[v, u] = math.log1p(-e)
        self.log_1q = np.full((n, len(_ONE_Q_TYPES)), np.nan)
        for q, gates in cal.single_qubit_error.items():
            for t, g in enumerate(_ONE_Q_TYPES):
                if g in gates:
                    self.log_1q[q, t] = math.log1p(-gates[g])
        self.log_1q[:, _ONE_Q_TYPES.index("measure")] = 0.0

        # per-link SWAP penalty: (-log(1 - e)) ** exponent, scaled to mean 1
        self.penalty_exponent = float(penalty_exponent)
        known = ~np.isnan(self.log_link)
        raw = np.where(known, -np.nan_to_num(self.log_link), 0.0) ** self.penalty_exponent
        mean = float(raw[known].mean()) if known.any() else 0.0
        self.penalty = np.where(known, raw / mean, 1.0) if mean > 0 else np.ones_like(raw)
        self.hdist = self._heuristic_distance(distance_weight)
        self._graph = None

        # costs of the lowered two-qubit templates, split by operand role
        lx = self.log_1q[:, _ONE_Q_TYPES.index("x")] if "x" in basis else 2 * self.log_1q[:, 2]
        lrz = self.log_1q[:, 1]
        lsx = self.log_1q[:, 2]
        self.two_gate = backend.two_qubit_gate
        if self.two_gate == "ecr":
            self.cx_a = lx + lrz
            self.cx_b = lsx
            self.ecr_a = np.zeros(n)
            self.ecr_b = np.zeros(n)
        else:
            self.cx_a = np.zeros(n)
            self.cx_b = np.zeros(n)
            self.ecr_a = lx + lrz
            self.ecr_b = lsx + lx

    def _heuristic_distance(self, weight: float) -> np.ndarray:
        """Blend of hop count and error-weighted path length (mean link weight 1)."""
        hops = self.dist.astype(float)
        if weight == 0.0:
            return hops
        n = self.num_physical
        u, v = np.nonzero(np.triu(~np.isnan(self.log_link)))
        graph = csr_matrix((self.penalty[u, v], (u, v)), shape=(n, n))
        weighted = shortest_path(graph, method="D", directed=False)
        # uncalibrated links fall back to unit weight
        weighted = np.where(np.isfinite(weighted), weighted, hops)
        return (1.0 - weight) * hops + weight * weighted

    @classmethod
    def for_backend(cls, backend: Backend, noise_weight: float = NOISE_WEIGHT,
                    distance_weight: float = DISTANCE_WEIGHT,
                    penalty_exponent: float = PENALTY_EXPONENT) -> "RoutingContext":
        cache = backend.__dict__.setdefault("_routing_contexts", {})
        key = (noise_weight, distance_weight, penalty_exponent)
        ctx = cache.get(key)
        if ctx is None:
            ctx = cache[key] = cls(backend, noise_weight, distance_weight, penalty_exponent)
        return ctx

    def graph(self) -> nx.Graph:
        if self._graph is None:
            g = nx.Graph()
            g.add_nodes_from(range(self.num_physical))
            g.add_edges_from(self.backend.coupling.edges)
            self._graph = g
        return self._graph

    def swap_log_cost(self, a, b):
        return 3 * self.log_link[a, b] + 2 * self.cx_a[a] + self.cx_b[a] + self.cx_a[b] + 2 * self.cx_b[b]


@dataclass
class _Skeleton:
    gates: np.ndarray  # global two-qubit gate indices
    g0: np.ndarray
    g1: np.ndarray
    nxt0: np.ndarray
    nxt1: np.ndarray
    npred: np.ndarray


def _skeleton(indices, g0_all, g1_all, num_qubits) -> _Skeleton:
    idx = np.asarray(indices, dtype=np.int64)
    m = idx.size
    g0 = g0_all[idx] if m else np.empty(0, np.int64)
    g1 = g1_all[idx] if m else np.empty(0, np.int64)
    nxt0 = np.full(m, -1, np.int64)
    nxt1 = np.full(m, -1, np.int64)
    npred = np.zeros(m, np.int64)
    last = [-1] * num_qubits
    for k in range(m):
        for w, side in ((g0[k], 0), (g1[k], 1)):
            prev = last[w]
            if prev >= 0:
                npred[k] += 1
                if g0[prev] == w:
                    nxt0[prev] = k
                else:
                    nxt1[prev] = k
            last[w] = k
    return _Skeleton(idx, g0, g1, nxt0, nxt1, npred)


class PreparedCircuit:
    """A logical circuit split into what the router needs.

    Two-qubit gates form the routing skeleton, cut into segments at barriers.
    Every other operation is anchored to the event that precedes it on its
    wire: the start of the circuit, a two-qubit gate, or a barrier.
    """

    def __init__(self, circuit: Circuit, basis):
        if circuit.is_physical:
            raise ValueError("routing expects a logical circuit")
        circuit = decompose(circuit, basis, keep_two_qubit=True)
        self.circuit = circuit
        self.num_qubits = circuit.num_qubits
        self.basis = frozenset(basis)
        g0, g1, kinds = [], [], []
        self.segments: list[list[int]] = [[]]
        self.barriers: list[GateOp] = []
        # ops emitted after each anchor
        self.leading: list[GateOp] = []
        self.after_gate: dict[int, list[GateOp]] = {}
        self.after_barrier: dict[int, list[GateOp]] = {}
        one_q_wire, one_q_type, anchor_kind, anchor_idx, anchor_side = [], [], [], [], []
        last: list[tuple[int, int]] = [(0, -1)] * circuit.num_qubits  # (kind, index)
        for op in circuit.ops:
            if op.name in TWO_QUBIT_GATES:
                k = len(g0)
                g0.append(op.qubits[0])
                g1.append(op.qubits[1])
                kinds.append(_KIND[op.name])
                self.segments[-1].append(k)
                last[op.qubits[0]] = (1, k)
                last[op.qubits[1]] = (1, k)
            elif op.name == "barrier":
                b = len(self.barriers)
                self.barriers.append(op)
                self.segments.append([])
                for q in op.qubits:
                    last[q] = (2, b)
            else:
                q = op.qubits[0]
                kind, idx = last[q]
                if kind == 0:
                    self.leading.append(op)
                elif kind == 1:
                    self.after_gate.setdefault(idx, []).append(op)
                else:
                    self.after_barrier.setdefault(idx, []).append(op)
                one_q_wire.append(q)
                one_q_type.append(_ONE_Q_TYPES.index(op.name))
                anchor_kind.append(kind)
                anchor_idx.append(idx)
                anchor_side.append(0 if kind != 1 or g0[idx] == q else 1)
        self.g0 = np.asarray(g0, dtype=np.int64)
        self.g1 = np.asarray(g1, dtype=np.int64)
        self.kinds = np.asarray(kinds, dtype=np.int64)
        self.num_two_qubit = len(g0)
        self.seg_skeletons = [_skeleton(s, self.g0, self.g1, self.num_qubits) for s in self.segments]
        allk = np.arange(len(g0))
        self.forward = _skeleton(allk, self.g0, self.g1, self.num_qubits)
        rev = allk[::-1]
        self.backward = _skeleton(rev, self.g0, self.g1, self.num_qubits)
        self.q_wire = np.asarray(one_q_wire, dtype=np.int64)
        self.q_type = np.asarray(one_q_type, dtype=np.int64)
        self.q_anchor_kind = np.asarray(anchor_kind, dtype=np.int64)
        self.q_anchor_idx = np.asarray(anchor_idx, dtype=np.int64)
        self.q_anchor_side = np.asarray(anchor_side, dtype=np.int64)
        # two-qubit basis gates each skeleton gate lowers to
        self.base_two_qubit_count = int(np.where(self.kinds == 2, 3, 1).sum()) if len(kinds) else 0


def _run_kernel(skel: _Skeleton, l2p: np.ndarray, ctx: RoutingContext, seed: int):
    return sabre_route(
        skel.g0, skel.g1, skel.nxt0, skel.nxt1, skel.npred, l2p,
        ctx.dist, ctx.hdist, ctx.nbr, ctx.penalty,
        EXTENDED_SET_SIZE, EXTENDED_SET_WEIGHT, DECAY_DELTA, DECAY_RESET,
        ctx.noise_weight, seed,
    )


def route_layout_only(prep: PreparedCircuit, ctx: RoutingContext, layout: Layout,
                      reverse: bool = False, seed: int = -1) -> Layout:
    """Final layout after routing the whole skeleton (optionally reversed)."""
    skel = prep.backward if reverse else prep.forward
    l2p = np.asarray(layout.logical_to_physical, dtype=np.int64)
    if skel.g0.size == 0:
        return layout
    *_, final = _run_kernel(skel, l2p, ctx, seed)
    return Layout(tuple(int(p) for p in final))


@dataclass
class RoutingResult:
    """Everything a routing pass decided, before lowering into the basis."""

    prep: PreparedCircuit
    initial_layout: Layout
    final_layout: Layout
    segment_events: list[np.ndarray]
    segment_swaps: list[tuple[np.ndarray, np.ndarray]]
    segment_layouts: list[np.ndarray]  # layout at the end of each segment
    pos0: np.ndarray
    pos1: np.ndarray
    swap_count: int
    two_qubit_count: int
    log_fidelity: float = field(default=math.nan)

    @property
    def swaps(self) -> list[tuple[int, int]]:
        out = []
        for a, b in self.segment_swaps:
            out.extend(zip(a.tolist(), b.tolist()))
        return out


def route_prepared(prep: PreparedCircuit, ctx: RoutingContext, layout: Layout,
                   seed: int = -1) -> RoutingResult:
    layout.check(prep.num_qubits, ctx.num_physical)
    l2p = np.asarray(layout.logical_to_physical, dtype=np.int64)
    n2 = prep.num_two_qubit
    pos0 = np.full(n2, -1, np.int64)
    pos1 = np.full(n2, -1, np.int64)
    seg_events, seg_swaps, seg_layouts = [], [], []
    nswaps = 0
    for skel in prep.seg_skeletons:
        if skel.g0.size:
            events, sa, sb, p0, p1, l2p = _run_kernel(skel, l2p, ctx, seed)
            executed = events >= 0
            events[executed] = skel.gates[events[executed]]
            pos0[skel.gates] = p0
            pos1[skel.gates] = p1
        else:
            events = np.empty(0, np.int64)
            sa = sb = np.empty(0, np.int64)
        seg_events.append(events)
        seg_swaps.append((sa, sb))
        seg_layouts.append(l2p.copy())
        nswaps += sa.size
    result = RoutingResult(
        prep, layout, Layout(tuple(int(p) for p in l2p)), seg_events, seg_swaps, seg_layouts,
        pos0, pos1, nswaps, prep.base_two_qubit_count + 3 * nswaps,
    )
    result.log_fidelity = _log_fidelity(result, ctx)
    return result


def _log_fidelity(res: RoutingResult, ctx: RoutingContext, relabel: np.ndarray | None = None) -> float:
    """Fidelity of the lowered circuit computed from the routing log alone.

    ``relabel`` maps every physical qubit to a replacement, scoring the same
    routed circuit placed elsewhere on the device.
    """
    prep = res.prep
    sigma = np.arange(ctx.num_physical) if relabel is None else relabel
    terms = []
    if prep.num_two_qubit:
        a, b, kinds = sigma[res.pos0], sigma[res.pos1], prep.kinds
        link_cost = ctx.log_link[a, b]
        cost = np.where(
            kinds == 0,
            link_cost + ctx.cx_a[a] + ctx.cx_b[b],
            np.where(kinds == 1, link_cost + ctx.ecr_a[a] + ctx.ecr_b[b], ctx.swap_log_cost(a, b)),
        )
        terms.append(cost)
    for sa, sb in res.segment_swaps:
        if sa.size:
            terms.append(ctx.swap_log_cost(sigma[sa], sigma[sb]))
    if prep.q_wire.size:
        init = np.asarray(res.initial_layout.logical_to_physical, dtype=np.int64)
        pos = init[prep.q_wire]
        gate_mask = prep.q_anchor_kind == 1
        if gate_mask.any():
            k = prep.q_anchor_idx[gate_mask]
            side = prep.q_anchor_side[gate_mask]
            pos[gate_mask] = np.where(side == 0, res.pos0[k], res.pos1[k])
        bar_mask = prep.q_anchor_kind == 2
        if bar_mask.any():
            layouts = np.stack(res.segment_layouts)
            pos[bar_mask] = layouts[prep.q_anchor_idx[bar_mask], prep.q_wire[bar_mask]]
        terms.append(ctx.log_1q[sigma[pos], prep.q_type])
    if not terms:
        return 0.0
    return math.fsum(np.concatenate(terms).tolist())


def interaction_graph(res: RoutingResult) -> tuple[set[int], set[tuple[int, int]]]:
    """Physical qubits holding logical state and the links the routed circuit uses."""
    nodes = set(res.initial_layout.logical_to_physical)
    edges = set()
    if res.prep.num_two_qubit:
        edges.update(zip(res.pos0.tolist(), res.pos1.tolist()))
    for sa, sb in res.segment_swaps:
        edges.update(zip(sa.tolist(), sb.tolist()))
    edges = {link(a, b) for a, b in edges}
    for a, b in edges:
        nodes.update((a, b))
    return nodes, edges


def post_layout(res: RoutingResult, ctx: RoutingContext, max_mappings: int = POST_LAYOUT_MAPPINGS) -> Layout:
    """Best re-placement of a routed circuit onto an isomorphic part of the device.

    Every subgraph monomorphism of the used links into the coupling graph
    moves the circuit without changing its gates; up to ``max_mappings`` are
    scored by fidelity. Qubits that never take part in a two-qubit gate are
    then put on the free qubits with the cheapest single-qubit errors.
    Returns the initial layout that the best placement implies.
    """
    nodes, edges = interaction_graph(res)
    pattern = nx.Graph(list(edges))
    full = ctx.graph()
    n = ctx.num_physical
    best_sigma, best = None, -math.inf
    matcher = isomorphism.GraphMatcher(full, pattern)
    for k, mapping in enumerate(matcher.subgraph_monomorphisms_iter()):
        if k >= max_mappings:
            break
        sigma = np.full(n, -1, np.int64)
        for phys, pat in mapping.items():
            sigma[pat] = phys
        score = _log_fidelity(res, ctx, _complete(sigma))
        if score > best + 1e-12 * abs(best) or best_sigma is None:
            best, best_sigma = score, sigma
    if best_sigma is None:
        best_sigma = np.full(n, -1, np.int64)
        for p in pattern.nodes:
            best_sigma[p] = p
    # lone qubits: the worst single-qubit load takes the best free qubit
    lone = sorted(nodes - set(pattern.nodes))
    if lone:
        free = [p for p in range(n) if p not in set(best_sigma[best_sigma >= 0].tolist())]
        quality = np.nan_to_num(ctx.log_1q[:, :4], nan=-np.inf).sum(axis=1)
        free.sort(key=lambda p: (-quality[p], p))
        for p, q in zip(lone, free):
            best_sigma[p] = q
    init = res.initial_layout.logical_to_physical
    return Layout(tuple(int(best_sigma[p]) for p in init))


def _complete(sigma: np.ndarray) -> np.ndarray:
    """Extend a partial relabelling to a permutation (unused qubits are never read)."""
    out = sigma.copy()
    out[out < 0] = 0
    return out


def materialize(res: RoutingResult, ctx: RoutingContext) -> tuple[Circuit, list[tuple[int, int]]]:
    """Lower a routing result into a physical circuit in the backend basis."""
    prep = res.prep
    basis = ctx.basis
    out: list[GateOp] = []
    l2p = list(res.initial_layout.logical_to_physical)
    p2l = [-1] * ctx.num_physical
    for q, p in enumerate(l2p):
        p2l[p] = q

    def emit_1q(ops):
        for op in ops:
            phys = (l2p[op.qubits[0]],)
            placed = GateOp(op.name, op.params, phys, op.clbits)
            out.extend(lower_single(placed, basis))

    emit_1q(prep.leading)
    swaps = []
    names = ("cx", "ecr", "swap")
    for seg, (events, (sa, sb)) in enumerate(zip(res.segment_events, res.segment_swaps)):
        for ev in events.tolist():
            if ev >= 0:
                a, b = int(res.pos0[ev]), int(res.pos1[ev])
                out.extend(lower_two_qubit(names[prep.kinds[ev]], a, b, basis))
                emit_1q(prep.after_gate.get(ev, ()))
            else:
                s = -ev - 1
                a, b = int(sa[s]), int(sb[s])
                swaps.append((a, b))
                out.extend(lower_two_qubit("swap", a, b, basis))
                la, lb = p2l[a], p2l[b]
                p2l[a], p2l[b] = lb, la
                if la >= 0:
                    l2p[la] = b
                if lb >= 0:
                    l2p[lb] = a
        if seg < len(prep.barriers):
            bar = prep.barriers[seg]
            out.append(GateOp("barrier", (), tuple(l2p[q] for q in bar.qubits)))
            emit_1q(prep.after_barrier.get(seg, ()))
    circuit = Circuit(ctx.num_physical, tuple(out), prep.circuit.num_clbits, is_physical=True)
    return circuit, swaps


def coupling_violations(circuit: Circuit, backend: Backend) -> list[tuple[int, int]]:
    edges = backend.coupling.edge_set
    return [link(*op.qubits) for op in circuit.ops if op.is_two_qubit and link(*op.qubits) not in edges]
