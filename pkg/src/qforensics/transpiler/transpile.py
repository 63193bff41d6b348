"""Layout search and fidelity-based selection of the final mapping."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..backend import Backend
from ..circuit import Circuit
from .fidelity import FidelityScore, fidelity
from .routing import (
    DISTANCE_WEIGHT,
    NOISE_WEIGHT,
    PENALTY_EXPONENT,
    POST_LAYOUT_CANDIDATES,
    POST_LAYOUT_MAX_QUBITS,
    Layout,
    PreparedCircuit,
    RoutingContext,
    RoutingResult,
    materialize,
    post_layout,
    route_layout_only,
    route_prepared,
)

DEFAULT_TRIALS = 20
DEFAULT_SLACK = 0.05
DEFAULT_CAP = 50_000


class ExhaustiveCapError(ValueError):
    pass


@dataclass(frozen=True)
class TranspiledCircuit:
    circuit: Circuit
    initial_layout: Layout
    final_layout: Layout
    swap_count: int
    depth: int
    fidelity: FidelityScore
    swaps: tuple[tuple[int, int], ...] = ()
    seed: int | None = None
    trial: int = 0
    candidates_evaluated: int = 1

    @property
    def two_qubit_count(self) -> int:
        return self.circuit.num_two_qubit_gates()

    def sidecar(self) -> dict:
        return {
            "initial_layout": list(self.initial_layout.logical_to_physical),
            "final_layout": list(self.final_layout.logical_to_physical),
            "swap_count": self.swap_count,
            "depth": self.depth,
            "fidelity": self.fidelity.value,
            "log_fidelity": self.fidelity.log_value,
            "seed": self.seed,
            "trial": self.trial,
        }


def _finish(res: RoutingResult, ctx: RoutingContext, seed, trial, evaluated) -> TranspiledCircuit:
    circuit, swaps = materialize(res, ctx)
    score = fidelity(circuit, ctx.backend.calibration)
    return TranspiledCircuit(
        circuit, res.initial_layout, res.final_layout, res.swap_count, circuit.depth(),
        score, tuple(swaps), seed, trial, evaluated,
    )


def _check_inputs(circuit: Circuit, backend: Backend):
    if circuit.is_physical:
        raise ValueError("transpile expects a logical circuit")
    if circuit.num_qubits > backend.num_qubits:
        raise ValueError(
            f"circuit needs {circuit.num_qubits} qubits, backend {backend.name!r} has {backend.num_qubits}"
        )


def route(circuit: Circuit, backend: Backend, layout: Layout, seed: int | None = None,
          noise_weight: float = NOISE_WEIGHT, distance_weight: float = DISTANCE_WEIGHT,
          penalty_exponent: float = PENALTY_EXPONENT) -> TranspiledCircuit:
    """Route ``circuit`` from a fixed initial layout and lower it into the basis.

    With ``seed=None`` equal-score SWAP candidates resolve to the first one
    found; an integer seed breaks such ties at random, reproducibly.
    """
    _check_inputs(circuit, backend)
    ctx = RoutingContext.for_backend(backend, noise_weight, distance_weight, penalty_exponent)
    prep = PreparedCircuit(circuit, backend.basis_gates)
    res = route_prepared(prep, ctx, layout, -1 if seed is None else int(seed))
    return _finish(res, ctx, seed, 0, 1)


def _select(cands: list[tuple], slack: float, depth_of) -> int:
    """Pick from ``(index, two_qubit_count, swap_count, log_fidelity)`` tuples.

    The pool keeps candidates within ``slack`` of the lowest two-qubit gate
    count; the highest fidelity wins, then fewer SWAPs, lower depth, lower index.
    """
    min2 = min(c[1] for c in cands)
    pool = [c for c in cands if c[1] <= min2 * (1.0 + slack) + 1e-9]
    best = max(c[3] for c in pool)
    tied = [c for c in pool if math.isclose(c[3], best, rel_tol=1e-12, abs_tol=1e-15)]
    if len(tied) == 1:
        return tied[0][0]
    fewest = min(c[2] for c in tied)
    tied = [c for c in tied if c[2] == fewest]
    if len(tied) == 1:
        return tied[0][0]
    return min(tied, key=lambda c: (depth_of(c[0]), c[0]))[0]


def _pool_leaders(cands: list[tuple], slack: float, count: int) -> list[int]:
    """Indices of the ``count`` highest-fidelity candidates inside the slack band."""
    min2 = min(c[1] for c in cands)
    pool = [c for c in cands if c[1] <= min2 * (1.0 + slack) + 1e-9]
    pool.sort(key=lambda c: (-c[3], c[2], c[0]))
    return [c[0] for c in pool[:count]]


def _routers(backend: Backend, ctx: RoutingContext) -> list[RoutingContext]:
    """Routing passes applied to each layout; shared by heuristic and exhaustive search."""
    if backend.num_qubits > POST_LAYOUT_MAX_QUBITS:
        return [ctx]
    # a distance-only pass finds the low-SWAP routes the candidate pool is anchored on
    return [ctx, RoutingContext.for_backend(backend, 0.0, 0.0, ctx.penalty_exponent)]


def _raise_if_uncalibrated(res: RoutingResult, ctx: RoutingContext):
    if math.isnan(res.log_fidelity):
        circuit, _ = materialize(res, ctx)
        fidelity(circuit, ctx.backend.calibration)  # raises naming the missing entry
        raise AssertionError("fast fidelity path disagrees with calibration lookup")


def transpile(circuit: Circuit, backend: Backend, trials: int = DEFAULT_TRIALS, seed: int = 0,
              slack: float = DEFAULT_SLACK, noise_weight: float = NOISE_WEIGHT,
              distance_weight: float = DISTANCE_WEIGHT,
              penalty_exponent: float = PENALTY_EXPONENT) -> TranspiledCircuit:
    """Best-of-``trials`` layout search.

    Trial ``t`` draws a random injective layout from ``seed + t`` and refines
    it with one forward and one backward routing pass. On backends of up to
    ``POST_LAYOUT_MAX_QUBITS`` qubits the search widens: a distance-only
    router repeats the trial without noise terms, the raw layout is routed
    too (refinement occasionally lands somewhere worse), and the leading
    candidates are re-placed onto their best-fidelity isomorphic spot
    (:func:`post_layout`) and routed again from there. Every candidate is a
    deterministic route from some layout, which keeps
    :func:`transpile_exhaustive` an upper bound. The winner is chosen by :func:`_select`; candidate order (and so
    the last tie-break) is trial index first.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if slack < 0:
        raise ValueError(f"slack must be non-negative, got {slack}")
    _check_inputs(circuit, backend)
    ctx = RoutingContext.for_backend(backend, noise_weight, distance_weight, penalty_exponent)
    prep = PreparedCircuit(circuit, backend.basis_gates)
    small = backend.num_qubits <= POST_LAYOUT_MAX_QUBITS
    routers = _routers(backend, ctx)
    results: list[RoutingResult] = []
    owner: list[tuple[int, int]] = []  # (trial, router index)
    for t in range(trials):
        rng = np.random.default_rng(seed + t)
        raw = Layout.random(circuit.num_qubits, backend.num_qubits, rng)
        for k, router in enumerate(routers):
            refined = route_layout_only(prep, router, raw)
            refined = route_layout_only(prep, router, refined, reverse=True)
            for layout in dict.fromkeys((refined, raw) if small else (refined,)):
                res = route_prepared(prep, router, layout)
                _raise_if_uncalibrated(res, ctx)
                results.append(res)
                owner.append((t, k))
    cands = [(i, r.two_qubit_count, r.swap_count, r.log_fidelity) for i, r in enumerate(results)]
    if small:
        seen = {(r.initial_layout, o[1]) for r, o in zip(results, owner)}
        for i in _pool_leaders(cands, slack, POST_LAYOUT_CANDIDATES):
            if not results[i].two_qubit_count:
                continue
            t, k = owner[i]
            moved = post_layout(results[i], ctx)
            if (moved, k) in seen:
                continue
            seen.add((moved, k))
            res = route_prepared(prep, routers[k], moved)
            results.append(res)
            owner.append((t, k))
            cands.append((len(results) - 1, res.two_qubit_count, res.swap_count, res.log_fidelity))
    done: dict[int, TranspiledCircuit] = {}

    def finished(i):
        if i not in done:
            t = owner[i][0]
            done[i] = _finish(results[i], ctx, seed + t, t, len(results))
        return done[i]

    best = _select(cands, slack, lambda i: finished(i).depth)
    return finished(best)


def count_layouts(num_logical: int, num_physical: int) -> int:
    return math.perm(num_physical, num_logical)


def transpile_exhaustive(circuit: Circuit, backend: Backend, slack: float = DEFAULT_SLACK,
                         cap: int = DEFAULT_CAP, noise_weight: float = NOISE_WEIGHT,
                         distance_weight: float = DISTANCE_WEIGHT,
                         penalty_exponent: float = PENALTY_EXPONENT) -> TranspiledCircuit:
    """Route from every injective layout with every routing pass :func:`transpile` uses, then select alike."""
    _check_inputs(circuit, backend)
    total = count_layouts(circuit.num_qubits, backend.num_qubits)
    if total > cap:
        raise ExhaustiveCapError(f"{total} layouts exceed the cap of {cap}")
    ctx = RoutingContext.for_backend(backend, noise_weight, distance_weight, penalty_exponent)
    prep = PreparedCircuit(circuit, backend.basis_gates)
    layouts = [Layout(p) for p in itertools.permutations(range(backend.num_qubits), circuit.num_qubits)]
    routers = _routers(backend, ctx)
    cands = []
    for i, layout in enumerate(layouts):
        for k, router in enumerate(routers):
            res = route_prepared(prep, router, layout)
            _raise_if_uncalibrated(res, ctx)
            cands.append((i * len(routers) + k, res.two_qubit_count, res.swap_count, res.log_fidelity))
    done: dict[int, TranspiledCircuit] = {}

    def finished(j):
        if j not in done:
            i, k = divmod(j, len(routers))
            res = route_prepared(prep, routers[k], layouts[i])
            done[j] = _finish(res, ctx, None, i, total)
        return done[j]

    return finished(_select(cands, slack, lambda i: finished(i).depth))
