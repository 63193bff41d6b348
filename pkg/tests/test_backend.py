import itertools
import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qforensics.backend import (
    Backend,
    BackendError,
    BackendFormatError,
    BackendInvariantError,
    CalibrationTable,
    CouplingMap,
    DisconnectedError,
    backend_from_dict,
    backend_to_dict,
    distance_matrix,
    eagle_map,
    falcon_map,
    heavy_hex_map,
    line_map,
    link_key,
    load_backend,
    load_calibration_csv,
    loads_backend,
    parse_link_key,
    ring_map,
    save_backend,
    synth_backend,
    synth_calibration,
    shell_order,
    tiered_calibration,
)


def _nx(cmap):
    g = nx.Graph()
    g.add_nodes_from(range(cmap.num_qubits))
    g.add_edges_from(cmap.edges)
    return g


# bridge qubits of the 127-qubit IBM Eagle layout and the row qubits they join
EAGLE_BRIDGES = [
    (14, 0, 18), (15, 4, 22), (16, 8, 26), (17, 12, 30),
    (33, 20, 39), (34, 24, 43), (35, 28, 47), (36, 32, 51),
    (52, 37, 56), (53, 41, 60), (54, 45, 64), (55, 49, 68),
    (71, 58, 77), (72, 62, 81), (73, 66, 85), (74, 70, 89),
    (90, 75, 94), (91, 79, 98), (92, 83, 102), (93, 87, 106),
    (109, 96, 114), (110, 100, 118), (111, 104, 122), (112, 108, 126),
]


def test_eagle_counts():
    cmap = eagle_map()
    assert cmap.num_qubits == 127
    assert len(cmap.edges) == 144


def test_eagle_matches_ibm_numbering():
    cmap = eagle_map()
    for bridge, up, down in EAGLE_BRIDGES:
        assert cmap.has_edge(bridge, up) and cmap.has_edge(bridge, down)
        assert cmap.degree(bridge) == 2
    # row qubits are chained
    for a, b in [(0, 1), (12, 13), (18, 19), (31, 32), (113, 114), (125, 126)]:
        assert cmap.has_edge(a, b)
    assert not cmap.has_edge(13, 18)


def test_falcon_counts():
    cmap = falcon_map()
    assert (cmap.num_qubits, len(cmap.edges)) == (27, 28)
    assert nx.is_connected(_nx(cmap))
    assert max(cmap.degree(q) for q in range(27)) == 3


@pytest.mark.parametrize("d,nq,ne", [(3, 23, 24), (5, 65, 72), (7, 127, 144)])
def test_heavy_hex_family(d, nq, ne):
    cmap = heavy_hex_map(d)
    assert (cmap.num_qubits, len(cmap.edges)) == (nq, ne)
    g = _nx(cmap)
    assert nx.is_connected(g)
    assert all(deg <= 3 for _, deg in g.degree())
    # heavy-hex cells are 12-cycles; the graph is bipartite with no short cycles
    assert nx.is_bipartite(g)
    assert nx.girth(g) == 12


@pytest.mark.parametrize("d", [0, 1, 2, 4, -3])
def test_heavy_hex_rejects_bad_parameter(d):
    with pytest.raises(ValueError):
        heavy_hex_map(d)


def test_coupling_map_rejects_bad_edges():
    with pytest.raises(BackendInvariantError):
        CouplingMap(3, [(0, 0)])
    with pytest.raises(BackendInvariantError):
        CouplingMap(3, [(0, 1), (1, 0)])
    with pytest.raises(BackendInvariantError):
        CouplingMap(3, [(0, 5)])


def test_edges_are_normalized():
    cmap = CouplingMap(4, [(3, 2), (1, 0), (2, 1)])
    assert cmap.edges == ((0, 1), (1, 2), (2, 3))
    assert cmap.neighbors(1) == (0, 2)


def _small_maps():
    yield line_map(5)
    yield ring_map(8)
    yield falcon_map()
    yield heavy_hex_map(3)


@pytest.mark.parametrize("cmap", list(_small_maps()))
def test_distance_matrix_matches_networkx(cmap):
    d = distance_matrix(cmap)
    ref = dict(nx.all_pairs_shortest_path_length(_nx(cmap)))
    n = cmap.num_qubits
    for i in range(n):
        for j in range(n):
            assert d[i, j] == ref[i][j]


def test_distance_matrix_rejects_disconnected():
    with pytest.raises(DisconnectedError):
        distance_matrix(CouplingMap(6, [(0, 1), (1, 2), (3, 4)]))


@pytest.mark.parametrize("cmap", [line_map(6), ring_map(9), falcon_map(), heavy_hex_map(3)])
def test_distance_triangle_inequality(cmap):
    d = distance_matrix(cmap)
    n = cmap.num_qubits
    assert (d == d.T).all() and (np.diag(d) == 0).all()
    for i, j, k in itertools.product(range(n), repeat=3):
        assert d[i, k] <= d[i, j] + d[j, k]


def test_eagle_distances():
    d = distance_matrix(eagle_map())
    assert d.max() == nx.diameter(_nx(eagle_map()))


def test_link_keys():
    assert link_key((3, 1)) == "1-3"
    assert parse_link_key("4-2") == (2, 4)
    assert parse_link_key("2_4") == (2, 4)
    with pytest.raises(ValueError):
        parse_link_key("a-b")


def test_synth_calibration_ranges():
    cmap = eagle_map()
    cal = synth_calibration(cmap, 7, 0.003, 0.03, log_uniform=True)
    errs = np.array(list(cal.two_qubit_error.values()))
    assert set(cal.two_qubit_error) == set(cmap.edges)
    assert errs.min() >= 0.003 and errs.max() <= 0.03
    for q, gates in cal.single_qubit_error.items():
        assert gates["rz"] == 0.0
        assert 0 < gates["sx"] < 0.03 * 0.1 + 1e-12


def test_log_uniform_spreads_in_log_space():
    cmap = heavy_hex_map(9)
    cal = synth_calibration(cmap, 3, 0.003, 0.03, log_uniform=True)
    logs = np.log10(list(cal.two_qubit_error.values()))
    # median of a log-uniform draw sits near the geometric midpoint
    assert abs(np.median(logs) - np.log10(np.sqrt(0.003 * 0.03))) < 0.1


def test_synth_is_seeded():
    a = synth_calibration(falcon_map(), 11)
    b = synth_calibration(falcon_map(), 11)
    c = synth_calibration(falcon_map(), 12)
    assert dict(a.two_qubit_error) == dict(b.two_qubit_error)
    assert dict(a.two_qubit_error) != dict(c.two_qubit_error)


@pytest.mark.parametrize("low,high", [(0.02, 0.01), (-0.1, 0.2), (0.1, 1.0), (0.01, 0.01)])
def test_synth_rejects_bad_range(low, high):
    with pytest.raises(BackendInvariantError):
        synth_calibration(line_map(3), 0, low, high)


def test_calibration_rejects_out_of_range():
    with pytest.raises(BackendInvariantError):
        CalibrationTable({0: {"sx": 0.1}, 1: {"sx": 0.1}}, {(0, 1): 1.0})
    with pytest.raises(BackendInvariantError):
        CalibrationTable({0: {"sx": -0.1}, 1: {"sx": 0.1}}, {(0, 1): 0.5})


def test_backend_rejects_foreign_link():
    cmap = line_map(3)
    cal = CalibrationTable({q: {"sx": 0.001, "x": 0.001, "rz": 0.0, "id": 0.001} for q in range(3)},
                           {(0, 1): 0.01, (1, 2): 0.01, (0, 2): 0.01})
    with pytest.raises(BackendInvariantError, match="0-2"):
        Backend("bad", cmap, cal)


def test_backend_rejects_bad_basis():
    cal = synth_calibration(line_map(2), 0)
    with pytest.raises(BackendInvariantError):
        Backend("b", line_map(2), cal, frozenset({"cx", "ecr", "rz", "sx"}))
    with pytest.raises(BackendInvariantError):
        Backend("b", line_map(2), cal, frozenset({"cz", "rz", "sx"}))


def test_minimal_backend_file(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps({
        "name": "tiny", "num_qubits": 2, "edges": [[0, 1]], "basis_gates": ["ecr", "rz", "sx", "x"],
        "single_qubit_error": {"0": 0.001, "1": 0.001}, "two_qubit_error": {"0-1": 0.01},
        "timestamp": "t0",
    }))
    b = load_backend(path)
    assert dict(b.calibration.two_qubit_error) == {(0, 1): 0.01}


def test_tiered_calibration():
    cmap = falcon_map()
    cal = tiered_calibration(cmap, [0.002, 0.02, 0.2], [10, 10, 8], seed=4)
    values = sorted(cal.two_qubit_error.values())
    assert values == [0.002] * 10 + [0.02] * 10 + [0.2] * 8
    with pytest.raises(BackendInvariantError):
        tiered_calibration(cmap, [0.01, 0.02], [10, 10], seed=0)


def test_shell_order_prefixes_are_connected():
    for cmap, center in ((falcon_map(), 13), (eagle_map(), 60), (line_map(6), 0)):
        order = shell_order(cmap, center)
        assert sorted(order) == sorted(cmap.edges)
        # independent check: every prefix is one component containing the centre
        for k in range(1, len(order) + 1):
            g = nx.Graph(order[:k])
            assert center in g and nx.is_connected(g)


def test_tiered_calibration_in_given_order():
    cmap = falcon_map()
    order = shell_order(cmap, 13)
    cal = tiered_calibration(cmap, [0.002, 0.02, 0.2], [10, 9, 9], seed=0, order=order)
    assert [cal.two_qubit_error[e] for e in order] == [0.002] * 10 + [0.02] * 9 + [0.2] * 9
    with pytest.raises(BackendInvariantError):
        tiered_calibration(cmap, [0.01, 0.02], [14, 14], seed=0, order=order[:-1] + order[:1])


def test_json_round_trip(tmp_path):
    b = synth_backend(falcon_map(), 5)
    path = tmp_path / "b.json"
    save_backend(b, path)
    b2 = load_backend(path)
    assert b2.coupling.edges == b.coupling.edges
    assert dict(b2.calibration.two_qubit_error) == dict(b.calibration.two_qubit_error)
    assert b2.basis_gates == b.basis_gates
    assert backend_to_dict(b2) == backend_to_dict(b)


def test_json_errors_are_located():
    with pytest.raises(BackendFormatError, match="line 2"):
        loads_backend('{"name": "x",\n "edges": [}')
    good = backend_to_dict(synth_backend(line_map(3), 0))
    broken = dict(good)
    del broken["edges"]
    with pytest.raises(BackendFormatError, match="edges"):
        backend_from_dict(broken)
    wrong = json.loads(json.dumps(good))
    wrong["two_qubit_error"] = {"0-1": 0.01, "1-2": "high"}
    with pytest.raises(BackendError):
        backend_from_dict(wrong)


def test_scalar_single_qubit_error_expands():
    d = backend_to_dict(synth_backend(line_map(3), 0))
    d["single_qubit_error"] = {"0": 0.001, "1": 0.002, "2": 0.003}
    b = backend_from_dict(d)
    assert b.calibration.gate_error("sx", 1) == 0.002
    assert b.calibration.gate_error("x", 2) == 0.003


def test_calibration_csv(tmp_path):
    rows = ["qubit,gate,error"]
    for q in range(3):
        rows += [f"{q},sx,0.0003", f"{q},x,0.0003", f"{q},id,0.0003", f"{q},rz,0"]
    rows += ["0-1,ecr,0.01", "1_2,ecr,0.02"]
    path = tmp_path / "cal.csv"
    path.write_text("\n".join(rows) + "\n")
    cal = load_calibration_csv(path)
    assert cal.link_error(1, 0) == 0.01
    assert cal.link_error(2, 1) == 0.02
    Backend("csv", line_map(3), cal)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
def test_random_graphs_have_no_loops_or_duplicates(n, seed):
    rng = np.random.default_rng(seed)
    edges = {(i, i + 1) for i in range(n - 1)}
    for _ in range(n):
        a, b = sorted(rng.choice(n, 2, replace=False).tolist())
        edges.add((a, b))
    cmap = CouplingMap(n, sorted(edges))
    assert all(u < v for u, v in cmap.edges)
    assert len(set(cmap.edges)) == len(cmap.edges)
    assert cmap.is_connected()

