import json
import subprocess
import sys

import pytest

from qforensics import qasm
from qforensics.backend import falcon_map, load_backend, save_backend, synth_backend
from qforensics.cli import main
from qforensics.schemas import BACKEND, MANIFEST, REPORT, SIDECAR, validate
from qforensics.transpiler import coupling_violations


@pytest.fixture(scope="module")
def backend_file(tmp_path_factory):
    out = tmp_path_factory.mktemp("b")
    assert main(["gen-backend", "--topology", "falcon", "--seed", "3", "--out", str(out)]) == 0
    return out / "backend.json"


def test_gen_backend_topologies(tmp_path):
    assert main(["gen-backend", "--out", str(tmp_path), "--log-uniform"]) == 0
    b = load_backend(tmp_path / "backend.json")
    assert (b.num_qubits, len(b.coupling.edges)) == (127, 144)
    validate(json.loads((tmp_path / "backend.json").read_text()), BACKEND)
    assert main(["gen-backend", "--topology", "heavy-hex", "--distance", "3", "--out", str(tmp_path),
                 "--output", "hh.json"]) == 0
    assert load_backend(tmp_path / "hh.json").num_qubits == 23


def test_gen_backend_from_edges(tmp_path):
    edges = tmp_path / "edges.json"
    edges.write_text(json.dumps([[0, 1], [1, 2], [2, 3], [3, 0]]))
    assert main(["gen-backend", "--topology", "file", "--edges", str(edges), "--out", str(tmp_path)]) == 0
    assert load_backend(tmp_path / "backend.json").coupling.edges == ((0, 1), (0, 3), (1, 2), (2, 3))


def test_bad_range_is_usage_error(tmp_path, capsys):
    assert main(["gen-backend", "--low", "0.02", "--high", "0.01", "--out", str(tmp_path)]) == 2
    assert "low" in capsys.readouterr().err
    assert not (tmp_path / "backend.json").exists()


def test_unknown_flag_is_usage_error(tmp_path):
    assert main(["gen-backend", "--bogus"]) == 2
    assert main([]) == 2


def test_pipeline_commands(tmp_path, backend_file):
    c, t, x = tmp_path / "c", tmp_path / "t", tmp_path / "x"
    assert main(["gen-circuits", "--qubits", "12", "--depth", "6", "--count", "3", "--out", str(c)]) == 0
    assert sorted(p.name for p in c.glob("*.qasm")) == ["circuit_s0.qasm", "circuit_s1.qasm", "circuit_s2.qasm"]
    assert main(["transpile", "--backend", str(backend_file), "--input", str(c), "--trials", "3",
                 "--out", str(t)]) == 0
    backend = load_backend(backend_file)
    for q in t.glob("*.qasm"):
        circ = qasm.load(q)
        assert circ.is_physical and coupling_violations(circ, backend) == []
        side = json.loads(q.with_suffix(".json").read_text())
        validate(side, SIDECAR)
        assert set(side) >= {"initial_layout", "final_layout", "swap_count", "depth", "fidelity", "seed"}
    assert main(["extract", "--input", str(t), "--backend", str(backend_file), "--out", str(x)]) == 0
    lines = (x / "frequencies.csv").read_text().splitlines()
    assert lines[0] == "link,count" and len(lines) == 29
    assert main(["rank", "--frequencies", str(x / "frequencies.csv"), "--out", str(x)]) == 0
    assert main(["rank", "--backend", str(backend_file), "--out", str(x)]) == 0
    assert main(["compare", "--forensic", str(x / "ranking_forensic.csv"),
                 "--truth", str(x / "ranking_truth.csv"), "--out", str(x)]) == 0
    report = json.loads((x / "report.json").read_text())
    validate(report, REPORT)
    assert report["fraction_within"]["5"] == 1.0
    assert (x / "histogram.svg").read_text().startswith("<svg")


def test_exhaustive_flag(tmp_path):
    b = synth_backend(falcon_map(), 0)
    from qforensics.backend import line_map
    small = synth_backend(line_map(4), 0)
    save_backend(small, tmp_path / "small.json")
    qasm_file = tmp_path / "in.qasm"
    qasm_file.write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[3];\ncx q[0],q[2];\nh q[1];\n')
    assert main(["transpile", "--backend", str(tmp_path / "small.json"), "--input", str(qasm_file),
                 "--exhaustive", "--out", str(tmp_path / "ex")]) == 0
    assert (tmp_path / "ex" / "in.qasm").exists()
    save_backend(b, tmp_path / "big.json")
    # layout count over the cap is a pipeline failure
    assert main(["transpile", "--backend", str(tmp_path / "big.json"), "--input", str(qasm_file),
                 "--exhaustive", "--cap", "100", "--out", str(tmp_path / "ex2")]) == 4


def test_compare_mismatch_exits_nonzero(tmp_path):
    (tmp_path / "a.csv").write_text("link,bin\n0-1,1\n1-2,2\n")
    (tmp_path / "b.csv").write_text("link,bin\n0-1,1\n2-3,2\n")
    assert main(["compare", "--forensic", str(tmp_path / "a.csv"), "--truth", str(tmp_path / "b.csv"),
                 "--out", str(tmp_path)]) == 3
    assert not (tmp_path / "report.json").exists()


def test_input_errors(tmp_path, backend_file, capsys):
    assert main(["transpile", "--backend", str(tmp_path / "none.json"), "--input", str(tmp_path),
                 "--out", str(tmp_path)]) == 3
    bad = tmp_path / "bad.qasm"
    bad.write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\ncx q[0] q[1];\n')
    assert main(["transpile", "--backend", str(backend_file), "--input", str(bad), "--out", str(tmp_path)]) == 3
    assert "line 4" in capsys.readouterr().err
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert main(["run", "--backend", str(broken), "--out", str(tmp_path)]) == 3


def test_run_rejects_empty_corpus(tmp_path, backend_file):
    assert main(["run", "--backend", str(backend_file), "--circuits", "0", "--out", str(tmp_path)]) == 2


def test_run_and_manifest_rerun(tmp_path, backend_file):
    out = tmp_path / "run"
    args = ["run", "--backend", str(backend_file), "--qubits", "20", "--depth", "8", "--circuits", "3",
            "--trials", "3", "--bins", "4", "--out", str(out)]
    assert main(args) == 0
    expected = {"backend.json", "frequencies.csv", "ranking_forensic.csv", "ranking_truth.csv", "report.json",
                "histogram.svg", "manifest.json", "corpus", "transpiled"}
    assert expected <= {p.name for p in out.iterdir()}
    validate(json.loads((out / "manifest.json").read_text()), MANIFEST)
    again = tmp_path / "again"
    assert main(["run", "--manifest", str(out / "manifest.json"), "--out", str(again)]) == 0
    for name in ("frequencies.csv", "report.json"):
        assert (out / name).read_bytes() == (again / name).read_bytes()


def test_manifest_detects_changed_backend(tmp_path):
    b = tmp_path / "b.json"
    save_backend(synth_backend(falcon_map(), 1), b)
    out = tmp_path / "run"
    assert main(["run", "--backend", str(b), "--qubits", "10", "--depth", "4", "--circuits", "1",
                 "--trials", "1", "--out", str(out)]) == 0
    save_backend(synth_backend(falcon_map(), 2), b)
    assert main(["run", "--manifest", str(out / "manifest.json"), "--out", str(tmp_path / "x")]) == 3


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qforensics", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("gen-backend", "gen-circuits", "transpile", "extract", "rank", "compare", "run"):
        assert cmd in proc.stdout
