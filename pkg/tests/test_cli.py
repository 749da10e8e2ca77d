import json
import subprocess
import sys

import pytest

from elicit import io
from elicit.cli import main
from elicit.model import Task

from conftest import DATA, mcq


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(path, obj):
    path.write_text(io.dumps(obj))
    return path


@pytest.fixture
def two_actions(tmp_path):
    t = Task.from_rows(["x", "y"], ["a", "b"], [[1, 0], [0, 1]])
    return write(tmp_path / "two.json", io.task_to_json(t))


class TestAnalyze:
    def test_safe_option(self, capsys):
        code, out, _ = run(capsys, "analyze", DATA / "safe_option.json")
        assert code == 0
        assert "6 edges, 2 blocks, cut vertex o" in out
        assert "MCB: 2 triangles" in out
        assert "Assumption 1: requires |Θ|≥m+3" in out
        assert "characterization: applicable" in out

    def test_mcq4(self, capsys):
        code, out, _ = run(capsys, "analyze", DATA / "mcq4.json")
        assert code == 0 and "complete graph, 1 block" in out and "MCB: 3 triangles" in out

    def test_tree(self, capsys, two_actions):
        code, out, _ = run(capsys, "analyze", two_actions)
        assert code == 0 and "1 edge, tree, 1 block" in out and "no cycles" in out

    def test_m_flag(self, capsys):
        _, out, _ = run(capsys, "analyze", DATA / "mcq4.json", "--m", "2")
        assert "(|Θ|=4, m=2: fails)" in out and "characterization: inapplicable" in out

    def test_graph_alias_dot_and_json(self, capsys, tmp_path):
        dot, js = tmp_path / "g.dot", tmp_path / "g.json"
        code, _, _ = run(capsys, "graph", DATA / "safe_option.json", "--dot", dot, "--json-out", js)
        assert code == 0
        assert dot.read_text().startswith('graph "adjacency"')
        assert json.loads(js.read_text())["cut_vertices"] == ["o"]


class TestAlign:
    def test_joint(self, capsys, tmp_path):
        cert = tmp_path / "cert.json"
        code, out, _ = run(capsys, "align", DATA / "mcq_joint.json", "--kind", "joint", "--json-out", cert)
        assert code == 0 and "aligned (joint), m=2" in out and "certificate check: ok" in out
        assert io.certificate_from_json(io.load_file(cert)).kind == "joint"

    def test_misaligned(self, capsys, tmp_path):
        js = tmp_path / "na.json"
        code, out, _ = run(capsys, "align", DATA / "mcq5_misaligned.json", "--json-out", js)
        assert code == 4 and "not aligned (edge-mismatch)" in out and "witness edge" in out
        assert json.loads(js.read_text())["aligned"] is False

    def test_blockwise(self, capsys):
        code, out, _ = run(capsys, "align", DATA / "safe_option.json", "--kind", "blockwise")
        assert code == 0 and "aligned (blockwise)" in out

    def test_decompose_kind(self, capsys):
        code, out, _ = run(capsys, "align", DATA / "mcq_x1.json", "--kind", "decompose")
        assert code == 0 and "rank(Y) = 3" in out

    def test_decompose_too_small(self, capsys):
        code, out, _ = run(capsys, "align", DATA / "mcq_x1.json", "--kind", "decompose", "--m", "2")
        assert code == 4 and "rank 3 > m" in out

    def test_bad_kind(self, capsys):
        assert run(capsys, "align", DATA / "mcq_joint.json", "--kind", "nonsense")[0] == 2


class TestMechanismAndVerify:
    def test_joint_bdm_then_verify(self, capsys, tmp_path):
        s = tmp_path / "s.json"
        code, out, _ = run(capsys, "mechanism", "joint-bdm", DATA / "mcq_joint.json", "--json-out", s)
        assert code == 0 and out.startswith("built joint-bdm: report dimension 2")
        code, out, _ = run(capsys, "verify", "--scheme", s, "--task", DATA / "mcq_joint.json", "--n", 10)
        assert code == 0 and out.startswith("pass at resolution n=10 (exact): 66 beliefs, 0 violation(s)")

    def test_joint_bdm_with_cert(self, capsys, tmp_path):
        cert = tmp_path / "c.json"
        run(capsys, "align", DATA / "mcq_joint.json", "--json-out", cert)
        code, _, _ = run(capsys, "mechanism", "joint-bdm", DATA / "mcq_joint.json", "--cert", cert)
        assert code == 0

    def test_joint_bdm_misaligned(self, capsys):
        assert run(capsys, "mechanism", "joint-bdm", DATA / "mcq5_misaligned.json")[0] == 4

    def test_blockwise_cert_has_no_mechanism(self, capsys, tmp_path):
        cert = tmp_path / "c.json"
        run(capsys, "align", DATA / "safe_option.json", "--kind", "blockwise", "--json-out", cert)
        assert run(capsys, "mechanism", "joint-bdm", DATA / "safe_option.json", "--cert", cert)[0] == 5

    def test_bdm_d_mode(self, capsys, tmp_path):
        s = tmp_path / "s.json"
        code, _, _ = run(capsys, "mechanism", "bdm", DATA / "mcq4.json", "--d", '["0", "1/2", "1", "0"]',
                         "--mode", "d", "--json-out", s)
        assert code == 0 and io.scheme_from_json(io.load_file(s)).name == "bdm[d]"

    def test_bdm_bad_d(self, capsys):
        assert run(capsys, "mechanism", "bdm", DATA / "mcq4.json", "--d", '["0", "1"]')[0] == 3

    def test_br(self, capsys):
        code, out, _ = run(capsys, "mechanism", "br", DATA / "mcq4.json")
        assert code == 0 and "report dimension 4" in out

    def test_csr(self, capsys, tmp_path):
        s = tmp_path / "s.json"
        assert run(capsys, "mechanism", "csr", DATA / "mcq_x1.json", "--json-out", s)[0] == 0
        assert run(capsys, "verify", "--scheme", s, "--task", DATA / "mcq_x1.json", "--n", 8)[0] == 0

    def test_hedging_fails_verify(self, capsys, tmp_path):
        s = tmp_path / "s.json"
        t = io.task_from_json(io.load_file(DATA / "tournament.json"))
        # Y(a) = u(a): one cell pools both actions
        q = write(tmp_path / "q.json", {"X": {a: [io.enc(t.row(a))] for a in t.actions}})
        code, _, _ = run(capsys, "mechanism", "coarse-csr", DATA / "tournament.json", "--questions", q,
                         "--partition", "PR,T", "--json-out", s)
        assert code == 0
        code, out, _ = run(capsys, "verify", "--scheme", s, "--task", DATA / "tournament.json", "--n", 20)
        assert code == 1 and out.startswith("fail") and "induced" in out

    def test_coarse_needs_partition(self, capsys):
        assert run(capsys, "mechanism", "coarse-csr", DATA / "tournament.json")[0] == 2

    def test_missing_questions(self, capsys):
        assert run(capsys, "mechanism", "csr", DATA / "mcq4.json")[0] == 2

    def test_grid_too_large(self, capsys, tmp_path, monkeypatch):
        s = tmp_path / "s.json"
        run(capsys, "mechanism", "bdm", DATA / "mcq4.json", "--json-out", s)
        monkeypatch.setenv("ELICIT_MAX_GRID", "10")
        code, _, err = run(capsys, "verify", "--scheme", s, "--task", DATA / "mcq4.json", "--n", 5)
        assert code == 6 and "ELICIT_MAX_GRID" in err

    def test_float_backend(self, capsys, tmp_path):
        s = tmp_path / "s.json"
        run(capsys, "mechanism", "bdm", DATA / "mcq4.json", "--backend", "float", "--json-out", s)
        code, out, _ = run(capsys, "verify", "--scheme", s, "--task", DATA / "mcq4.json", "--n", 6)
        assert code == 0 and "(float)" in out


class TestDecompose:
    @pytest.mark.parametrize("strategy,m", [("minimal", 3), ("full", 3)])
    def test_strategies(self, capsys, tmp_path, strategy, m):
        js = tmp_path / "d.json"
        code, out, _ = run(capsys, "decompose", DATA / "mcq_x1.json", "--strategy", strategy, "--json-out", js)
        assert code == 0 and f"m={m}" in out and "certificate check: ok" in out
        obj = io.load_file(js)
        t = io.task_from_json(obj["task"])
        assert io.questions_from_json(obj["task"], t).m == m

    def test_needs_single_question(self, capsys):
        assert run(capsys, "decompose", DATA / "mcq_joint.json")[0] == 3


class TestPipeline:
    def test_joint(self, capsys, tmp_path):
        code, out, _ = run(capsys, "pipeline", DATA / "mcq_joint.json", "--n", 10, "--out-dir", tmp_path)
        assert code == 0
        assert "aligned (joint), m=2" in out and "mechanism: joint-bdm" in out
        for name in ("graph", "certificate", "scheme", "report"):
            assert (tmp_path / f"{name}.json").exists()

    def test_misaligned(self, capsys, tmp_path):
        code, out, _ = run(capsys, "pipeline", DATA / "mcq5_misaligned.json", "--out-dir", tmp_path)
        assert code == 4 and "not aligned" in out
        assert (tmp_path / "alignment.json").exists() and not (tmp_path / "scheme.json").exists()

    def test_fallback(self, capsys):
        code, out, _ = run(capsys, "pipeline", DATA / "mcq5_misaligned.json", "--fallback", "csr", "--n", 6)
        assert code == 0 and "falling back to CSR" in out and "mechanism: csr" in out

    def test_x1_fallback_is_not_needed(self, capsys):
        code, out, _ = run(capsys, "pipeline", DATA / "mcq_x1.json", "--fallback", "csr", "--n", 10)
        assert code == 0 and "mechanism: joint-bdm" in out


class TestErrors:
    def test_malformed_json(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"states": [1, 2,}')
        code, _, err = run(capsys, "analyze", bad)
        assert code == 2 and f"{bad}:1:" in err

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "analyze", tmp_path / "nope.json")[0] == 2

    def test_dimension_error(self, capsys, tmp_path):
        bad = write(tmp_path / "bad.json", {"states": ["x", "y"], "actions": ["a"], "u": [["1", "2", "3"]]})
        code, _, err = run(capsys, "analyze", bad)
        assert code == 3 and "invalid dimensions" in err

    def test_no_subcommand(self, capsys):
        assert run(capsys)[0] == 2

    def test_help(self, capsys):
        assert run(capsys, "--help")[0] == 0

    def test_console_script(self, tmp_path):
        task = write(tmp_path / "t.json", io.task_to_json(mcq(3)))
        proc = subprocess.run([sys.executable, "-m", "elicit.cli", "analyze", str(task)],
                              capture_output=True, text=True)
        assert proc.returncode == 0 and "complete graph" in proc.stdout
