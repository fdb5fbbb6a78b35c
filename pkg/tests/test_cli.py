import csv
import json

import numpy as np
import pytest

from mtsc.cli import main, parse_weights
from mtsc.instance import hamming_instance, make_instance, serialize
from mtsc.lab import identity_code
from mtsc.prob import dsbs

H025 = 0.8112781244591328


@pytest.fixture
def dsbs_file(tmp_path):
    path = tmp_path / "dsbs.json"
    path.write_text(serialize(hamming_instance(dsbs(0.25).mass, 0, 0)))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(*argv):
    return main([str(a) for a in argv])


class TestSolve:
    def test_dsbs_both(self, dsbs_file, tmp_path):
        out = tmp_path / "out"
        code = run("solve", dsbs_file, "--out", out, "--starts", 4, "--weights", "1,0;1,1;0,1")
        assert code == 0
        outer = read_csv(out / "frontier_outer.csv")
        inner = read_csv(out / "frontier_inner.csv")
        assert list(outer[0]) == ["mu1", "mu2", "bound_kind", "R1", "R2", "sum", "candidate_id", "feasibility_residual"]
        assert float(outer[1]["sum"]) == pytest.approx(1 + H025, abs=1e-3)
        assert float(inner[1]["sum"]) == pytest.approx(1 + H025, abs=1e-3)
        gaps = [float(r["gap"]) for r in read_csv(out / "sandwich.csv")]
        assert max(abs(g) for g in gaps) < 1e-3
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["exit_code"] == 0 and manifest["overrides"] == {"starts": 4}

    def test_lf_endings(self, dsbs_file, tmp_path):
        out = tmp_path / "out"
        run("solve", dsbs_file, "--out", out, "--starts", 2, "--weights", "1,1", "--bound", "outer")
        assert b"\r\n" not in (out / "frontier_outer.csv").read_bytes()

    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run("solve", bad, "--out", tmp_path / "o") == 2

    def test_validation_error(self, tmp_path):
        doc = json.loads(serialize(hamming_instance(dsbs(0.25).mass, 0, 0)))
        doc["D1"] = -1
        path = tmp_path / "neg.json"
        path.write_text(json.dumps(doc))
        assert run("solve", path, "--out", tmp_path / "o") == 2

    def test_below_floor(self, tmp_path):
        inst = make_instance(dsbs(0.25).mass, np.full((2, 2), 0.3), 1 - np.eye(2), 0.1, 0.0)
        path = tmp_path / "floor.json"
        path.write_text(serialize(inst))
        assert run("solve", path, "--out", tmp_path / "o", "--weights", "1,1") == 3

    def test_thread_count_does_not_change_results(self, dsbs_file, tmp_path, monkeypatch):
        args = ["solve", dsbs_file, "--starts", 2, "--weights", "1,0;1,1;0,1", "--bound", "outer"]
        run(*args, "--out", tmp_path / "a")
        monkeypatch.setenv("MTSC_THREADS", "3")
        run(*args, "--out", tmp_path / "b")
        a = (tmp_path / "a" / "frontier_outer.csv").read_text()
        b = (tmp_path / "b" / "frontier_outer.csv").read_text()
        assert a == b


class TestVerify:
    def test_reverse_markov_chain(self, dsbs_file, tmp_path):
        out = tmp_path / "v"
        assert run("verify", dsbs_file, "--lemma", "reverse-markov", "--n", 3, "--out", out) == 0
        rows = read_csv(out / "checks.csv")
        assert all(r["pass"] == "true" for r in rows)

    def test_prop2(self, dsbs_file, tmp_path):
        assert run("verify", dsbs_file, "--lemma", "prop2", "--n", 2, "--out", tmp_path / "v") == 0

    def test_prop2_from_file(self, dsbs_file, tmp_path):
        from mtsc.cli import code_to_dict
        code = identity_code(hamming_instance(dsbs(0.25).mass, 0, 0), 2)
        path = tmp_path / "code.json"
        path.write_text(json.dumps(code_to_dict(code)))
        assert run("verify", dsbs_file, "--lemma", "prop2", "--n", 2, "--code", path, "--out", tmp_path / "v") == 0

    def test_lemma3_one_cell(self, dsbs_file, tmp_path):
        out = tmp_path / "v"
        code = run("verify", dsbs_file, "--lemma", "lemma3", "--n", 4, "--epsilon", 1.0, "--out", out)
        assert code == 5
        assert (out / "lemma3_audit.csv").exists()
        assert any(r["pass"] == "false" for r in read_csv(out / "checks.csv"))

    def test_distortion(self, dsbs_file, tmp_path):
        assert run("verify", dsbs_file, "--lemma", "distortion", "--n", 1, "--out", tmp_path / "v") == 0

    def test_cap(self, dsbs_file, tmp_path):
        assert run("verify", dsbs_file, "--lemma", "prop2", "--n", 14, "--out", tmp_path / "v") == 6


class TestBruteforce:
    def test_identity_achievable(self, tmp_path):
        path = tmp_path / "ind.json"
        path.write_text(serialize(hamming_instance(np.full((2, 2), 0.25), 0, 0).with_solver(starts=2)))
        out = tmp_path / "b"
        assert run("bruteforce", path, "--n", 1, "--R1", 1, "--R2", 1, "--epsilon", 0.01, "--out", out) == 0
        rows = {r["field"]: r["value"] for r in read_csv(out / "verdict.csv")}
        assert rows["verdict"] == "achievable"
        assert rows["inside_inner"] == "true"

    def test_zero_rate_not_achievable(self, dsbs_file, tmp_path):
        out = tmp_path / "b"
        assert run("bruteforce", dsbs_file, "--n", 1, "--R1", 0, "--R2", 0, "--epsilon", 0.01,
                   "--starts", 2, "--out", out) == 0
        rows = {r["field"]: r["value"] for r in read_csv(out / "verdict.csv")}
        assert rows["verdict"] == "not achievable"
        assert rows["inside_outer_relaxed"] == "false"
        assert json.loads((out / "codes.json").read_text())["mode"] == "exhaustive"

    def test_randomized_flagged(self, dsbs_file, tmp_path):
        out = tmp_path / "b"
        run("bruteforce", dsbs_file, "--n", 3, "--R1", 0.67, "--R2", 0.67, "--budget", 200,
            "--no-crosscheck", "--out", out)
        manifest = json.loads((out / "manifest.json").read_text())
        assert any("randomized" in n for n in manifest["notes"])


class TestBaseline:
    def test_both(self, tmp_path):
        path = tmp_path / "u.json"
        path.write_text(serialize(hamming_instance(np.full((2, 2), 0.25), 0.25, 0.11)))
        out = tmp_path / "bl"
        assert run("baseline", path, "--out", out) == 0
        rows = {r["quantity"]: float(r["bits"]) for r in read_csv(out / "baseline.csv")}
        assert rows["rd_x"] == pytest.approx(0.188722, abs=1e-4)
        assert rows["rd_y"] == pytest.approx(0.5, abs=1e-3)
        assert rows["sw_sum_floor"] == pytest.approx(2.0)


def test_parse_weights():
    assert parse_weights("1,0;0.5,0.5") == [(1.0, 0.0), (0.5, 0.5)]
    assert len(parse_weights(None)) == 17
