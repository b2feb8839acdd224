"""Tests for the command-line interface."""

import json

import pytest

from betacircuits.circuit import format_label_table, format_nnf
from betacircuits.cli import main
from betacircuits.examples import burglary_circuit, burglary_labels


@pytest.fixture()
def burglary_files(tmp_path):
    circuit = tmp_path / "burglary.nnf"
    labels = tmp_path / "burglary.labels"
    circuit.write_text(format_nnf(burglary_circuit()))
    labels.write_text(format_label_table(burglary_labels()))
    return circuit, labels


def run(capsys, *argv):
    rc = main([str(a) for a in argv])
    out = capsys.readouterr()
    return rc, out.out, out.err


class TestInfer:
    @pytest.mark.parametrize("backend", ["prob", "sl", "mm", "cpb", "mc"])
    def test_all_backends_print_four_fields(self, burglary_files, capsys,
                                            backend):
        circuit, labels = burglary_files
        rc, out, _ = run(capsys, "infer", "--circuit", circuit,
                         "--labels", labels, "--query", "1",
                         "--backend", backend)
        assert rc == 0
        fields = out.split()
        assert len(fields) == 4
        mean = float(fields[0])
        # mc reports the exact posterior mean E[P(q|e)], which sits a
        # ratio-bias of O(1/strength) away from the first-order 5/14.
        assert mean == pytest.approx(5.0 / 14.0, abs=0.05)
        assert float(fields[1]) >= 0.0
        assert float(fields[2]) > 0.0 and float(fields[3]) > 0.0

    def test_cpb_golden_output(self, burglary_files, capsys):
        circuit, labels = burglary_files
        rc, out, _ = run(capsys, "infer", "--circuit", circuit,
                         "--labels", labels, "--query", "1",
                         "--backend", "cpb")
        assert rc == 0
        mean, var, _, _ = out.split()
        assert float(mean) == pytest.approx(0.3571428571428571, abs=1e-12)
        assert float(var) == pytest.approx(0.04705831444690252, abs=1e-12)

    def test_query_from_evidence_file(self, burglary_files, tmp_path, capsys):
        circuit, labels = burglary_files
        cond = tmp_path / "cond.txt"
        cond.write_text("query 1\n")
        rc, out, _ = run(capsys, "infer", "--circuit", circuit,
                         "--labels", labels, "--evidence", cond,
                         "--backend", "prob")
        assert rc == 0
        assert float(out.split()[0]) == pytest.approx(5.0 / 14.0, abs=1e-12)

    def test_missing_query_is_usage_error(self, burglary_files, capsys):
        circuit, labels = burglary_files
        rc, _, err = run(capsys, "infer", "--circuit", circuit,
                         "--labels", labels, "--backend", "prob")
        assert rc == 2
        assert "no query" in err

    def test_invalid_circuit_fails_validation(self, burglary_files, tmp_path,
                                              capsys):
        _, labels = burglary_files
        bad = tmp_path / "bad.nnf"
        # AND whose children share a variable: not decomposable.
        bad.write_text("nnf 3 2 1\nL 1\nL -1\nA 2 0 1\n")
        rc, _, err = run(capsys, "infer", "--circuit", bad,
                         "--labels", labels, "--query", "1",
                         "--backend", "prob")
        assert rc == 2
        assert "error:" in err

    def test_parse_error_exit_code(self, burglary_files, tmp_path, capsys):
        _, labels = burglary_files
        bad = tmp_path / "bad.nnf"
        bad.write_text("nnf 2 1 1\nL 1\n")
        rc, _, err = run(capsys, "infer", "--circuit", bad,
                         "--labels", labels, "--query", "1",
                         "--backend", "prob")
        assert rc == 2

    def test_missing_file_exit_code(self, burglary_files, capsys):
        _, labels = burglary_files
        rc, _, _ = run(capsys, "infer", "--circuit", "/nonexistent.nnf",
                       "--labels", labels, "--query", "1",
                       "--backend", "prob")
        assert rc == 2

    def test_inconsistent_evidence_exit_code(self, tmp_path, capsys):
        circuit = tmp_path / "one.nnf"
        circuit.write_text("nnf 1 0 1\nL 1\n")
        labels = tmp_path / "one.labels"
        labels.write_text("")
        cond = tmp_path / "cond.txt"
        cond.write_text("query 1\nevidence 1 0\n")
        rc, _, err = run(capsys, "infer", "--circuit", circuit,
                         "--labels", labels, "--evidence", cond,
                         "--backend", "prob")
        assert rc == 3
        assert "error:" in err

    def test_mc_seed_reproducible(self, burglary_files, capsys):
        circuit, labels = burglary_files
        outs = []
        for _ in range(2):
            rc, out, _ = run(capsys, "infer", "--circuit", circuit,
                             "--labels", labels, "--query", "1",
                             "--backend", "mc", "--samples", "500",
                             "--seed", "7")
            assert rc == 0
            outs.append(out)
        assert outs[0] == outs[1]


class TestExperiment:
    def test_writes_metric_csvs(self, tmp_path, capsys):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({
            "model": "burglary", "n_ins": 10, "truth_draws": 10,
            "repetitions": 3, "backends": ["cpb"], "seed": 1,
            "golden_samples": 0}))
        out = tmp_path / "out"
        rc, _, _ = run(capsys, "experiment", "--config", config, "--out", out)
        assert rc == 0
        assert {p.name for p in out.iterdir()} == {
            "rmse.csv", "calibration.csv", "correlation.csv", "timing.csv"}

    def test_bad_config_exit_code(self, tmp_path, capsys):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"model": "nope"}))
        rc, _, err = run(capsys, "experiment", "--config", config,
                         "--out", tmp_path / "out")
        assert rc == 2
        assert "error:" in err
