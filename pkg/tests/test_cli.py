"""End-to-end tests for the replica-tn command line."""

import csv
import json

import pytest

from replica_tn import ManifestError
from replica_tn.cli import (
    COLUMNS,
    EXIT_INVALID_MANIFEST,
    EXIT_OK,
    EXIT_PARTIAL_FAILURE,
    SCHEMA,
    build_parser,
    main,
    parse_int_list,
    parse_range,
)


def _read_csv(path):
    with open(path, encoding="utf-8") as f:
        first = f.readline()
        rows = list(csv.DictReader(f))
    return first, rows


def _run_csv(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--output", str(out)])
    return code, out


class TestParsers:
    def test_parse_range(self):
        assert parse_range("3..6", "--t") == (3, 4, 5, 6)
        assert parse_range("7", "--t") == (7,)
        with pytest.raises(ManifestError):
            parse_range("6..3", "--t")
        with pytest.raises(ManifestError):
            parse_range("a..b", "--t")

    def test_parse_int_list(self):
        assert parse_int_list("8,16, 32", "--N") == (8, 16, 32)
        with pytest.raises(ManifestError):
            parse_int_list("8,x", "--N")

    def test_every_subcommand_registered(self):
        parser = build_parser()
        for name in ("ipr", "purity", "coherence", "coherent-info", "xeb", "oracle", "reduce-bench"):
            args = parser.parse_args([name])
            assert args.command == name


class TestOutput:
    def test_csv_layout(self, tmp_path):
        code, out = _run_csv(tmp_path, "ipr", "--N", "2", "--t", "1")
        assert code == EXIT_OK
        first, rows = _read_csv(out)
        assert first.strip() == f"# schema: {SCHEMA}"
        assert tuple(rows[0].keys()) == COLUMNS
        row = rows[0]
        assert float(row["value"]) == pytest.approx(0.4, rel=1e-12)
        assert float(row["reference_value"]) == pytest.approx(0.4, rel=1e-12)
        assert float(row["deviation"]) < 1e-12
        assert row["error"] == ""
        assert row["ensemble"] == "unitary"

    def test_json_layout(self, tmp_path):
        out = tmp_path / "out.json"
        code = main(["ipr", "--N", "4,2", "--t", "1..3", "--format", "json", "--output", str(out)])
        assert code == EXIT_OK
        payload = json.loads(out.read_text())
        assert payload["schema"] == SCHEMA
        keys = [(r["N"], r["t"]) for r in payload["records"]]
        assert keys == [(2, 1), (2, 2), (2, 3), (4, 1), (4, 2), (4, 3)]
        assert set(payload["records"][0]) == set(COLUMNS)

    def test_stdout(self, capsys):
        assert main(["ipr", "--N", "2", "--t", "1"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == f"# schema: {SCHEMA}"
        assert lines[1].split(",") == list(COLUMNS)
        assert len(lines) == 3

    def test_rows_do_not_depend_on_thread_count(self, tmp_path):
        argv = ["purity", "--N", "4,6,8", "--t", "1..6"]
        _, one = _run_csv(tmp_path, *argv, "--threads", "1", name="one.csv")
        _, many = _run_csv(tmp_path, *argv, "--threads", "3", name="many.csv")
        rows_one, rows_many = _read_csv(one)[1], _read_csv(many)[1]
        for a, b in zip(rows_one, rows_many):
            a.pop("wall_time_s")
            b.pop("wall_time_s")
        assert rows_one == rows_many

    def test_diagnostics_lines(self, tmp_path):
        diag = tmp_path / "diag.jsonl"
        code, _ = _run_csv(tmp_path, "ipr", "--N", "4", "--t", "1..3", "--diagnostics", str(diag))
        assert code == EXIT_OK
        records = [json.loads(line) for line in diag.read_text().splitlines()]
        assert [r["layer"] for r in records] == [2, 3]
        assert all(r["N"] == 4 for r in records)
        assert records[0]["parity"] == "even"

    def test_depths_of_one_chain_share_an_evolution(self, tmp_path):
        diag = tmp_path / "diag.jsonl"
        code, out = _run_csv(
            tmp_path, "ipr", "--N", "4,6", "--t", "1..4", "--threads", "4", "--diagnostics", str(diag)
        )
        assert code == EXIT_OK
        rows = _read_csv(out)[1]
        assert [(int(r["N"]), int(r["t"])) for r in rows] == [(N, t) for N in (4, 6) for t in range(1, 5)]
        records = [json.loads(line) for line in diag.read_text().splitlines()]
        assert sorted((r["N"], r["layer"]) for r in records) == [(N, t) for N in (4, 6) for t in range(2, 5)]


class TestSubcommands:
    def test_purity_random_walk_reference(self, tmp_path):
        code, out = _run_csv(tmp_path, "purity", "--N", "8", "--t", "1..12", "--reference", "rw")
        assert code == EXIT_OK
        for row in _read_csv(out)[1]:
            assert float(row["deviation"]) <= 1e-8 * float(row["reference_value"])

    def test_purity_page_reference(self, tmp_path):
        code, out = _run_csv(tmp_path, "purity", "--N", "2", "--t", "1", "--region", "1..1", "--d", "3")
        assert code == EXIT_OK
        row = _read_csv(out)[1][0]
        assert float(row["value"]) == pytest.approx(0.6, rel=1e-12)
        assert float(row["reference_value"]) == pytest.approx(0.6, rel=1e-12)

    def test_coherence_full_noise(self, tmp_path):
        code, out = _run_csv(tmp_path, "coherence", "--N", "4", "--t", "2..3", "--p", "1.0")
        assert code == EXIT_OK
        for row in _read_csv(out)[1]:
            assert abs(float(row["value"])) < 1e-10
            assert float(row["reference_value"]) == 0.0

    def test_coherent_info_noiseless(self, tmp_path):
        code, out = _run_csv(tmp_path, "coherent-info", "--N", "6", "--t", "1..5", "--K", "2")
        assert code == EXIT_OK
        for row in _read_csv(out)[1]:
            assert float(row["value"]) == pytest.approx(1.0, abs=1e-9)
            assert float(row["reference_value"]) == pytest.approx(1.0)

    def test_xeb_reference(self, tmp_path):
        code, out = _run_csv(tmp_path, "xeb", "--N", "2", "--t", "1")
        assert code == EXIT_OK
        row = _read_csv(out)[1][0]
        # one Haar gate on two qubits: 4 · 2/5 − 1
        assert float(row["value"]) == pytest.approx(0.6, rel=1e-12)
        assert float(row["reference_value"]) == pytest.approx(0.6, rel=1e-12)

    def test_noisy_xeb_has_no_reference(self, tmp_path):
        code, out = _run_csv(tmp_path, "xeb", "--N", "4", "--t", "1..3", "--device", "dep:0.1")
        assert code == EXIT_OK
        rows = _read_csv(out)[1]
        assert all(row["reference_value"] == "" for row in rows)
        values = [float(row["value"]) for row in rows]
        assert values[0] > values[1] > values[2] > 0.0

    def test_oracle_columns(self, tmp_path):
        code, out = _run_csv(tmp_path, "oracle", "--N", "4", "--t", "2", "--samples", "400", "--seed", "3")
        assert code == EXIT_OK
        row = _read_csv(out)[1][0]
        assert int(row["n_samples"]) == 400
        se = float(row["std_error"])
        assert se > 0.0
        assert float(row["deviation"]) <= 4.0 * se

    def test_reduce_bench(self, tmp_path):
        code, out = _run_csv(tmp_path, "reduce-bench", "--k", "3", "--N", "4", "--t", "1..3")
        assert code == EXIT_OK
        rows = _read_csv(out)[1]
        assert len(rows) == 3
        for row in rows:
            assert int(row["n_basis_full"]) == 6
            assert int(row["n_basis_reduced"]) == 5
            assert float(row["value"]) == pytest.approx(float(row["reference_value"]), rel=1e-9)
            assert float(row["wall_time_full_s"]) >= 0.0


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ["ipr", "--N", "5"],
        ["ipr", "--t", "0"],
        ["ipr", "--ensemble", "symplectic"],
        ["ipr", "--k", "9"],
        ["ipr", "--channel", "amp:0.1"],
        ["purity", "--N", "8", "--region", "1..10"],
        ["coherence", "--k", "3"],
        ["coherent-info", "--N", "4", "--K", "3"],
        ["oracle", "--ensemble", "clifford"],
        ["oracle", "--observable", "entropy"],
        ["xeb", "--device", "dep:2"],
    ])
    def test_invalid_manifest(self, argv, tmp_path, capsys):
        out = tmp_path / "never.csv"
        assert main([*argv, "--output", str(out)]) == EXIT_INVALID_MANIFEST
        assert "replica-tn: error:" in capsys.readouterr().err
        assert not out.exists()

    def test_partial_failure(self, tmp_path, monkeypatch):
        monkeypatch.setenv("REPLICA_TN_MAX_STATEVECTOR_DIM", "16")
        code, out = _run_csv(tmp_path, "oracle", "--N", "4,8", "--t", "1..2", "--samples", "20")
        assert code == EXIT_PARTIAL_FAILURE
        rows = _read_csv(out)[1]
        ok = [r for r in rows if r["N"] == "4"]
        failed = [r for r in rows if r["N"] == "8"]
        assert all(r["error"] == "" for r in ok)
        assert len(failed) == 2
        assert all(r["error"].startswith("ResourceError") for r in failed)
        assert all(r["value"] == "" for r in failed)
