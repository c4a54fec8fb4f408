import json
import subprocess
import sys

import pytest

from geosemnav.cli import main


OFFICE = ["--floorplan", "office_fig3", "--target", "cup"]


def last_json(out: str) -> dict:
    """The CLI prints human text first and a JSON document last."""
    start = out.index("{")
    return json.loads(out[start:])


def cupless_plan(tmp_path):
    doc = {
        "name": "cupless",
        "width": 4,
        "height": 4,
        "cells": ["...." for _ in range(4)],
        "zones": [{"label": "office", "rect": [0, 0, 3, 3]}],
        "objects": [{"class": "chair", "at": [2, 2]}],
        "start": [1, 1, 0],
    }
    p = tmp_path / "cupless.json"
    p.write_text(json.dumps(doc))
    return str(p)


class TestRun:
    def test_run_writes_artifacts_and_reports_success(self, tmp_path, capsys):
        out = tmp_path / "ep"
        code = main(["run", *OFFICE, "--seed", "0", "--out", str(out)])
        captured = capsys.readouterr()
        assert code == 0
        doc = json.loads(captured.out)
        assert doc["success"] is True
        assert doc["final_pose"] == [5, 1, 0]
        assert (out / "office_fig3_cup_s0.trace.jsonl").is_file()
        assert "wrote" in captured.err

    def test_run_exit_2_when_target_never_found(self, tmp_path, capsys):
        code = main([
            "run", "--floorplan", cupless_plan(tmp_path), "--target", "cup",
            "--set", "landmark.budget=60",
        ])
        assert code == 2
        assert json.loads(capsys.readouterr().out)["success"] is False

    def test_run_appends_leaderboard(self, tmp_path, capsys):
        board = tmp_path / "board.jsonl"
        code = main(["run", *OFFICE, "--leaderboard", str(board)])
        capsys.readouterr()
        assert code == 0
        entry = json.loads(board.read_text().splitlines()[0])
        assert entry["player"] == "agent"
        assert entry["steps"] == 5

    def test_config_file_plus_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"floorplan": "office_fig3", "target": "cup"}))
        code = main(["run", "--config", str(cfg), "--set", "detector.p_miss=0"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["success"] is True


class TestBatchAndBaseline:
    def test_batch_prints_table_and_summary(self, capsys):
        code = main(["batch", *OFFICE, "--seed", "0", "--seed", "1"])
        captured = capsys.readouterr()
        assert code == 0
        assert "success rate" in captured.out
        summary = last_json(captured.out)
        assert summary["n"] == 2
        assert summary["success_rate"] == 1.0

    def test_baseline_runs_named_policy(self, capsys):
        code = main(["baseline", *OFFICE, "--policy", "random_walk", "--seed", "0"])
        captured = capsys.readouterr()
        assert code == 0
        assert last_json(captured.out)["n"] == 1

    def test_unknown_policy_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            main(["baseline", *OFFICE, "--policy", "warp"])


class TestIngest:
    def test_ingest_writes_export(self, tmp_path, capsys):
        out = tmp_path / "triples.txt"
        code = main(["ingest", "--corpus", "corpus_mini", "--out", str(out)])
        assert code == 0
        assert out.read_text().startswith("# geosemnav triples v1")
        assert "ingested" in capsys.readouterr().err

    def test_ingest_accepts_class_table_path(self, tmp_path, class_table):
        from geosemnav.harness import resolve_asset

        table_path = resolve_asset("class_table", "class table")
        out = tmp_path / "triples.txt"
        assert main(["ingest", "--corpus", "corpus_mini", "--out", str(out),
                     "--class-table", str(table_path)]) == 0
        assert out.is_file()

    def test_ingest_unknown_corpus_exits_1(self, capsys):
        code = main(["ingest", "--corpus", "atlantis", "--out", "/tmp/x.txt"])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestReplay:
    def test_replay_round_trip_and_tamper_detection(self, tmp_path, capsys):
        out = tmp_path / "ep"
        main(["run", *OFFICE, "--seed", "0", "--out", str(out)])
        capsys.readouterr()
        trace = out / "office_fig3_cup_s0.trace.jsonl"

        code = main(["replay", *OFFICE, "--trace", str(trace)])
        report = json.loads(capsys.readouterr().out)
        assert code == 0
        assert report["ok"] is True
        assert report["final_pose"] == [5, 1, 0]
        assert report["success"] is True

        lines = trace.read_text().splitlines()
        doc = json.loads(lines[1])
        doc["pose"][0] += 2
        lines[1] = json.dumps(doc)
        forged = tmp_path / "forged.jsonl"
        forged.write_text("\n".join(lines) + "\n")
        code = main(["replay", *OFFICE, "--trace", str(forged)])
        report = json.loads(capsys.readouterr().out)
        assert code == 2
        assert report["mismatches"]

    def test_replay_missing_trace_exits_1(self, capsys):
        code = main(["replay", *OFFICE, "--trace", "/nonexistent.jsonl"])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestServe:
    def test_serve_wires_app_without_binding(self, tmp_path, capsys, monkeypatch):
        import uvicorn

        seen = {}

        def fake_run(app, **kw):
            seen["app"] = app
            seen["kw"] = kw

        monkeypatch.setattr(uvicorn, "run", fake_run)
        board = tmp_path / "board.jsonl"
        code = main([
            "serve", *OFFICE, "--port", "9001",
            "--leaderboard", str(board), "--record-agent",
        ])
        assert code == 0
        assert seen["kw"]["port"] == 9001
        assert seen["app"].state.service.config.leaderboard_path == str(board)
        assert json.loads(board.read_text().splitlines()[0])["player"] == "agent"
        assert "reference run" in capsys.readouterr().err


class TestErrors:
    def test_missing_required_flags_exit_1(self, capsys):
        assert main(["run", "--floorplan", "office_fig3"]) == 1
        assert "required" in capsys.readouterr().err

    def test_unknown_bundled_plan_exits_1(self, capsys):
        assert main(["run", "--floorplan", "atlantis", "--target", "cup"]) == 1
        assert "not found" in capsys.readouterr().err

    def test_malformed_override_exits_1(self, capsys):
        assert main(["run", *OFFICE, "--set", "detector.p_miss"]) == 1
        assert "form" in capsys.readouterr().err

    def test_unknown_override_field_exits_1(self, capsys):
        assert main(["run", *OFFICE, "--set", "detector.miss=0"]) == 1


def test_console_entry_point_smoke():
    proc = subprocess.run(
        [sys.executable, "-m", "geosemnav.cli", "run",
         "--floorplan", "office_fig3", "--target", "cup"],
        capture_output=True, text=True, timeout=60,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["success"] is True
