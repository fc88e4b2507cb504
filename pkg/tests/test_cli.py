import json
from pathlib import Path

import pytest

from btgen import cli
from btgen import xml_io

FIXTURES = Path(__file__).parent / "fixtures"


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_good_tree_exit_zero(self, capsys):
        code, out, _ = run_cli(
            capsys, "validate", str(FIXTURES / "door_good.xml"),
            "--library", str(FIXTURES / "door_library.json"),
        )
        assert code == 0

    def test_unknown_node_exit_one(self, capsys, tmp_path):
        bad = tmp_path / "bad.xml"
        bad.write_text('<root><BehaviorTree ID="M"><Action ID="Fly"/>'
                       '</BehaviorTree></root>')
        code, out, _ = run_cli(
            capsys, "validate", str(bad),
            "--library", str(FIXTURES / "door_library.json"),
        )
        assert code == 1

    def test_json_format_stdout_is_pure_json(self, capsys):
        code, out, _ = run_cli(
            capsys, "validate", str(FIXTURES / "door_bad.xml"),
            "--library", str(FIXTURES / "door_library.json"),
            "--format", "json",
        )
        assert code == 0  # warning only
        doc = json.loads(out)
        assert doc["findings"][0]["code"] == "UnsatisfiedPrecondition"

    def test_missing_file_exit_two(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, "validate", str(tmp_path / "nope.xml"),
            "--library", str(FIXTURES / "door_library.json"),
        )
        assert code == 2

    def test_bad_usage_exit_two(self, capsys):
        code, _, _ = run_cli(capsys, "validate")
        assert code == 2


class TestFmt:
    def test_idempotent(self, capsys, tmp_path):
        code, out1, _ = run_cli(capsys, "fmt", str(FIXTURES / "door_good.xml"))
        assert code == 0
        again = tmp_path / "again.xml"
        again.write_text(out1)
        code, out2, _ = run_cli(capsys, "fmt", str(again))
        assert out1 == out2

    def test_malformed_exit_one(self, capsys, tmp_path):
        bad = tmp_path / "bad.xml"
        bad.write_text("<root><broken")
        code, _, _ = run_cli(capsys, "fmt", str(bad))
        assert code == 1


class TestRun:
    def test_door_scenario(self, capsys):
        code, out, _ = run_cli(
            capsys, "run", str(FIXTURES / "door_good.xml"),
            "--library", str(FIXTURES / "door_library.json"),
            "--world", str(FIXTURES / "door_world.json"),
            "--format", "json",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["final"] == "success"
        assert doc["ticks_used"] == 1

    def test_text_render_shows_final(self, capsys):
        code, out, _ = run_cli(
            capsys, "run", str(FIXTURES / "door_good.xml"),
            "--library", str(FIXTURES / "door_library.json"),
            "--world", str(FIXTURES / "door_world.json"),
        )
        assert code == 0
        assert "final: success" in out


class TestGenerate:
    def test_mock_backend(self, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "--command", "open the door and enter",
            "--library", str(FIXTURES / "door_library.json"),
            "--format", "json",
        )
        assert code == 0
        doc = json.loads(out)
        tree = xml_io.parse(doc["tree_xml"])
        assert doc["report"]["ok"] is True

    def test_text_format_prints_xml(self, capsys):
        code, out, _ = run_cli(
            capsys, "generate", "--command", "open the door",
            "--library", str(FIXTURES / "door_library.json"),
        )
        assert code == 0
        assert out.lstrip().startswith("<root")


class TestRepl:
    def test_command_then_run(self, capsys, monkeypatch):
        import io

        monkeypatch.setattr("sys.stdin",
                            io.StringIO("open the door and enter\nr\nq\n"))
        code, out, err = run_cli(
            capsys, "repl",
            "--library", str(FIXTURES / "door_library.json"),
            "--world", str(FIXTURES / "door_world.json"),
        )
        assert code == 0
        assert "<root" in out
        assert "final: success" in out

    def test_step_without_tree_is_handled(self, capsys, monkeypatch):
        import io

        monkeypatch.setattr("sys.stdin", io.StringIO("s\nq\n"))
        code, _, err = run_cli(
            capsys, "repl",
            "--library", str(FIXTURES / "door_library.json"),
        )
        assert code == 0
        assert "no tree installed" in err


class TestDataset:
    def test_make_then_check(self, capsys, tmp_path):
        out_path = tmp_path / "data.json"
        code, out, _ = run_cli(
            capsys, "dataset", "make", "--count", "5",
            "--out", str(out_path), "--format", "json",
        )
        assert code == 0
        assert json.loads(out)["accepted"] == 5

        code, out, _ = run_cli(capsys, "dataset", "check", str(out_path),
                               "--format", "json")
        assert code == 0
        assert json.loads(out)["validity_rate"] == 1.0

    def test_check_corrupted_exit_one(self, capsys, tmp_path):
        out_path = tmp_path / "data.json"
        run_cli(capsys, "dataset", "make", "--count", "3",
                "--out", str(out_path))
        doc = json.loads(out_path.read_text())
        doc[0]["output"] = "<root><broken"
        out_path.write_text(json.dumps(doc))
        code, _, _ = run_cli(capsys, "dataset", "check", str(out_path))
        assert code == 1


class TestEval:
    def test_study_on_committed_matrix(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "study", str(FIXTURES / "answers_15x10.csv"),
            "--format", "json",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["mean_correct"] == pytest.approx(68 / 15, abs=1e-9)
        assert doc["t_crit"] == pytest.approx(2.145, abs=1e-3)

    def test_study_text_render(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "study", str(FIXTURES / "answers_15x10.csv"),
        )
        assert code == 0
        assert "mean_correct" in out

    def test_gen_suite(self, capsys, tmp_path):
        suite = tmp_path / "suite.json"
        suite.write_text(json.dumps([
            {"command": "open the door and enter",
             "library_path": str(FIXTURES / "door_library.json")},
            {"command": "enter the door",
             "library_path": str(FIXTURES / "door_library.json")},
        ]))
        code, out, _ = run_cli(capsys, "eval", "gen", "--suite", str(suite),
                               "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["parse_rate"] == 1.0


class TestTrainConfig:
    def test_emit(self, capsys, tmp_path):
        dataset = tmp_path / "d.json"
        dataset.write_text("[]")
        out_path = tmp_path / "train.json"
        code, out, _ = run_cli(
            capsys, "train-config", "--dataset", str(dataset),
            "--out", str(out_path), "--format", "json",
        )
        assert code == 0
        doc = json.loads(out_path.read_text())
        assert doc["learning_rate"] == 3e-4
        assert doc["batch_size"] == 128
        assert doc["micro_batch_size"] == 4
        assert doc["epochs"] == 3
        assert doc["method"] == "LoRA"

    def test_low_memory(self, capsys, tmp_path):
        dataset = tmp_path / "d.json"
        dataset.write_text("[]")
        code, out, _ = run_cli(
            capsys, "train-config", "--dataset", str(dataset),
            "--out", str(tmp_path / "t.json"), "--low-memory",
            "--format", "json",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["batch_size"] == 32
        assert doc["micro_batch_size"] == 1


class TestEntryPoint:
    def test_console_script_installed(self):
        import shutil
        import subprocess

        exe = shutil.which("btgen")
        assert exe is not None
        proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert "validate" in proc.stdout
