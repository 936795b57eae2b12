import math
import os

import pytest

from trussforge.cli import main


class TestRun:
    def test_unknown_scenario_exits_2(self, capsys):
        assert main(["run", "nope"]) == 2

    def test_pit_tetra_succeeds(self, tmp_path):
        code = main(["run", "pit_tetra", "--out", str(tmp_path)])
        assert code == 0
        assert (tmp_path / "pit_tetra.report.json").exists()
        assert (tmp_path / "pit_tetra.trajectory.csv").exists()
        header = (tmp_path / "pit_tetra.trajectory.csv").read_text().splitlines()[0]
        assert header == "time,node,x,y,z,contact_mode,normal_force"

    def test_negative_control_exits_1(self):
        assert main(["run", "step_tetra", "--remove-feature", "obstacle"]) == 1


class TestForceCurve:
    def test_rows_and_values(self, tmp_path):
        out = tmp_path / "curve.csv"
        assert main(["force-curve", "--mass", "1.0", "--start", "30",
                     "--stop", "90", "--step", "30", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "alpha_deg,force_N"
        values = [float(l.split(",")[1]) for l in lines[1:]]
        assert values[0] == pytest.approx(19.62)
        assert values[1] == pytest.approx(9.81 / math.sin(math.radians(60)))
        assert values[2] == pytest.approx(9.81)

    def test_zero_start_rejected(self, tmp_path):
        assert main(["force-curve", "--mass", "1.0", "--start", "0",
                     "--out", str(tmp_path / "x.csv")]) == 2


class TestGait:
    def test_valid_file_checks_clean(self, tmp_path):
        path = tmp_path / "ok.gait"
        path.write_text("set m1 len 0.4\nwait settle\n")
        assert main(["gait", "check", str(path)]) == 0

    def test_syntax_error_exits_2_with_location(self, tmp_path, capsys):
        path = tmp_path / "bad.gait"
        path.write_text("set m1 len\n")
        assert main(["gait", "check", str(path)]) == 2
        err = capsys.readouterr().err
        assert ":2:1:" in err

    def test_fmt_is_idempotent(self, tmp_path):
        path = tmp_path / "messy.gait"
        path.write_text("set   m1   len 0.4\n\n\nwait    settle   12.0\n")
        assert main(["gait", "fmt", str(path)]) == 0
        once = path.read_text()
        assert main(["gait", "fmt", str(path)]) == 0
        assert path.read_text() == once
        assert once == "set m1 len 0.4\nwait settle 12.0\n"


class TestReplay:
    def test_missing_recording_exits_2(self):
        assert main(["replay", "/nonexistent/recording.json"]) == 2

    def test_replay_round_trip(self, tmp_path):
        from trussforge.teleop import SessionRecording
        rec = SessionRecording(scenario="pit_tetra")
        rec.commands.append({"step": 10, "seq": 1, "type": "pause"})
        rec.commands.append({"step": 10, "seq": 2, "type": "resume"})
        path = tmp_path / "rec.json"
        rec.save(str(path))
        assert main(["replay", str(path), "--out", str(tmp_path),
                     "--extra-steps", "20"]) == 0
        assert (tmp_path / "replay.trajectory.csv").exists()


class TestRunFromFile:
    def test_scenario_spec_json_path(self, tmp_path):
        import json
        from trussforge.scenarios import get_scenario
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(get_scenario("pit_tetra").to_dict()))
        assert main(["run", str(path)]) == 0
