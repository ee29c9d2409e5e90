import json

from click.testing import CliRunner

from costar.cli import main


def invoke(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


class TestRun:
    def test_success_exit_zero(self):
        result = invoke("run", "plans/wire_bend.bt", "--scene", "wire_bend")
        assert result.exit_code == 0
        assert json.loads(result.output)["successes"] == 1

    def test_failure_exit_one(self):
        result = invoke("run", "plans/pick_node.bt", "--scene", "wire_bend")
        assert result.exit_code == 1  # no nodes in the wire scene

    def test_validation_error_exit_two(self, tmp_path):
        bad = tmp_path / "bad.bt"
        bad.write_text("sequence { rocket.Launch() }")
        result = invoke("run", str(bad), "--scene", "wire_bend")
        assert result.exit_code == 2

    def test_syntax_error_exit_two(self, tmp_path):
        bad = tmp_path / "bad.bt"
        bad.write_text("sequence { arm.Move( }")
        result = invoke("run", str(bad), "--scene", "wire_bend")
        assert result.exit_code == 2

    def test_unknown_scene_fails(self):
        result = invoke("run", "plans/wire_bend.bt", "--scene", "atlantis")
        assert result.exit_code != 0


class TestBatch:
    def test_batch_reports_all_trials(self):
        result = invoke("batch", "plans/wire_bend.bt", "--scene", "wire_bend",
                        "--trials", "3", "--seed-base", "5")
        assert result.exit_code == 0
        body = json.loads(result.output)
        assert [t["seed"] for t in body["perTrial"]] == [5, 6, 7]

    def test_mixed_failures_exit_one(self):
        result = invoke("batch", "plans/assembly.bt", "--scene", "assembly",
                        "--trials", "3", "--noise-pos", "0.05")
        assert result.exit_code == 1


class TestValidate:
    def test_clean_plan(self):
        result = invoke("validate", "plans/assembly.bt", "--scene", "assembly")
        assert result.exit_code == 0
        assert "ok" in result.output

    def test_structural_problem(self, tmp_path):
        bad = tmp_path / "bad.bt"
        bad.write_text("repeat 2 { arm.Teach() arm.Teach() }")
        result = invoke("validate", str(bad))
        assert result.exit_code == 2
        assert "exactly one child" in result.output


class TestCalibrate:
    def test_writes_calibration_file(self, tmp_path):
        out = tmp_path / "calib.json"
        result = invoke("calibrate", "--stations", "11", "--seed", "7",
                        "--out", str(out))
        assert result.exit_code == 0
        data = json.loads(out.read_text())
        assert data["pairs"] == 10
        body = json.loads(result.output)
        assert body["groundTruthError"]["position"] < 1e-6

    def test_degenerate_station_count(self):
        result = invoke("calibrate", "--stations", "1")
        assert result.exit_code == 2

    def test_run_consumes_calibration_as_camera(self, tmp_path):
        out = tmp_path / "calib.json"
        assert invoke("calibrate", "--out", str(out)).exit_code == 0
        result = invoke("run", "plans/wire_bend.bt", "--scene", "wire_bend",
                        "--calibration", str(out))
        assert result.exit_code == 0
