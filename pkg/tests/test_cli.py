import csv
import json

import numpy as np
import pytest

from fabrik_sqp import cli
from fabrik_sqp.robots import forward_kinematics, model_to_json


def write_pose(path, t):
    doc = {"position": t[:3, 3].tolist(), "rotation": t[:3, :3].tolist()}
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def solvable_pose(tmp_path, ur5_model):
    theta = np.array([0.4, -1.0, 1.3, -0.5, 0.7, 0.2])
    return write_pose(tmp_path / "pose.json", forward_kinematics(ur5_model, theta))


class TestSolveCommand:
    def test_solved_exit_zero_and_json(self, solvable_pose, capsys):
        code = cli.main(["solve", "--robot", "ur5", "--pose", solvable_pose])
        out = capsys.readouterr().out
        doc = json.loads(out)
        assert code == 0
        assert doc["status"] == "solved"
        assert len(doc["theta"]) == 6
        assert doc["eps_pos"] <= 1e-6
        assert isinstance(doc["opt_used"], bool)

    def test_unreachable_exit_two(self, tmp_path, ur5_model, capsys):
        t = forward_kinematics(ur5_model, np.zeros(6)).copy()
        t[:3, 3] = [4.0, 0.0, 0.0]
        pose = write_pose(tmp_path / "far.json", t)
        code = cli.main(["solve", "--robot", "ur5", "--pose", pose])
        assert code == 2
        assert json.loads(capsys.readouterr().out)["status"] == "unreachable"

    def test_malformed_pose_names_field(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"position": [0, 0, 0]}))
        code = cli.main(["solve", "--robot", "ur5", "--pose", str(path)])
        assert code == 1
        assert "rotation" in capsys.readouterr().err

    def test_init_length_validated(self, solvable_pose, capsys):
        code = cli.main(["solve", "--robot", "ur5", "--pose", solvable_pose, "--init", "0,0"])
        assert code == 1

    def test_fabrik_mode_flag(self, solvable_pose, capsys):
        code = cli.main(
            ["solve", "--robot", "ur5", "--pose", solvable_pose, "--mode", "fabrik", "--n-max", "400"]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code in (0, 3)
        assert doc["opt_used"] is False

    def test_model_override(self, tmp_path, ur5_model, solvable_pose, capsys):
        model_file = tmp_path / "model.json"
        model_file.write_text(model_to_json(ur5_model))
        code = cli.main(
            ["solve", "--robot", "ur5", "--pose", solvable_pose, "--model", str(model_file)]
        )
        assert code == 0


class TestBenchCommand:
    def test_creates_three_files_per_mode(self, tmp_path, capsys):
        prefix = str(tmp_path / "bench")
        code = cli.main(
            [
                "bench", "--robot", "ur5", "--n", "10", "--seed", "1",
                "--modes", "combined:5", "--out-prefix", prefix, "--workers", "1",
            ]
        )
        assert code == 0
        rows = list(csv.reader(open(prefix + "_combined_5.csv")))
        assert len(rows) == 11
        assert json.loads(open(prefix + "_combined_5_summary.json").read())["n"] == 10
        assert (tmp_path / "bench_combined_5_times.csv").exists()

    def test_same_seed_same_counts(self, tmp_path, capsys):
        args = [
            "bench", "--robot", "kuka", "--n", "8", "--seed", "5",
            "--modes", "fabrik:40", "--workers", "1",
        ]
        assert cli.main(args + ["--out-prefix", str(tmp_path / "a")]) == 0
        assert cli.main(args + ["--out-prefix", str(tmp_path / "b")]) == 0
        a = json.loads(open(tmp_path / "a_fabrik_40_summary.json").read())
        b = json.loads(open(tmp_path / "b_fabrik_40_summary.json").read())
        assert a["success_rate"] == b["success_rate"]

    def test_unwritable_output(self, tmp_path, capsys):
        code = cli.main(
            [
                "bench", "--robot", "ur5", "--n", "2", "--seed", "1",
                "--modes", "combined:5", "--out-prefix", "/nonexistent-dir/x", "--workers", "1",
            ]
        )
        assert code == 1


class TestTraceCommand:
    def test_target_at_end_short_trace(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code = cli.main(
            [
                "trace", "--links", "1,1", "--base", "0,0,0", "--v-init", "1,0,0",
                "--target", "1.9999995,0.001,0", "--cap", "9000", "--out", str(out),
            ]
        )
        assert code in (0,)
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["n", "dist"]

    def test_slight_bend_long_plateau(self, tmp_path, capsys):
        out = tmp_path / "t.csv"
        code = cli.main(
            [
                "trace", "--links", "1,1", "--base", "0,0,0", "--v-init", "1,0,0",
                "--target", "1.99,0.001,0", "--cap", "9000", "--out", str(out),
            ]
        )
        assert code == 0
        rows = list(csv.reader(open(out)))[1:]
        assert len(rows) > 100
        dists = [float(r[1]) for r in rows]
        assert all(d > 0.0 for d in dists)
        assert dists[-1] <= 1e-6

    def test_unreachable_exit_two(self, tmp_path, capsys):
        code = cli.main(
            [
                "trace", "--links", "1,1", "--base", "0,0,0", "--v-init", "1,0,0",
                "--target", "5,0,0", "--out", str(tmp_path / "t.csv"),
            ]
        )
        assert code == 2

    def test_kuka_reduced_chain_trace(self, tmp_path, capsys):
        out = tmp_path / "k.csv"
        code = cli.main(["trace", "--robot", "kuka", "--target", "0.3,0.2,0.9", "--out", str(out)])
        assert code == 0
        assert out.exists()

    def test_ur5_robot_trace_needs_links(self, tmp_path, capsys):
        code = cli.main(["trace", "--robot", "ur5", "--target", "0.3,0.2,0.9", "--out", str(tmp_path / "u.csv")])
        assert code == 1


class TestTrackCommand:
    def test_small_run_row_count(self, tmp_path, capsys):
        out = tmp_path / "track.csv"
        code = cli.main(
            ["track", "--robot", "kuka", "--phase1-n", "2", "--phase2-n", "2", "--out", str(out)]
        )
        assert code == 0
        rows = list(csv.reader(open(out)))
        assert len(rows) == 1 + 4

    def test_usage_error_exit_one(self, capsys):
        assert cli.main(["track", "--robot", "kuka", "--phase1-n", "0", "--out", "x.csv"]) == 1
