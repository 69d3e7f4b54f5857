"""Command-line interface: exit codes, artifacts, output formats."""

import json

import numpy as np
import pytest

from subdiff.cli import main
from subdiff.reporting import NORMS_HEADER

FAST_RUN = """
problem = eigenmode, alpha = 0.5
[problem]
resolution = 33
[time]
horizon = 1.0
steps = 32
[certificates]
weakform = true
[output]
snapshot_times = [0.5, 1.0]
"""


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestRunCommand:
    def test_successful_run(self, tmp_path, capsys):
        cfg = _write(tmp_path, FAST_RUN)
        out = tmp_path / "artifacts"
        code = main(["run", cfg, "--out", str(out)])
        captured = capsys.readouterr().out
        assert code == 0
        assert "certificate decay: PASS" in captured
        assert "certificate boundedness: PASS" in captured
        assert "certificate convexity: PASS" in captured
        assert "certificate weakform: PASS" in captured
        assert (out / "report.json").exists()
        assert (out / "norms.tsv").exists()
        assert (out / "snapshot_000.txt").exists()
        assert (out / "snapshot_001.txt").exists()

    def test_report_content(self, tmp_path):
        cfg = _write(tmp_path, FAST_RUN)
        out = tmp_path / "artifacts"
        main(["run", cfg, "--out", str(out), "--seed", "11"])
        report = json.loads((out / "report.json").read_text())
        assert report["passed"] is True
        assert report["label"] == "eigenmode"
        assert report["solver"]["seed"] == 11
        assert report["solver"]["mode"] == "picard"
        assert report["certificates"]["decay"]["passed"] is True
        assert report["certificates"]["decay"]["min_margin"] > 0.0
        assert "config_text" in report

    def test_norms_tsv_format(self, tmp_path):
        cfg = _write(tmp_path, FAST_RUN)
        out = tmp_path / "artifacts"
        main(["run", cfg, "--out", str(out)])
        lines = (out / "norms.tsv").read_text().splitlines()
        assert lines[0] == NORMS_HEADER
        assert len(lines) == 2 + 32  # header + M+1 rows
        row = lines[1].split("\t")
        assert len(row) == 5
        assert float(row[0]) == 0.0

    def test_snapshot_format(self, tmp_path):
        cfg = _write(tmp_path, FAST_RUN)
        out = tmp_path / "artifacts"
        main(["run", cfg, "--out", str(out)])
        lines = (out / "snapshot_000.txt").read_text().splitlines()
        assert lines[0].startswith("# t=")
        assert "shape=33" in lines[0]
        assert len(lines) == 1 + 33
        values = np.array([float(v) for v in lines[1:]])
        assert np.all(np.isfinite(values))

    def test_failing_certificate_exits_one(self, tmp_path, capsys):
        # an unreachable residual threshold turns the weakform verdict red
        text = FAST_RUN.replace(
            "[certificates]\nweakform = true",
            "[certificates]\nweakform = true\nweakform_threshold = 1e-12",
        )
        cfg = _write(tmp_path, text)
        code = main(["run", cfg, "--out", str(tmp_path / "o")])
        assert code == 1
        assert "certificate weakform: FAIL" in capsys.readouterr().out

    def test_compressed_history_run(self, tmp_path, capsys):
        text = """
        problem = porous, alpha = 0.5
        [problem]
        resolution = 17
        [time]
        horizon = 1.0
        steps = 64
        grading = 1.0
        """
        cfg = _write(tmp_path, text)
        code = main(["run", cfg, "--out", str(tmp_path / "o"), "--history", "compressed"])
        assert code == 0
        report = json.loads((tmp_path / "o" / "report.json").read_text())
        assert report["solver"]["history"] == "compressed"

    def test_bad_config_exits_two(self, tmp_path, capsys):
        cfg = _write(tmp_path, "alpha = 7\n")
        code = main(["run", cfg])
        assert code == 2
        assert "alpha" in capsys.readouterr().err

    def test_missing_file_exits_two(self, tmp_path, capsys):
        code = main(["run", str(tmp_path / "nope.cfg")])
        assert code == 2
        assert "cannot read" in capsys.readouterr().err

    def test_unsolvable_step_exits_two(self, tmp_path, capsys):
        text = """
        problem = porous
        [problem]
        resolution = 17
        [time]
        steps = 8
        [solver]
        tol = 1e-16
        max_iter = 1
        """
        cfg = _write(tmp_path, text)
        out = tmp_path / "o"
        code = main(["run", cfg, "--out", str(out)])
        assert code == 2
        assert "run failed" in capsys.readouterr().err
        report = json.loads((out / "report.json").read_text())
        assert report["passed"] is False
        assert report["failure"]["step"] >= 1


class TestStudyCommand:
    def test_space_study_on_eigenmode(self, tmp_path, capsys):
        # time over-resolved so the spatial error dominates on every level
        text = """
        problem = eigenmode
        [problem]
        resolution = 9
        [time]
        steps = 512
        [study]
        axis = space
        levels = 3
        """
        cfg = _write(tmp_path, text)
        out = tmp_path / "s"
        code = main(["study", cfg, "--out", str(out)])
        assert code == 0
        lines = (out / "study.tsv").read_text().splitlines()
        assert lines[0] == "level\tresolution\trel_l2_error\torder"
        assert len(lines) == 4
        # orders from the exact reference should be near 2
        orders = [float(l.split("\t")[3]) for l in lines[2:]]
        for o in orders:
            assert 1.6 < o < 2.4
        assert "refinement study along space" in capsys.readouterr().out

    def test_time_axis_self_reference(self, tmp_path):
        text = """
        problem = porous
        [problem]
        resolution = 17
        [time]
        horizon = 1.0
        steps = 16
        [study]
        axis = time
        """
        cfg = _write(tmp_path, text)
        out = tmp_path / "s"
        code = main(["study", cfg, "--out", str(out), "--levels", "2"])
        assert code == 0
        lines = (out / "study.tsv").read_text().splitlines()
        assert lines[0].startswith("level\tsteps")
        assert len(lines) == 3

    def test_too_few_levels(self, tmp_path, capsys):
        cfg = _write(tmp_path, "problem = eigenmode\n")
        code = main(["study", cfg, "--levels", "1"])
        assert code == 2
        assert "levels" in capsys.readouterr().err


class TestPropsCommand:
    def test_small_sweep_passes(self, tmp_path, capsys):
        out = tmp_path / "p"
        code = main(["props", "--count", "60", "--seed", "1", "--out", str(out)])
        captured = capsys.readouterr().out
        assert code == 0
        assert "property convexity: PASS" in captured
        assert "property comparison: PASS" in captured
        assert "property mittag_leffler: PASS" in captured
        data = json.loads((out / "props.json").read_text())
        assert data["convexity"]["violations"] == 0
        assert data["comparison"]["violations"] == 0

    def test_seed_changes_draws_not_verdict(self, capsys):
        assert main(["props", "--count", "18", "--seed", "5"]) == 0
        capsys.readouterr()


class TestArgumentErrors:
    def test_no_command(self, capsys):
        with pytest.raises(SystemExit):
            main([])

    def test_unknown_history_choice(self, tmp_path, capsys):
        cfg = _write(tmp_path, "problem = eigenmode\n")
        with pytest.raises(SystemExit):
            main(["run", cfg, "--history", "magic"])
