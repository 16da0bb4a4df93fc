"""End-to-end tests of the command-line interface (in-process)."""

import numpy as np
import pytest

from hsolo.cli import main
from hsolo.fileio import CORR_HEADER, RESULT_HEADER


@pytest.fixture
def scene_file(tmp_path):
    path = tmp_path / "scene.csv"
    rc = main(["generate", str(path), "--n", "200", "--w", "0.3", "--seed", "11"])
    assert rc == 0
    return path


def parse_result(text):
    lines = text.splitlines()
    assert lines[0] == RESULT_HEADER
    return dict(ln.split(": ", 1) for ln in lines[1:])


class TestGenerate:
    def test_writes_flagged_byproduct_file(self, tmp_path):
        path = tmp_path / "scene.csv"
        assert main(["generate", str(path), "--n", "50", "--w", "0.2", "--seed", "1"]) == 0
        lines = path.read_text().splitlines()
        assert lines[0] == CORR_HEADER
        assert len(lines) == 51
        assert all(len(ln.split(",")) == 9 for ln in lines[1:])
        flags = [ln.rsplit(",", 1)[1] for ln in lines[1:]]
        assert flags.count("1") == 10

    def test_same_seed_same_bytes(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["generate", str(p1), "--n", "80", "--w", "0.25", "--seed", "4"])
        main(["generate", str(p2), "--n", "80", "--w", "0.25", "--seed", "4"])
        assert p1.read_bytes() == p2.read_bytes()

    def test_explicit_truth_matrix(self, tmp_path):
        path = tmp_path / "scene.csv"
        rc = main(
            ["generate", str(path), "--n", "30", "--w", "1.0", "--seed", "2",
             "--truth", "1,0,25,0,1,-10,0,0,1"]
        )
        assert rc == 0
        for ln in path.read_text().splitlines()[1:]:
            f = [float(x) for x in ln.split(",")]
            assert f[4] == pytest.approx(f[0] + 25.0)
            assert f[5] == pytest.approx(f[1] - 10.0)

    def test_bad_truth_length_fails(self, tmp_path):
        rc = main(["generate", str(tmp_path / "x.csv"), "--truth", "1,2,3"])
        assert rc == 2

    def test_infeasible_spec_fails_cleanly(self, tmp_path):
        rc = main(
            ["generate", str(tmp_path / "x.csv"), "--n", "40", "--w", "0.5",
             "--truth", "1,0,5000,0,1,0,0,0,1"]
        )
        assert rc == 2


class TestSolve:
    def test_seeded_method_on_generated_scene(self, scene_file, capsys):
        rc = main(["solve", str(scene_file), "--method", "hsolo", "--seed", "3"])
        assert rc == 0
        doc = parse_result(capsys.readouterr().out)
        assert int(doc["support"]) >= 55  # 60 true inliers at w = 0.3
        assert doc["elapsed_s"] == "0"
        assert len(doc["model"].split()) == 9
        assert len(doc["inliers"].split()) == int(doc["support"])

    def test_baseline_method(self, scene_file, capsys):
        rc = main(["solve", str(scene_file), "--method", "ransac", "--seed", "3"])
        assert rc == 0
        doc = parse_result(capsys.readouterr().out)
        assert int(doc["support"]) >= 55

    def test_output_file(self, scene_file, tmp_path):
        out = tmp_path / "res.txt"
        rc = main(["solve", str(scene_file), "--method", "hsolo", "-o", str(out)])
        assert rc == 0
        assert out.read_text().startswith(RESULT_HEADER)

    def test_deterministic_across_runs(self, scene_file, capsys):
        main(["solve", str(scene_file), "--method", "hsolo", "--seed", "5"])
        first = capsys.readouterr().out
        main(["solve", str(scene_file), "--method", "hsolo", "--seed", "5"])
        assert capsys.readouterr().out == first

    def test_timing_flag_unredacts_elapsed(self, scene_file, capsys):
        rc = main(["solve", str(scene_file), "--method", "hsolo", "--timing"])
        assert rc == 0
        doc = parse_result(capsys.readouterr().out)
        assert float(doc["elapsed_s"]) > 0.0

    def test_missing_file_is_usage_error(self, tmp_path):
        assert main(["solve", str(tmp_path / "nope.csv")]) == 2

    def test_malformed_file_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text(f"{CORR_HEADER}\n1,2\n")
        assert main(["solve", str(bad)]) == 2

    def test_point_only_file_rejected_for_seeded_method(self, tmp_path):
        pts = tmp_path / "pts.csv"
        pts.write_text(
            f"{CORR_HEADER}\n" + "\n".join(f"{i},{i},{i + 1},{i + 2}" for i in range(10)) + "\n"
        )
        assert main(["solve", str(pts), "--method", "hsolo"]) == 2

    def test_point_only_file_allowed_for_baseline(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        rows = []
        for _ in range(30):
            u, v = float(rng.uniform(0, 640)), float(rng.uniform(0, 480))
            rows.append(f"{u!r},{v!r},{u + 12.0!r},{v - 7.0!r}")
        pts = tmp_path / "pts.csv"
        pts.write_text(f"{CORR_HEADER}\n" + "\n".join(rows) + "\n")
        rc = main(["solve", str(pts), "--method", "ransac", "--seed", "1"])
        assert rc == 0
        assert int(parse_result(capsys.readouterr().out)["support"]) == 30

    def test_hopeless_input_reports_no_model(self, tmp_path):
        rng = np.random.default_rng(2)
        rows = []
        for _ in range(12):
            u1, v1, u2, v2 = (float(x) for x in rng.uniform(1, 600, size=4))
            rows.append(f"{u1!r},{v1!r},1.0,0.0,{u2!r},{v2!r},1.0,0.0")
        wild = tmp_path / "wild.csv"
        wild.write_text(f"{CORR_HEADER}\n" + "\n".join(rows) + "\n")
        rc = main(["solve", str(wild), "--method", "hsolo", "--epsilon-r", "1e-9"])
        assert rc == 1


class TestBench:
    def test_synthetic_sweep_summary(self, capsys):
        rc = main(
            ["bench", "--w", "0.4", "--n", "200", "--trials", "3",
             "--methods", "hsolo,ransac", "--max-iterations", "10000", "--seed", "6"]
        )
        assert rc == 0
        out = capsys.readouterr().out
        data = [ln for ln in out.splitlines() if not ln.startswith("#")]
        assert data[0].startswith("method\tw")
        assert len(data) == 3
        assert all("\t" in ln for ln in data)

    def test_records_out_file(self, tmp_path, capsys):
        rec = tmp_path / "records.tsv"
        rc = main(
            ["bench", "--w", "0.4", "--n", "200", "--trials", "2", "--methods", "hsolo",
             "--max-iterations", "10000", "--seed", "6", "--records-out", str(rec)]
        )
        assert rc == 0
        capsys.readouterr()
        lines = rec.read_text().splitlines()
        assert lines[0].startswith("method\t")
        assert len(lines) == 3

    def test_file_input(self, scene_file, capsys):
        rc = main(
            ["bench", "--input", str(scene_file), "--trials", "2", "--methods", "ransac",
             "--max-iterations", "10000", "--seed", "6"]
        )
        assert rc == 0
        assert "ransac" in capsys.readouterr().out

    def test_worker_count_invariant_output(self, capsys):
        argv = ["bench", "--w", "0.3", "--n", "200", "--trials", "4", "--methods", "hsolo",
                "--max-iterations", "10000", "--seed", "6"]
        main(argv + ["--workers", "1"])
        single = capsys.readouterr().out
        main(argv + ["--workers", "4"])
        assert capsys.readouterr().out == single

    def test_unknown_method_fails(self, capsys):
        assert main(["bench", "--w", "0.4", "--methods", "sorcery", "--trials", "1"]) == 2


class TestTheory:
    def test_table_output(self, capsys):
        rc = main(["theory", "--w", "0.03,0.4", "--n-values", "4"])
        assert rc == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "w\tn\tk_ransac\tk_hsolo_total\tspeedup"
        assert len(lines) == 3
        k_low = int(lines[1].split("\t")[2])
        assert 3_600_000 <= k_low <= 3_800_000

    def test_bad_rate_fails(self, capsys):
        assert main(["theory", "--w", "0,0.4"]) == 2


class TestCalibrate:
    def test_reports_suggested_threshold(self, scene_file, capsys):
        rc = main(["calibrate-epsilon-r", str(scene_file)])
        assert rc == 0
        out = capsys.readouterr().out
        doc = dict(ln.split(": ", 1) for ln in out.splitlines() if ": " in ln)
        assert float(doc["suggested_epsilon_r"]) > 0.0
        assert int(doc["n_seeds"]) >= 4

    def test_point_only_file_rejected(self, tmp_path):
        pts = tmp_path / "pts.csv"
        pts.write_text(
            f"{CORR_HEADER}\n" + "\n".join(f"{i},{i},{i},{i}" for i in range(10)) + "\n"
        )
        assert main(["calibrate-epsilon-r", str(pts)]) == 2
