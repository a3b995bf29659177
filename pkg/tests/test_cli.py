import json
from pathlib import Path

import numpy as np
import pytest

from njgl.cli import main
from njgl.io import read_matrix, write_matrix
from conftest import random_spd


def run(*args):
    return main([str(a) for a in args])


def dir_bytes(path, skip_fields=("wall_time", "block_wall_times")):
    out = {}
    for f in sorted(Path(path).iterdir()):
        data = f.read_bytes()
        if f.suffix == ".json":
            payload = json.loads(data)
            payload = _strip(payload, skip_fields)
            data = json.dumps(payload, sort_keys=True).encode()
        out[f.name] = data
    return out


def _strip(payload, fields):
    if isinstance(payload, dict):
        return {k: _strip(v, fields) for k, v in payload.items() if k not in fields}
    if isinstance(payload, list):
        return [_strip(v, fields) for v in payload]
    return payload


@pytest.fixture
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    assert run("simulate", "--network", "erdos", "--p", 20, "--n", 40,
               "--seed", 7, "--out", out) == 0
    return out


class TestSimulate:
    def test_writes_expected_files(self, sim_dir):
        names = {f.name for f in sim_dir.iterdir()}
        assert {
            "theta_true_1.csv", "theta_true_2.csv", "X_1.csv", "X_2.csv",
            "S_1.csv", "S_2.csv", "manifest.json",
        } <= names

    def test_byte_identical_reruns(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("simulate", "--network", "scalefree", "--p", 24, "--n", 15,
                       "--seed", 3, "--out", out) == 0
        assert dir_bytes(a) == dir_bytes(b)

    def test_invalid_network_exits_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            run("simulate", "--network", "ladder", "--p", 10, "--n", 5,
                "--seed", 1, "--out", tmp_path / "x")
        assert exc.value.code == 2

    def test_manifest_records_provenance(self, sim_dir):
        manifest = json.loads((sim_dir / "manifest.json").read_text())
        assert manifest["generator"] == "njgl.datagen.gen_erdos"
        assert manifest["seed"] == 7
        assert manifest["p"] == 20
        assert len(manifest["perturbed_idx"]) == 2
        assert "version" in manifest

    def test_community_defaults_p(self, tmp_path):
        out = tmp_path / "comm"
        assert run("simulate", "--network", "community", "--n", 10,
                   "--seed", 2, "--out", out) == 0
        assert read_matrix(out / "theta_true_1.csv").shape == (100, 100)


class TestFit:
    def test_pnjgl_fit_outputs(self, sim_dir, tmp_path):
        out = tmp_path / "fit"
        code = run("fit", "--method", "pnjgl", "--q", "2",
                   "--lambda1", 2.0, "--lambda2", 10.0,
                   "--cov", sim_dir / "S_1.csv", sim_dir / "S_2.csv",
                   "--n", 40, 40, "--out", out)
        assert code == 0
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag["converged"]
        assert diag["method"] == "pnjgl"
        assert (out / "theta_1.csv").exists()
        assert (out / "theta_2.csv").exists()
        assert (out / "V.csv").exists()
        theta = read_matrix(out / "theta_1.csv")
        assert np.array_equal(theta, theta.T)

    def test_method_arity_validation_exits_2(self, sim_dir, tmp_path, capsys):
        code = run("fit", "--method", "pnjgl", "--lambda1", 1.0,
                   "--cov", sim_dir / "S_1.csv", sim_dir / "S_2.csv", sim_dir / "S_1.csv",
                   "--n", 40, 40, 40, "--out", tmp_path / "f")
        assert code == 2
        assert "requires exactly 2" in capsys.readouterr().err

    def test_missing_file_exits_2(self, tmp_path, capsys):
        code = run("fit", "--method", "gl", "--lambda1", 1.0,
                   "--cov", tmp_path / "nope.csv", "--n", 10,
                   "--out", tmp_path / "f")
        assert code == 2

    def test_lambda2_zero_matches_two_gl_runs(self, sim_dir, tmp_path):
        joint = tmp_path / "joint"
        run("fit", "--method", "pnjgl", "--lambda1", 2.0, "--lambda2", 0.0,
            "--cov", sim_dir / "S_1.csv", sim_dir / "S_2.csv",
            "--n", 40, 40, "--out", joint)
        singles = []
        for k in (1, 2):
            out = tmp_path / f"gl{k}"
            run("fit", "--method", "gl", "--lambda1", 2.0,
                "--cov", sim_dir / f"S_{k}.csv", "--n", 40, "--out", out)
            singles.append(read_matrix(out / "theta_1.csv"))
        for k in (1, 2):
            joint_theta = read_matrix(joint / f"theta_{k}.csv")
            rel = np.linalg.norm(joint_theta - singles[k - 1]) / np.linalg.norm(
                singles[k - 1]
            )
            assert rel <= 1e-3

    def test_screen_on_off_equivalent_on_decomposable_input(self, tmp_path, rng):
        p_half = 8
        s1 = np.zeros((16, 16))
        s2 = np.zeros((16, 16))
        s1[:8, :8], s1[8:, 8:] = random_spd(rng, p_half), random_spd(rng, p_half)
        s2[:8, :8], s2[8:, 8:] = random_spd(rng, p_half), random_spd(rng, p_half)
        write_matrix(tmp_path / "S1.csv", s1)
        write_matrix(tmp_path / "S2.csv", s2)
        outs = {}
        for mode in ("on", "off"):
            out = tmp_path / f"fit_{mode}"
            assert run("fit", "--method", "pnjgl", "--lambda1", 0.5,
                       "--lambda2", 1.0, "--eps", 1e-6,
                       "--cov", tmp_path / "S1.csv", tmp_path / "S2.csv",
                       "--n", 30, 30, "--screen", mode, "--out", out) == 0
            outs[mode] = [read_matrix(out / f"theta_{k}.csv") for k in (1, 2)]
        for a, b in zip(outs["on"], outs["off"]):
            assert np.abs(a - b).max() <= 1e-6
        diag = json.loads((tmp_path / "fit_on" / "diagnostics.json").read_text())
        assert diag["screen"]
        assert len(diag["blocks"]) == 2

    def test_convergence_failure_exit_1(self, sim_dir, tmp_path, capsys):
        out = tmp_path / "hardfit"
        code = run("fit", "--method", "pnjgl", "--lambda1", 1.0, "--lambda2", 5.0,
                   "--cov", sim_dir / "S_1.csv", sim_dir / "S_2.csv",
                   "--n", 40, 40, "--out", out,
                   "--t-max", 1, "--inner-cap", 2, "--eps", 1e-12)
        assert code == 1
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag["convergence_failure"]
        assert (out / "theta_1.csv").exists()  # results still written

    def test_fit_idempotent_up_to_wall_times(self, sim_dir, tmp_path):
        outs = []
        for name in ("f1", "f2"):
            out = tmp_path / name
            assert run("fit", "--method", "cnjgl", "--lambda1", 1.0,
                       "--lambda2", 4.0,
                       "--cov", sim_dir / "S_1.csv", sim_dir / "S_2.csv",
                       "--n", 40, 40, "--out", out) == 0
            outs.append(dir_bytes(out))
        assert outs[0] == outs[1]

    def test_q_inf_accepted(self, sim_dir, tmp_path):
        out = tmp_path / "qinf"
        assert run("fit", "--method", "pnjgl", "--q", "inf",
                   "--lambda1", 2.0, "--lambda2", 5.0,
                   "--cov", sim_dir / "S_1.csv", sim_dir / "S_2.csv",
                   "--n", 40, 40, "--out", out) == 0
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag["q"] == "inf"


class TestScreen:
    def test_identity_case_all_singletons(self, tmp_path, capsys):
        s = np.eye(6)
        write_matrix(tmp_path / "S.csv", s)
        assert run("screen", "--method", "gl", "--lambda1", 1.0,
                   "--cov", tmp_path / "S.csv", "--n", 10) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["num_blocks"] == 6
        assert report["sufficient_holds"]

    def test_fully_coupled_single_block(self, tmp_path, capsys):
        s = np.eye(4) + 0.5
        write_matrix(tmp_path / "S.csv", s)
        assert run("screen", "--method", "cnjgl", "--lambda1", 0.1, "--lambda2", 1.0,
                   "--cov", tmp_path / "S.csv", "--n", 10) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["num_blocks"] == 1
        assert report["predicted_subproblem_sizes"] == [4]

    def test_flags_consistent_with_solver_support(self, tmp_path, capsys, rng):
        # On a p=20 block instance the screen-predicted support contains
        # the converged estimate's support.
        from njgl import (
            AdmmOptions, BlockPartition, EmpiricalModel, PenaltyConfig, solve_pnjgl,
        )

        p_half = 10
        s1 = np.zeros((20, 20)); s2 = np.zeros((20, 20))
        s1[:10, :10], s1[10:, 10:] = random_spd(rng, p_half), random_spd(rng, p_half)
        s2[:10, :10], s2[10:, 10:] = random_spd(rng, p_half), random_spd(rng, p_half)
        write_matrix(tmp_path / "S1.csv", s1)
        write_matrix(tmp_path / "S2.csv", s2)
        assert run("screen", "--method", "pnjgl", "--lambda1", 0.5, "--lambda2", 1.0,
                   "--cov", tmp_path / "S1.csv", tmp_path / "S2.csv",
                   "--n", 30, 30) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["sufficient_holds"]
        model = EmpiricalModel([s1, s2], [30, 30])
        est, _ = solve_pnjgl(model, PenaltyConfig(0.5, 1.0, q=2), AdmmOptions(eps=1e-6))
        part = BlockPartition(report["blocks"])
        mask = part.complement_mask()
        for theta in est.thetas:
            assert np.abs(theta[mask]).max() <= 1e-6

    def test_never_runs_solver_and_saves_report(self, tmp_path, capsys):
        s = np.eye(300)  # a solve this large would be noticeable
        write_matrix(tmp_path / "S.csv", s)
        out_file = tmp_path / "report.json"
        assert run("screen", "--method", "gl", "--lambda1", 1.0,
                   "--cov", tmp_path / "S.csv", "--n", 10,
                   "--out", out_file) == 0
        assert json.loads(out_file.read_text())["num_blocks"] == 300


class TestMetrics:
    @pytest.fixture
    def fitted(self, sim_dir, tmp_path):
        fit_dir = tmp_path / "fit"
        run("fit", "--method", "pnjgl", "--lambda1", 2.0, "--lambda2", 10.0,
            "--cov", sim_dir / "S_1.csv", sim_dir / "S_2.csv",
            "--n", 40, 40, "--out", fit_dir)
        return fit_dir

    def test_metrics_outputs(self, sim_dir, fitted, tmp_path, capsys):
        out = tmp_path / "metr"
        assert run("metrics", "--truth", sim_dir, "--fit", fitted, "--out", out) == 0
        report = json.loads(capsys.readouterr().out)
        assert set(report) >= {"positive_edges", "true_positive_edges",
                               "frobenius_error", "ppc", "tppc"}
        assert (out / "metrics.json").exists()
        assert (out / "metrics.csv").exists()
        assert (out / "node_scores.png").exists()
        header = (out / "metrics.csv").read_text().splitlines()[0]
        assert header.startswith("method,positive_edges")

    def test_self_comparison_zero_error(self, sim_dir, tmp_path, capsys):
        fake_fit = tmp_path / "perfect"
        fake_fit.mkdir()
        for k in (1, 2):
            truth = read_matrix(sim_dir / f"theta_true_{k}.csv")
            write_matrix(fake_fit / f"theta_{k}.csv", truth)
        (fake_fit / "diagnostics.json").write_text(json.dumps({
            "method": "gl",
            "estimate_files": ["theta_1.csv", "theta_2.csv"],
            "decomposition_files": [],
        }))
        assert run("metrics", "--truth", sim_dir, "--fit", fake_fit,
                   "--no-figures") == 0
        report = json.loads(capsys.readouterr().out)
        assert report["frobenius_error"] == 0.0
        assert report["positive_edges"] == report["true_positive_edges"]

    def test_zero_estimates_zero_positives(self, sim_dir, tmp_path, capsys):
        fake_fit = tmp_path / "zeros"
        fake_fit.mkdir()
        for k in (1, 2):
            write_matrix(fake_fit / f"theta_{k}.csv", np.zeros((20, 20)))
        (fake_fit / "diagnostics.json").write_text(json.dumps({
            "method": "gl",
            "estimate_files": ["theta_1.csv", "theta_2.csv"],
            "decomposition_files": [],
        }))
        assert run("metrics", "--truth", sim_dir, "--fit", fake_fit,
                   "--no-figures") == 0
        report = json.loads(capsys.readouterr().out)
        assert report["positive_edges"] == 0

    def test_deterministic_outputs(self, sim_dir, fitted, tmp_path):
        outs = []
        for name in ("m1", "m2"):
            out = tmp_path / name
            assert run("metrics", "--truth", sim_dir, "--fit", fitted,
                       "--out", out) == 0
            outs.append(dir_bytes(out))
        assert outs[0] == outs[1]


class TestCv:
    def test_end_to_end_with_figure_and_determinism(self, sim_dir, tmp_path):
        grid = tmp_path / "grid.csv"
        grid.write_text("2.0,0.0\n8.0,0.0\n")
        outs = []
        for name in ("cv1", "cv2"):
            out = tmp_path / name
            assert run("cv", "--raw", sim_dir / "X_1.csv", sim_dir / "X_2.csv",
                       "--method", "gl", "--grid", grid, "--folds", 4,
                       "--seed", 11, "--out", out, "--eps", 1e-3) == 0
            assert (out / "cv_table.csv").exists()
            assert (out / "cv_curve.png").exists()
            outs.append(dir_bytes(out))
        assert outs[0] == outs[1]
        header, rows = (tmp_path / "cv1" / "cv_table.csv").read_text().splitlines()[0], None
        assert header == "lambda1,lambda2,mean_loglik,std_loglik,mean_positive_edges"

    def test_single_point_grid(self, sim_dir, tmp_path):
        grid = tmp_path / "grid.csv"
        grid.write_text("1.5,3.0\n")
        out = tmp_path / "cv"
        assert run("cv", "--raw", sim_dir / "X_1.csv", sim_dir / "X_2.csv",
                   "--method", "pnjgl", "--grid", grid, "--folds", 3,
                   "--seed", 0, "--out", out, "--eps", 1e-3) == 0
        lines = (out / "cv_table.csv").read_text().splitlines()
        assert len(lines) == 2

    def test_bad_grid_file_exits_2(self, sim_dir, tmp_path, capsys):
        grid = tmp_path / "grid.csv"
        grid.write_text("1.0,2.0,3.0\n")
        code = run("cv", "--raw", sim_dir / "X_1.csv", sim_dir / "X_2.csv",
                   "--method", "gl", "--grid", grid, "--out", tmp_path / "cv")
        assert code == 2


class TestMatrixRoundTrip:
    def test_full_precision(self, tmp_path, rng):
        m = rng.standard_normal((7, 7)) * np.pi
        write_matrix(tmp_path / "m.csv", m)
        back = read_matrix(tmp_path / "m.csv")
        assert np.array_equal(m, back)

    def test_header_free_dense_rows(self, tmp_path):
        write_matrix(tmp_path / "m.csv", np.eye(2))
        text = (tmp_path / "m.csv").read_text()
        assert text == "1,0\n0,1\n"
