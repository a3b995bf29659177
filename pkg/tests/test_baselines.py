import numpy as np
import pytest

from njgl import (
    AdmmOptions,
    EmpiricalModel,
    PenaltyConfig,
    ggl_objective,
    solve_fgl,
    solve_ggl,
    solve_gl,
    solve_gl_model,
    solve_pnjgl,
)
from conftest import random_spd, two_class_model


class TestGl:
    def test_identity_unpenalized(self):
        theta, diag = solve_gl(np.eye(4), 10, 0.0)
        assert diag.converged
        assert np.abs(theta - np.eye(4)).max() <= 1e-4

    def test_diagonal_above_screening_threshold(self, rng):
        s = random_spd(rng, 6)
        n = 9.0
        lam = n * np.abs(s - np.diag(np.diag(s))).max() + 1e-9
        theta, diag = solve_gl(s, n, lam)
        assert diag.converged
        off = theta - np.diag(np.diag(theta))
        assert np.abs(off).max() <= 1e-6

    def test_kkt_residual(self, rng):
        p = 4
        s = random_spd(rng, p)
        n, lam = 12.0, 0.8
        theta, diag = solve_gl(s, n, lam, AdmmOptions(eps=1e-6))
        assert diag.converged
        grad = -n * np.linalg.inv(theta) + n * s
        # on the support the subgradient is the sign; off it stays in [-1, 1]
        on = np.abs(theta) > 1e-8
        resid = np.abs(grad[on] + lam * np.sign(theta[on])).max()
        slack = (np.abs(grad[~on]) - lam).max() if (~on).any() else -np.inf
        assert resid <= 1e-3 * n
        assert slack <= 1e-3 * n

    def test_split_diag_offdiag_penalty(self, rng):
        # With a huge off-diagonal penalty only the diagonal survives.
        s = random_spd(rng, 5)
        theta, _ = solve_gl(s, 10, 0.1, lambda1_offdiag=1e4)
        assert np.abs(theta - np.diag(np.diag(theta))).max() <= 1e-8

    def test_model_wrapper(self, rng):
        model = two_class_model(rng, 4)
        est, diags = solve_gl_model(model, 1.0)
        assert est.num_classes == 2
        assert all(d.converged for d in diags)
        for k, (s, n) in enumerate(zip(model.covariances, model.sample_sizes)):
            ref, _ = solve_gl(s, n, 1.0)
            assert np.abs(est.thetas[k] - ref).max() <= 1e-12


class TestFgl:
    def test_is_bitwise_alias_of_pnjgl_q1(self, rng):
        model = two_class_model(rng, 6)
        est_f, diag_f = solve_fgl(model, 1.0, 2.0)
        est_p, diag_p = solve_pnjgl(model, PenaltyConfig(1.0, 2.0, q=1))
        for a, b in zip(est_f.thetas, est_p.thetas):
            assert np.array_equal(a, b)
        assert np.array_equal(est_f.decomposition[0], est_p.decomposition[0])
        assert diag_f.total_sweeps == diag_p.total_sweeps

    def test_lambda2_zero_decouples(self, rng):
        model = two_class_model(rng, 6)
        est, diag = solve_fgl(model, 1.2, 0.0)
        assert diag.converged
        for k, (s, n) in enumerate(zip(model.covariances, model.sample_sizes)):
            ref, _ = solve_gl(s, n, 1.2)
            assert np.linalg.norm(est.thetas[k] - ref) / np.linalg.norm(ref) <= 1e-3

    def test_fusion_limit_matches_pooled_gl(self, rng):
        p = 8
        model = two_class_model(rng, p, n1=20, n2=20)
        lam1 = 1.0
        est, diag = solve_fgl(model, lam1, 500.0, AdmmOptions(eps=1e-6))
        assert np.abs(est.thetas[0] - est.thetas[1]).max() <= 1e-4
        n1, n2 = model.sample_sizes
        pooled = (n1 * model.covariances[0] + n2 * model.covariances[1]) / (n1 + n2)
        ref, _ = solve_gl(pooled, n1 + n2, 2 * lam1, AdmmOptions(eps=1e-6))
        assert np.linalg.norm(est.thetas[0] - ref) / np.linalg.norm(ref) <= 1e-4


class TestGgl:
    def test_lambda2_zero_decouples(self, rng):
        p = 5
        covs = [random_spd(rng, p) for _ in range(3)]
        model = EmpiricalModel(covs, [10, 12, 14])
        est, diag = solve_ggl(model, 1.1, 0.0)
        assert diag.converged
        for k, (s, n) in enumerate(zip(covs, model.sample_sizes)):
            ref, _ = solve_gl(s, n, 1.1)
            assert np.linalg.norm(est.thetas[k] - ref) / np.linalg.norm(ref) <= 1e-3

    def test_large_lambda2_zero_lambda1_forces_diagonal(self, rng):
        model = two_class_model(rng, 10)
        bound = max(
            n * np.abs(s - np.diag(np.diag(s))).max()
            for s, n in zip(model.covariances, model.sample_sizes)
        )
        est, diag = solve_ggl(model, 0.0, 3 * bound, AdmmOptions(eps=1e-6))
        assert diag.converged
        for theta in est.thetas:
            assert np.abs(theta - np.diag(np.diag(theta))).max() <= 1e-6

    def test_beats_gl_pair_under_its_own_objective(self, rng):
        p = 4
        model = two_class_model(rng, p)
        lam1, lam2 = 0.5, 1.0
        est, _ = solve_ggl(model, lam1, lam2, AdmmOptions(eps=1e-6))
        gl_pair = [
            solve_gl(s, n, lam1, AdmmOptions(eps=1e-6))[0]
            for s, n in zip(model.covariances, model.sample_sizes)
        ]
        ours = ggl_objective(model, list(est.thetas), lam1, lam2)
        theirs = ggl_objective(model, gl_pair, lam1, lam2)
        assert ours <= theirs + 1e-6 * max(1.0, abs(theirs))

    def test_requires_two_classes(self, rng):
        model = EmpiricalModel([np.eye(3)], [5])
        with pytest.raises(ValueError, match="two classes"):
            solve_ggl(model, 1.0, 1.0)


class TestCrossMethodIdentities:
    def test_gl_matches_joint_methods_at_lambda2_zero(self, rng):
        from njgl import solve_cnjgl

        model = two_class_model(rng, 5)
        lam = 0.9
        gl_est, _ = solve_gl_model(model, lam)
        pn_est, _ = solve_pnjgl(model, PenaltyConfig(lam, 0.0, q=2))
        cn_est, _ = solve_cnjgl(model, PenaltyConfig(lam, 0.0, q=2))
        for k in range(2):
            base = np.linalg.norm(gl_est.thetas[k])
            assert np.linalg.norm(pn_est.thetas[k] - gl_est.thetas[k]) / base <= 1e-3
            assert np.linalg.norm(cn_est.thetas[k] - gl_est.thetas[k]) / base <= 1e-3

    def test_all_outputs_symmetric_spd(self, rng):
        model = two_class_model(rng, 5)
        outputs = []
        outputs.extend(solve_gl_model(model, 0.7)[0].thetas)
        outputs.extend(solve_fgl(model, 0.7, 0.4)[0].thetas)
        outputs.extend(solve_ggl(model, 0.7, 0.4)[0].thetas)
        for theta in outputs:
            assert np.abs(theta - theta.T).max() <= 1e-8
            assert np.linalg.eigvalsh(theta)[0] > 0
