import math
from dataclasses import replace

import numpy as np
import pytest

from multiexp.errors import ConfigError
from multiexp.synthetic import (
    Dataset,
    SyntheticConfig,
    analytic_divergence,
    erm_objective,
    generate_dataset,
    generate_world,
    identifiability_dimension,
    load_dataset_csv,
    load_world_json,
    quadratic_model,
    save_dataset_csv,
    save_world_json,
    solve_erm,
    theorem1_grid_oracle,
    zeta_half_width,
)


def config(**kw):
    base = dict(l=10, m=5, W2=10.0, X2=(3.0, 2.5, 2.0, 1.5, 1.0), s=1.0, eps_b=0.1, seed=7)
    base.update(kw)
    return SyntheticConfig(**base)


def gram_schmidt_rank(M, tol=1e-9):
    """Rank by modified Gram-Schmidt on columns (independent of SVD)."""
    basis = []
    scale = max(np.linalg.norm(M, axis=0).max(), 1e-300)
    for col in M.T:
        v = col.astype(float).copy()
        for b in basis:
            v -= (b @ v) * b
        for b in basis:
            v -= (b @ v) * b
        nrm = np.linalg.norm(v)
        if nrm > tol * scale:
            basis.append(v / nrm)
    return len(basis)


def pg_oracle(dataset, W2, iters=200_000):
    """Fixed-step projected gradient run far past convergence."""
    H, g, _ = quadratic_model(dataset)
    L = np.linalg.eigvalsh(H).max()
    w = np.zeros_like(g)
    for _ in range(iters):
        w = w - (H @ w - g) / L
        nrm = np.linalg.norm(w)
        if nrm > W2:
            w *= W2 / nrm
    return w


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(l=3), dict(l=0), dict(m=0, X2=()), dict(X2=(1.0,)),
                                    dict(W2=0.0), dict(s=0.0), dict(eps_b=-1.0)])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            config(**kw)

    def test_prefix(self):
        sub = config().prefix(2)
        assert sub.m == 2 and sub.X2 == (3.0, 2.5)


class TestWorld:
    def test_small_world_invariants(self):
        w = generate_world(config(l=2, m=1, X2=(1.0,)))
        assert w.A[0].shape == (2, 1)
        assert set(np.unique(w.A[0])) <= {-1.0, 1.0}
        assert np.linalg.norm(w.w_star) <= 10.0

    def test_determinism(self):
        a, b = generate_world(config()), generate_world(config())
        assert all(np.array_equal(x, y) for x, y in zip(a.A, b.A))
        assert np.array_equal(a.w_star, b.w_star)
        c = generate_world(config(seed=8))
        assert not np.array_equal(a.w_star, c.w_star)

    def test_weight_entries_centered(self):
        cfg = config(l=2, m=1, X2=(1.0,))
        vals = np.concatenate([generate_world(replace(cfg, seed=s)).w_star for s in range(10_000)])
        bound = 10.0 / math.sqrt(2)
        sd = bound / math.sqrt(3) / math.sqrt(vals.size)
        assert abs(vals.mean()) < 3 * sd
        assert np.abs(vals).max() <= bound

    def test_json_round_trip(self, tmp_path):
        w = generate_world(config())
        save_world_json(w, tmp_path / "w.json")
        back = load_world_json(tmp_path / "w.json")
        assert np.array_equal(back.w_star, w.w_star)
        assert all(np.array_equal(x, y) for x, y in zip(back.A, w.A))


class TestDataset:
    def test_noiseless_outputs(self):
        cfg = config(eps_b=0.0)
        w = generate_world(cfg)
        d = generate_dataset(w, cfg, [20, 5, 7, 3, 1])
        for x, y in zip(d.inputs, d.outputs):
            np.testing.assert_array_equal(y, x @ w.w_star)
        assert d.n == (20, 5, 7, 3, 1)

    def test_norm_caps(self):
        cfg = config(l=16, m=5)
        w = generate_world(cfg)
        d = generate_dataset(w, cfg, [2000] * 5)
        for x, X2 in zip(d.inputs, cfg.X2):
            assert np.linalg.norm(x, axis=1).max() <= X2
            assert np.abs(x).max() <= X2 / 4 + 1e-15

    def test_hidden_second_moment(self):
        cfg = config(l=4, m=1, X2=(2.0,), eps_b=0.0)
        w = generate_world(cfg)
        d = generate_dataset(w, cfg, [1_000_000])
        zeta = np.linalg.lstsq(w.A[0], d.inputs[0].T, rcond=None)[0].ravel()
        want = 4 * 2.0**2 / (3 * 4**3)
        sd = np.std(zeta**2) / math.sqrt(zeta.size)
        assert abs(np.mean(zeta**2) - want) < 3 * sd
        assert np.abs(zeta).max() <= zeta_half_width(2.0, 4)

    def test_bad_counts(self):
        cfg = config()
        w = generate_world(cfg)
        with pytest.raises(ConfigError):
            generate_dataset(w, cfg, [1, 2])
        with pytest.raises(ConfigError):
            generate_dataset(w, cfg, [0, 1, 1, 1, 1])

    def test_csv_round_trip(self, tmp_path):
        cfg = config()
        w = generate_world(cfg)
        d = generate_dataset(w, cfg, [3, 4, 5, 6, 7])
        save_dataset_csv(d, tmp_path / "d.csv")
        back = load_dataset_csv(tmp_path / "d.csv")
        for a, b in zip(d.inputs + d.outputs, back.inputs + back.outputs):
            np.testing.assert_array_equal(a, b)


class TestERM:
    def test_noiseless_identifiable_recovery(self):
        cfg = config(eps_b=0.0)
        w = generate_world(cfg)
        d = generate_dataset(w, cfg, [200] * 5)
        assert identifiability_dimension(w) == 0
        assert np.linalg.norm(solve_erm(d, None, cfg.W2) - w.w_star) <= 1e-6

    def test_all_zero_data(self):
        d = Dataset((np.zeros((4, 6)),), (np.zeros(4),))
        np.testing.assert_array_equal(solve_erm(d, None, 1.0), np.zeros(6))

    def test_min_norm_tie_break(self):
        cfg = config(m=1, X2=(3.0,), eps_b=0.0)
        w = generate_world(cfg)
        d = generate_dataset(w, cfg, [50])
        w_hat = solve_erm(d, None, cfg.W2)
        # minimum-norm solution has no component in the invisible subspace
        q, _ = np.linalg.qr(w.A[0])
        np.testing.assert_allclose(w_hat, q @ (q.T @ w.w_star), atol=1e-8)

    @pytest.mark.parametrize("W2,m,seed", [(10.0, 5, 1), (10.0, 1, 2), (0.5, 5, 3), (0.3, 1, 4), (1.0, 2, 5)])
    def test_against_projected_gradient(self, W2, m, seed):
        cfg = config(W2=W2, m=m, X2=(3.0, 2.5, 2.0, 1.5, 1.0)[:m], seed=seed, eps_b=0.5)
        w = generate_world(replace(cfg, W2=10.0))
        d = generate_dataset(w, cfg, [40] * m)
        w_hat = solve_erm(d, None, W2)
        assert np.linalg.norm(w_hat) <= W2 + 1e-9
        f_hat = erm_objective(w_hat, d)
        f_pg = erm_objective(pg_oracle(d, W2), d)
        assert f_hat <= f_pg + 1e-10 * max(abs(f_pg), 1e-4)

    def test_boundary_solution_is_kkt(self):
        cfg = config(W2=0.2, seed=11)
        w = generate_world(replace(cfg, W2=10.0))
        d = generate_dataset(w, cfg, [100] * 5)
        w_hat = solve_erm(d, None, 0.2)
        assert np.linalg.norm(w_hat) == pytest.approx(0.2, rel=1e-9)
        H, g, _ = quadratic_model(d)
        grad = H @ w_hat - g
        # gradient anti-parallel to w_hat at the boundary optimum
        cos = float(grad @ w_hat) / (np.linalg.norm(grad) * np.linalg.norm(w_hat))
        assert cos == pytest.approx(-1.0, abs=1e-8)

    def test_custom_n_weights_objective(self):
        cfg = config()
        w = generate_world(cfg)
        d = generate_dataset(w, cfg, [10] * 5)
        assert erm_objective(w.w_star, d, [10] * 5) == erm_objective(w.w_star, d)


class TestDivergence:
    def test_zero_at_truth(self):
        w = generate_world(config())
        assert analytic_divergence(w, config(), w.w_star) == 0.0

    def test_zero_on_invisible_direction(self, rng):
        cfg = config(m=1, X2=(3.0,))
        w = generate_world(cfg)
        q, _ = np.linalg.qr(w.A[0], mode="complete")
        null = q[:, 5:] @ rng.normal(size=5)
        assert analytic_divergence(w, cfg, w.w_star + null) < 1e-28
        assert analytic_divergence(w, cfg, w.w_star + w.A[0][:, 0]) > 0

    def test_nonnegative(self, rng):
        cfg = config()
        w = generate_world(cfg)
        for _ in range(20):
            assert analytic_divergence(w, cfg, rng.normal(size=10)) >= 0

    def test_matches_monte_carlo_loss_gap(self, rng):
        cfg = config(l=6, m=2, W2=0.5, X2=(1.0, 0.7), eps_b=0.1, seed=3)
        w = generate_world(cfg)
        w_hat = w.w_star + rng.normal(size=6) * 0.05
        w_hat *= min(1.0, 0.5 / np.linalg.norm(w_hat))
        gaps, variances = [], []
        for A, X2 in zip(w.A, cfg.X2):
            hw = zeta_half_width(X2, 6)
            zeta = rng.uniform(-hw, hw, size=(1_000_000, 3))
            eps = rng.uniform(-0.1, 0.1, size=1_000_000)
            x = zeta @ A.T
            y = x @ w.w_star + eps
            loss_hat = 0.5 * (x @ w_hat - y) ** 2
            loss_star = 0.5 * (x @ w.w_star - y) ** 2
            assert loss_hat.max() < 1 and loss_star.max() < 1
            diff = loss_hat - loss_star
            gaps.append(diff.mean())
            variances.append(diff.var() / diff.size)
        mc = float(np.mean(gaps))
        se = math.sqrt(sum(variances)) / 2
        assert abs(analytic_divergence(w, cfg, w_hat) - mc) <= 3 * se


class TestIdentifiability:
    def test_single_experiment_leaves_half(self):
        for seed in range(20):
            cfg = config(seed=seed)
            w = generate_world(cfg)
            d1 = identifiability_dimension(w, 1)
            assert d1 == 10 - gram_schmidt_rank(w.A[0])
            assert d1 >= 5

    def test_non_increasing_and_full_rank(self):
        for seed in range(20):
            w = generate_world(config(seed=seed))
            dims = [identifiability_dimension(w, m) for m in range(1, 6)]
            assert all(b <= a for a, b in zip(dims, dims[1:]))
            assert dims[-1] == 0
            assert identifiability_dimension(w) == dims[-1]


class TestGridOracle:
    def test_hand_example(self):
        combined, inter = theorem1_grid_oracle([[0, 0, 1], [0, 1, 0]])
        assert combined == inter == frozenset({0})

    def test_identical_lists(self):
        row = [3.0, 1.0, 1.0, 2.0]
        combined, inter = theorem1_grid_oracle([row, row, row])
        assert combined == inter == frozenset({1, 2})

    def test_planted_minimizer(self, rng):
        for _ in range(500):
            m, size = int(rng.integers(1, 6)), int(rng.integers(1, 30))
            L = rng.integers(1, 5, size=(m, size)).astype(float)
            planted = rng.choice(size, size=int(rng.integers(1, size + 1)), replace=False)
            L[:, planted] = 0.0
            combined, inter = theorem1_grid_oracle(L)
            assert combined == inter == frozenset(int(p) for p in planted)

    def test_no_common_minimizer_can_differ(self):
        combined, inter = theorem1_grid_oracle([[0, 1], [1, 0.5]])
        assert inter == frozenset()
        assert combined == frozenset({0})

    def test_rejects_empty(self):
        with pytest.raises(ConfigError):
            theorem1_grid_oracle([[]])
        with pytest.raises(ConfigError):
            theorem1_grid_oracle([[1.0, math.inf]])
