# tests/test_disgnn.py
import dataclasses
import math

import numpy as np
import pytest

from core.errors import ConfigurationError
from services import disgnn
from services.counterexamples import A1_FAMILIES
from services.disgnn import ModelConfig, RbfParams, build_weights, forward, rbf_expand
from services.geometry import (
    apply_e3,
    build_point_cloud,
    distance_matrix,
    random_e3,
    random_permutation,
)


def _rel(x, y):
    return abs(x - y) / (1.0 + max(abs(x), abs(y)))


@pytest.fixture
def small_cloud():
    rng = np.random.default_rng(2024)
    return build_point_cloud(rng.uniform(-1.5, 1.5, size=(6, 3)), [1, 2, 1, 3, 2, 1])


class TestRbf:
    def test_shape_and_peak(self):
        p = RbfParams.default(8, beta=10.0)
        d = np.array([[0.0, 0.5], [0.5, 0.0]])
        out = rbf_expand(d, p)
        assert out.shape == (2, 2, 8)
        assert np.all((out > 0) & (out <= 1))
        # μ_k = exp(-d) 일 때 최대값 1
        mu = p.mus[3]
        assert math.isclose(float(rbf_expand(-math.log(mu), p)[3]), 1.0)

    def test_formula(self):
        p = RbfParams.default(4, beta=2.0)
        d = 0.3
        expected = np.exp(-2.0 * (np.exp(-d) - p.mus) ** 2)
        assert np.allclose(rbf_expand(d, p), expected)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [
        {"variant": "x"},
        {"variant": "plain", "k": 1},
        {"rounds": -1},
        {"hidden_dim": 0},
        {"seed": -3},
        {"activation": "relu6"},
        {"beta": 0.0},
    ])
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ConfigurationError):
            ModelConfig(**kwargs)

    def test_vanilla_ignores_k(self):
        assert ModelConfig(variant="vanilla", k=1).order == 1

    def test_label_vocabulary(self):
        pc = build_point_cloud([[0, 0, 0], [1, 0, 0]], [0, 500])
        with pytest.raises(ConfigurationError):
            forward(pc, ModelConfig())


class TestInvariance:
    @pytest.mark.parametrize("variant", ["plain", "f", "e"])
    @pytest.mark.parametrize("k", [2, 3])
    @pytest.mark.parametrize("rounds", [0, 1, 2, 3])
    @pytest.mark.parametrize("seed", range(3))
    def test_scalar_is_e3_and_permutation_invariant(self, small_cloud, variant, k, rounds, seed):
        cfg = ModelConfig(variant=variant, k=k, rounds=rounds, hidden_dim=12, rbf_dim=8, seed=seed)
        moved = apply_e3(small_cloud.permuted(random_permutation(small_cloud.n, seed + 10)), random_e3(seed))
        assert _rel(forward(small_cloud, cfg).scalar, forward(moved, cfg).scalar) < 1e-8

    @pytest.mark.parametrize("rounds", [0, 1, 3])
    def test_vanilla_scalar_is_invariant(self, small_cloud, rounds):
        cfg = ModelConfig(variant="vanilla", rounds=rounds, hidden_dim=12, rbf_dim=8, seed=1)
        moved = apply_e3(small_cloud.permuted(random_permutation(small_cloud.n, 3)), random_e3(3))
        assert _rel(forward(small_cloud, cfg).scalar, forward(moved, cfg).scalar) < 1e-8

    @pytest.mark.parametrize("variant", ["plain", "f", "e", "vanilla"])
    @pytest.mark.parametrize("seed", range(3))
    def test_equivariant_head(self, small_cloud, variant, seed):
        cfg = ModelConfig(variant=variant, k=2, rounds=2, hidden_dim=12, rbf_dim=8, seed=seed)
        g = random_e3(seed)
        perm = random_permutation(small_cloud.n, seed)
        base = forward(small_cloud, cfg).equivariant
        moved = forward(apply_e3(small_cloud.permuted(perm), g), cfg).equivariant
        assert np.allclose(moved, g.rotation @ base, atol=1e-8)

    @pytest.mark.parametrize("variant", ["plain", "f", "e"])
    def test_node_reps_follow_permutation(self, small_cloud, variant):
        cfg = ModelConfig(variant=variant, k=2, rounds=1, hidden_dim=8, rbf_dim=6)
        perm = random_permutation(small_cloud.n, 4)
        base = forward(small_cloud, cfg).node_reps
        moved = forward(small_cloud.permuted(perm), cfg).node_reps
        assert np.allclose(moved, base[perm], atol=1e-10)

    def test_regular_tetrahedron_is_symmetric(self):
        tetra = build_point_cloud([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]])
        for variant in ("plain", "f", "e", "vanilla"):
            out = forward(tetra, ModelConfig(variant=variant, rounds=2, hidden_dim=8, rbf_dim=6))
            assert np.allclose(out.node_reps, out.node_reps[0], atol=1e-10)
            assert np.allclose(out.equivariant, 0.0, atol=1e-10)


class TestStructure:
    def test_zero_rounds_returns_init(self, small_cloud):
        cfg = ModelConfig(variant="plain", rounds=0, hidden_dim=8, rbf_dim=6)
        out = forward(small_cloud, cfg)
        init = disgnn.init_reps(small_cloud, cfg, build_weights(cfg))
        assert np.array_equal(out.tuple_reps, init)

    def test_output_fields(self, small_cloud):
        out = forward(small_cloud, ModelConfig(variant="e", k=2, rounds=1, hidden_dim=6, rbf_dim=4))
        assert [f.name for f in dataclasses.fields(out)] == ["variant", "tuple_reps", "scalar", "node_reps", "equivariant"]
        assert out.tuple_reps.shape == (6, 6, 6)
        assert out.node_reps.shape[0] == 6

    def test_zero_round_outputs_agree_across_tuple_variants(self, small_cloud):
        scalars = {v: forward(small_cloud, ModelConfig(variant=v, rounds=0, seed=5)).scalar for v in ("plain", "f", "e")}
        assert scalars["plain"] == scalars["f"] == scalars["e"]

    @pytest.mark.parametrize("k", [2, 3])
    def test_fast_path_matches_reference(self, small_cloud, k):
        fast = forward(small_cloud, ModelConfig(variant="f", k=k, rounds=2, hidden_dim=10, rbf_dim=6, fast_path=True))
        slow = forward(small_cloud, ModelConfig(variant="f", k=k, rounds=2, hidden_dim=10, rbf_dim=6, fast_path=False))
        assert np.allclose(fast.tuple_reps, slow.tuple_reps, atol=1e-10)
        assert _rel(fast.scalar, slow.scalar) < 1e-8

    def test_k2_edge_state_uses_tuple_rep(self, small_cloud):
        cfg = ModelConfig(variant="e", k=2, rounds=1, hidden_dim=8, rbf_dim=6)
        weights = build_weights(cfg)
        H = disgnn.init_reps(small_cloud, cfg, weights)
        rbf = rbf_expand(distance_matrix(small_cloud), weights.rbf)
        expected = weights.rounds[0].edge(np.concatenate([rbf, H], axis=-1))
        assert np.allclose(disgnn.edge_states(H, small_cloud, weights, 0), expected)

    def test_step_e_matches_explicit_sum(self, small_cloud):
        cfg = ModelConfig(variant="e", k=2, rounds=1, hidden_dim=6, rbf_dim=4)
        weights = build_weights(cfg)
        H = disgnn.init_reps(small_cloud, cfg, weights)
        E = disgnn.edge_states(H, small_cloud, weights, 0)
        rw = weights.rounds[0]
        n = small_cloud.n
        got = disgnn.step_e(H, small_cloud, weights, 0, edges=E)
        i, j = 1, 4
        # 위치 0 을 w 로 바꾼 이웃 (w, j) 와 간선 e_{i,w}
        m0 = sum(rw.phi[0](np.concatenate([H[w, j], E[i, w]])) for w in range(n)) / n
        m1 = sum(rw.phi[1](np.concatenate([H[i, w], E[j, w]])) for w in range(n)) / n
        expected = H[i, j] + rw.update(np.concatenate([H[i, j], m0, m1]))
        assert np.allclose(got[i, j], expected, atol=1e-10)

    @pytest.mark.parametrize("variant", ["plain", "f", "e"])
    def test_threads_agree_with_serial(self, small_cloud, variant):
        cfg = ModelConfig(variant=variant, k=3, rounds=1, hidden_dim=6, rbf_dim=4, fast_path=False)
        serial = forward(small_cloud, cfg, threads=1).scalar
        parallel = forward(small_cloud, cfg, threads=3).scalar
        assert _rel(serial, parallel) < 1e-10


class TestDeterminism:
    def test_same_seed_same_output(self, small_cloud):
        cfg = ModelConfig(variant="f", rounds=2, seed=9)
        assert forward(small_cloud, cfg).scalar == forward(small_cloud, cfg).scalar

    def test_different_seed_different_output(self, small_cloud):
        a = forward(small_cloud, ModelConfig(variant="f", rounds=2, seed=1)).scalar
        b = forward(small_cloud, ModelConfig(variant="f", rounds=2, seed=2)).scalar
        assert a != b


class TestConsistencyWithDiscreteEngine:
    @pytest.mark.parametrize("seed", range(3))
    def test_vanilla_cannot_separate_fig2(self, fig2_pair, seed):
        cfg = ModelConfig(variant="vanilla", rounds=3, seed=seed)
        assert _rel(forward(fig2_pair.left, cfg).scalar, forward(fig2_pair.right, cfg).scalar) < 1e-6

    def test_f_variant_separates_fig2(self, fig2_pair):
        hits = 0
        for seed in range(5):
            cfg = ModelConfig(variant="f", k=2, rounds=3, seed=seed)
            if _rel(forward(fig2_pair.left, cfg).scalar, forward(fig2_pair.right, cfg).scalar) > 1e-6:
                hits += 1
        assert hits >= 4

    @pytest.mark.slow
    @pytest.mark.parametrize("family", list(A1_FAMILIES))
    def test_f_variant_separates_every_polyhedron_pair(self, a1_corpus, family):
        pair = a1_corpus[family]
        hits = 0
        for seed in range(5):
            cfg = ModelConfig(variant="f", k=2, rounds=3, seed=seed)
            if _rel(forward(pair.left, cfg).scalar, forward(pair.right, cfg).scalar) > 1e-6:
                hits += 1
        assert hits >= 4


class TestStandardize:
    def test_features_have_unit_spread(self):
        rng = np.random.default_rng(0)
        out = disgnn.standardize(rng.normal(3.0, 0.1, size=(5, 5, 4)))
        assert np.allclose(out.mean(axis=(0, 1)), 1.0)
        assert np.allclose(out.std(axis=(0, 1)), 1.0, atol=1e-3)

    def test_constant_feature_becomes_one(self):
        reps = np.full((4, 4, 2), 7.5)
        assert np.allclose(disgnn.standardize(reps), 1.0)

    @pytest.mark.parametrize("variant", ["plain", "f", "e"])
    def test_spread_does_not_collapse_over_rounds(self, small_cloud, variant):
        for rounds in (1, 3, 5):
            H = forward(small_cloud, ModelConfig(variant=variant, k=2, rounds=rounds, seed=2)).tuple_reps
            spread = H.reshape(-1, H.shape[-1]).std(axis=0)
            # 퇴화하지 않은 특징은 분산 1 근처를 유지
            assert np.median(spread) > 0.5
