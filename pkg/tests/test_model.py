"""Two-level attention model: semantic fusion, scoring, loss, gradients."""

import numpy as np
import pytest

from fedhin.model import (Batch, Gradients, ModelParams, apply_sgd, backward,
                          bpr_loss, forward, score)
from fedhin.model.hgnn import _side_forward
from model_fixtures import max_gradient_rel_error, small_model


def self_only_batch(num_users=2, num_items=2):
    return Batch(
        user_paths={"p1": {u: np.array([u]) for u in range(num_users)}},
        item_paths={"q1": {v: np.array([v]) for v in range(num_items)}},
        pairs=[(0, 0, 1)],
    )


def elu(x):
    return np.where(x > 0, x, np.expm1(x))


class TestSemanticFusion:
    def test_single_path_weight_is_one(self):
        params = ModelParams.init(2, 2, 4, ["p1", "q1"], seed=0)
        cache = _side_forward(params.user_emb, {"p1": {0: np.array([0, 1])}},
                              params, "user")
        assert np.allclose(cache.beta, [1.0])

    def test_identical_paths_share_weight(self):
        params = ModelParams.init(2, 2, 4, ["p1", "p2", "q1"], seed=0)
        params.path_W["p2"] = params.path_W["p1"].copy()
        params.path_a["p2"] = params.path_a["p1"].copy()
        nbrs = {0: np.array([0, 1])}
        cache = _side_forward(params.user_emb, {"p1": nbrs, "p2": nbrs},
                              params, "user")
        assert np.allclose(cache.beta, [0.5, 0.5])

    def test_weights_sum_to_one(self):
        params, batch = small_model(3)
        cache = forward(params, batch)
        assert cache.user_side.beta.sum() == pytest.approx(1.0, abs=1e-9)
        assert cache.item_side.beta.sum() == pytest.approx(1.0, abs=1e-9)

    def test_fused_embedding_is_convex_combination(self):
        params, batch = small_model(5)
        cache = forward(params, batch)
        side = cache.user_side
        for anchor in side.anchors:
            expected = sum(side.beta[k] * side.node[(p, anchor)][3]
                           for k, p in enumerate(side.path_names))
            assert np.allclose(side.z[anchor], expected)

    def test_empty_path_list_rejected(self):
        params = ModelParams.init(2, 2, 4, ["p1"], seed=0)
        with pytest.raises(ValueError):
            _side_forward(params.user_emb, {}, params, "user")

    def test_empty_anchor_set_rejected(self):
        params = ModelParams.init(2, 2, 4, ["p1"], seed=0)
        with pytest.raises(ValueError):
            _side_forward(params.user_emb, {"p1": {}}, params, "user")

    def test_unknown_row_rejected(self):
        params = ModelParams.init(2, 2, 4, ["p1"], seed=0)
        with pytest.raises(ValueError, match="unknown user row"):
            _side_forward(params.user_emb, {"p1": {0: np.array([5])}},
                          params, "user")

    def test_node_results_independent_of_batch_composition(self):
        params = ModelParams.init(3, 2, 4, ["p1", "q1"], seed=1)
        both = _side_forward(params.user_emb,
                             {"p1": {0: np.array([1, 2]), 1: np.array([0])}},
                             params, "user")
        solo = _side_forward(params.user_emb, {"p1": {0: np.array([1, 2])}},
                             params, "user")
        a_both = both.node[("p1", 0)]
        a_solo = solo.node[("p1", 0)]
        for x, y in zip(a_both, a_solo):
            assert np.allclose(x, y)


class TestScore:
    def test_orthogonal_is_zero(self):
        assert score(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0

    def test_identical_unit_vector_is_one(self):
        v = np.array([0.6, 0.8])
        assert score(v, v) == pytest.approx(1.0)

    def test_hand_value(self):
        assert score(np.array([1.0, 2.0]), np.array([3.0, -1.0])) == pytest.approx(1.0)


class TestLoss:
    def test_zero_margin_is_ln2_per_pair(self):
        loss = bpr_loss(np.array([0.3, 1.1]), np.array([0.3, 1.1]))
        assert loss == pytest.approx(2 * np.log(2.0))

    def test_large_margin_saturates_to_zero(self):
        assert bpr_loss(np.array([50.0]), np.array([0.0])) == pytest.approx(0.0, abs=1e-9)

    def test_unit_margin(self):
        assert bpr_loss(np.array([1.0]), np.array([0.0])) == pytest.approx(0.3132616875)

    def test_numerically_stable_for_large_negative_margin(self):
        loss = bpr_loss(np.array([0.0]), np.array([1000.0]))
        assert np.isfinite(loss) and loss == pytest.approx(1000.0)

    def test_derivative_at_zero_margin_is_minus_half(self):
        eps = 1e-7
        d = (bpr_loss(np.array([eps]), np.array([0.0]))
             - bpr_loss(np.array([-eps]), np.array([0.0]))) / (2 * eps)
        assert d == pytest.approx(-0.5, abs=1e-6)


class TestForward:
    def test_self_only_scores_match_scalar_oracle(self):
        params = ModelParams.init(2, 2, 4, ["p1", "q1"], seed=2)
        cache = forward(params, self_only_batch())
        z_u = elu(params.user_emb[0])
        y_pos = float(z_u @ elu(params.item_emb[0]))
        y_neg = float(z_u @ elu(params.item_emb[1]))
        assert cache.y_pos[0] == pytest.approx(y_pos)
        assert cache.y_neg[0] == pytest.approx(y_neg)
        assert cache.loss == pytest.approx(np.logaddexp(0.0, -(y_pos - y_neg)))


class TestBackward:
    def test_matches_finite_differences(self):
        assert max_gradient_rel_error(0) < 1e-4

    def test_one_sgd_step_decreases_loss(self):
        params, batch = small_model(4)
        cache = forward(params, batch)
        grads = backward(params, cache)
        apply_sgd(params, grads, 0.05)
        assert forward(params, batch).loss < cache.loss

    def test_zero_gradients_leave_params_unchanged(self):
        params, _ = small_model(6)
        before = params.copy()
        apply_sgd(params, Gradients.zeros_like(params), 0.1)
        assert np.array_equal(params.user_emb, before.user_emb)
        assert np.array_equal(params.sem_W, before.sem_W)

    def test_sgd_scalar_arithmetic(self):
        params, _ = small_model(0)
        grads = Gradients.zeros_like(params)
        grads.user_rows[0] = np.full(params.dim, 2.0)
        params.user_emb[0] = 1.0
        apply_sgd(params, grads, 0.1)
        assert np.allclose(params.user_emb[0], 0.8)


class TestParams:
    def test_save_load_round_trip(self, tmp_path):
        params, _ = small_model(9)
        path = tmp_path / "ckpt.npz"
        params.save(path)
        loaded = ModelParams.load(path)
        assert np.array_equal(loaded.user_emb, params.user_emb)
        assert set(loaded.path_W) == set(params.path_W)
        for name in params.path_W:
            assert np.array_equal(loaded.path_W[name], params.path_W[name])
            assert np.array_equal(loaded.path_a[name], params.path_a[name])
        assert np.array_equal(loaded.sem_q, params.sem_q)

    def test_copy_is_independent(self):
        params, _ = small_model(1)
        clone = params.copy()
        clone.user_emb[0, 0] += 1.0
        clone.path_W["p1"][0, 0] += 1.0
        assert params.user_emb[0, 0] != clone.user_emb[0, 0]
        assert params.path_W["p1"][0, 0] != clone.path_W["p1"][0, 0]

    def test_init_is_seeded(self):
        a = ModelParams.init(3, 3, 4, ["p1"], seed=5)
        b = ModelParams.init(3, 3, 4, ["p1"], seed=5)
        assert np.array_equal(a.user_emb, b.user_emb)
        assert np.array_equal(a.sem_b, b.sem_b)
