import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tanglefl import model
from tanglefl.errors import ConfigError, NonFiniteError, ShapeError
from tanglefl.model import DatasetShard, ModelSpec, TrainConfig

from conftest import random_shard


def brute_loss_one(spec, w, x, y):
    """-log p(y|x) with explicit loops and no shared helpers."""
    d, h, k = spec.input_dim, spec.hidden_dim, spec.num_classes
    if spec.kind == "softmax":
        z = [sum(w[c * d + j] * x[j] for j in range(d)) + w[k * d + c] for c in range(k)]
    else:
        off_b1, off_w2, off_b2 = h * d, h * d + h, h * d + h + k * h
        a = [math.tanh(sum(w[i * d + j] * x[j] for j in range(d)) + w[off_b1 + i]) for i in range(h)]
        z = [sum(w[off_w2 + c * h + i] * a[i] for i in range(h)) + w[off_b2 + c] for c in range(k)]
    m = max(z)
    return -(z[y] - m - math.log(sum(math.exp(v - m) for v in z)))


def fd_gradient(spec, w, shard, step=1e-5):
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = step
        g[i] = (model.loss(spec, w + e, shard) - model.loss(spec, w - e, shard)) / (2 * step)
    return g


def random_instance(rng):
    kind = "softmax" if rng.random() < 0.5 else "mlp"
    d, k = int(rng.integers(1, 5)), int(rng.integers(2, 5))
    h = int(rng.integers(1, 4)) if kind == "mlp" else 0
    spec = ModelSpec(kind, d, h, k)
    w = rng.normal(0, 0.7, spec.num_params)
    return spec, w, random_shard(rng, int(rng.integers(1, 6)), d, k)


def test_num_params():
    assert ModelSpec("softmax", 16, 0, 10).num_params == 170
    assert ModelSpec("mlp", 4, 3, 2).num_params == 12 + 3 + 6 + 2


def test_spec_validation():
    with pytest.raises(ConfigError):
        ModelSpec("cnn")
    with pytest.raises(ConfigError):
        ModelSpec("mlp", 4, 0, 2)
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=-1)


def test_train_config_local_updates():
    assert TrainConfig(batches=7, epochs=3).local_updates == 21


@pytest.mark.parametrize("k", [2, 3, 10])
def test_loss_at_zero_is_log_k(k):
    spec = ModelSpec("softmax", 5, 0, k)
    shard = random_shard(np.random.default_rng(k), 17, 5, k)
    assert abs(model.loss(spec, np.zeros(spec.num_params), shard) - math.log(k)) < 1e-12


def test_loss_matches_bruteforce_single_sample():
    rng = np.random.default_rng(1)
    for _ in range(40):
        spec, w, shard = random_instance(rng)
        one = shard.subset([0])
        want = brute_loss_one(spec, w, one.features[0], int(one.labels[0]))
        assert model.loss(spec, w, one) == pytest.approx(want, rel=1e-12, abs=1e-14)


def test_loss_mean_over_samples():
    rng = np.random.default_rng(2)
    spec, w, shard = random_instance(rng)
    want = np.mean([brute_loss_one(spec, w, shard.features[i], int(shard.labels[i])) for i in range(shard.n)])
    assert model.loss(spec, w, shard) == pytest.approx(want, rel=1e-12)


def test_shape_errors():
    spec = ModelSpec("softmax", 3, 0, 2)
    shard = random_shard(np.random.default_rng(0), 4, 3, 2)
    with pytest.raises(ShapeError):
        model.loss(spec, np.zeros(5), shard)
    with pytest.raises(ShapeError):
        model.accuracy(spec, np.zeros(spec.num_params), random_shard(np.random.default_rng(0), 4, 2, 2))
    with pytest.raises(ShapeError):
        model.average(np.zeros(2), np.zeros(3))


def test_accuracy_tie_break_and_extremes():
    spec = ModelSpec("softmax", 2, 0, 2)
    x = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [0.0, 2.0]])
    balanced = DatasetShard(x, np.array([0, 1, 0, 1]))
    assert model.accuracy(spec, np.zeros(6), balanced) == 0.5
    np.testing.assert_array_equal(model.predict(spec, np.zeros(6), x), 0)
    w = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0])  # class c scores feature c
    assert model.accuracy(spec, w, balanced) == 1.0
    assert model.accuracy(spec, w, DatasetShard(x, np.array([1, 0, 1, 0]))) == 0.0


def test_fitted_separable_reaches_full_accuracy():
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(-3, 0.5, (20, 2)), rng.normal(3, 0.5, (20, 2))])
    shard = DatasetShard(x, np.repeat([0, 1], 20))
    spec = ModelSpec("softmax", 2, 0, 2)
    w = np.zeros(spec.num_params)
    for _ in range(200):
        w -= 0.5 * model.gradient(spec, w, shard)
    assert model.accuracy(spec, w, shard) == 1.0


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        spec, w, shard = random_instance(rng)
        g, fd = model.gradient(spec, w, shard), fd_gradient(spec, w, shard)
        scale = max(np.max(np.abs(fd)), 1e-3)
        worst = max(worst, float(np.max(np.abs(g - fd)) / scale))
    assert worst < 1e-6


def test_gradient_saturated_is_tiny():
    spec = ModelSpec("softmax", 2, 0, 2)
    shard = DatasetShard(np.array([[1.0, 0.0]]), np.array([0]))
    w = 1e3 * np.array([1.0, 0.0, -1.0, 0.0, 0.0, 0.0])
    assert np.linalg.norm(model.gradient(spec, w, shard)) < 1e-8


def test_gradient_duplicate_batch_invariant():
    rng = np.random.default_rng(5)
    spec, w, shard = random_instance(rng)
    doubled = DatasetShard(np.vstack([shard.features] * 2), np.concatenate([shard.labels] * 2))
    np.testing.assert_allclose(model.gradient(spec, w, doubled), model.gradient(spec, w, shard),
                               rtol=1e-12, atol=1e-15)


def test_gradient_empty_batch():
    spec = ModelSpec("softmax", 2, 0, 2)
    with pytest.raises(ValueError):
        model.gradient(spec, np.zeros(6), DatasetShard(np.zeros((0, 2)), np.zeros(0)))


def test_local_train_zero_lr_is_identity():
    rng = np.random.default_rng(6)
    spec, w, shard = random_instance(rng)
    out = model.local_train(spec, w, shard, TrainConfig(0.0, 2, 3, 1), rng)
    np.testing.assert_array_equal(out, w)


def test_local_train_single_full_batch_step():
    rng = np.random.default_rng(7)
    spec = ModelSpec("softmax", 3, 0, 3)
    shard = random_shard(rng, 8, 3, 3)
    w = rng.normal(size=spec.num_params)
    w_copy = w.copy()
    out = model.local_train(spec, w, shard, TrainConfig(0.1, 8, 1, 1), np.random.default_rng(0))
    np.testing.assert_allclose(out, w - 0.1 * model.gradient(spec, w, shard), rtol=1e-12)
    np.testing.assert_array_equal(w, w_copy)


def test_local_train_descends_on_separable_shard():
    rng = np.random.default_rng(8)
    x = np.vstack([rng.normal(-2, 0.3, (10, 2)), rng.normal(2, 0.3, (10, 2))])
    shard = DatasetShard(x, np.repeat([0, 1], 10))
    spec = ModelSpec("softmax", 2, 0, 2)
    w0 = np.zeros(spec.num_params)
    w1 = model.local_train(spec, w0, shard, TrainConfig(0.05, 5, 4, 1), rng)
    assert model.loss(spec, w1, shard) < model.loss(spec, w0, shard)


def test_local_train_deterministic_and_with_replacement():
    spec = ModelSpec("mlp", 3, 2, 2)
    shard = random_shard(np.random.default_rng(9), 3, 3, 2)  # fewer samples than batch_size
    w = model.init_params(spec, np.random.default_rng(1))
    cfg = TrainConfig(0.1, 5, 3, 2)
    a = model.local_train(spec, w, shard, cfg, np.random.default_rng(11))
    b = model.local_train(spec, w, shard, cfg, np.random.default_rng(11))
    assert a.tobytes() == b.tobytes()


def test_batch_indices_epoch_is_permutation():
    cfg = TrainConfig(0.1, 4, 5, 2)
    batches = list(model._batch_indices(20, cfg, np.random.default_rng(0)))
    assert len(batches) == 10
    for e in range(2):
        seen = np.concatenate(batches[5 * e:5 * e + 5])
        assert sorted(seen.tolist()) == list(range(20))


def test_init_params():
    soft = ModelSpec("softmax", 4, 0, 3)
    assert not model.init_params(soft).any()
    mlp = ModelSpec("mlp", 4, 5, 3)
    w = model.init_params(mlp, np.random.default_rng(0))
    W1, b1, W2, b2 = model._unpack(mlp, w)
    assert np.all(np.abs(W1) <= 0.5) and np.all(np.abs(W2) <= 1 / math.sqrt(5))
    assert not b1.any() and not b2.any()


def test_average_examples():
    np.testing.assert_array_equal(model.average([0, 0], [2, 4]), [1, 2])
    with pytest.raises(NonFiniteError):
        model.average([np.inf], [0.0])


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, 5, elements=finite), arrays(np.float64, 5, elements=finite),
       st.floats(-100, 100, allow_nan=False))
def test_average_properties(w1, w2, a):
    np.testing.assert_array_equal(model.average(w1, w1), w1)
    np.testing.assert_array_equal(model.average(w1, w2), model.average(w2, w1))
    np.testing.assert_allclose(model.average(a * w1, a * w2), a * model.average(w1, w2),
                               rtol=1e-12, atol=1e-6)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_loss_nonnegative_and_finite(seed):
    spec, w, shard = random_instance(np.random.default_rng(seed))
    value = model.loss(spec, 10 * w, shard)
    assert value >= 0 and math.isfinite(value)
