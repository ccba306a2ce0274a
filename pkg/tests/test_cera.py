"""Tests for the centroid regressor: forward, gradients, Adam, training."""

from __future__ import annotations

import math

import numpy as np
import pytest

from centrosum.cera import (
    AdamState,
    CeraParams,
    TrainConfig,
    adam_step,
    backward,
    clone_params,
    cosine_loss,
    finite_difference_check,
    forward,
    gradient_check_report,
    init_params,
    load_checkpoint,
    normalize_cluster,
    normalize_inputs,
    random_instance,
    save_checkpoint,
    train,
    write_history,
    _cosine_loss_grad,
)
from centrosum.corpus import Cluster, ReferenceSummary, SummarySentence
from centrosum.errors import DataError, NumericError, ValidationError

from conftest import make_sentence, random_cluster


def normalized_cluster(rng, **kwargs) -> Cluster:
    return normalize_cluster(random_cluster(rng, **kwargs))


# ---------------------------------------------------------------------------
# normalize_inputs
# ---------------------------------------------------------------------------


def test_normalize_closed_form():
    out = normalize_inputs(np.array([[3.0, 4.0]]))
    np.testing.assert_allclose(out, [[0.6, 0.8]], atol=1e-15)


def test_normalize_unit_vector_unchanged():
    vec = np.array([[1.0, 0.0, 0.0]])
    np.testing.assert_allclose(normalize_inputs(vec), vec, atol=1e-15)


def test_normalize_random_batch(rng):
    batch = rng.normal(size=(32, 16))
    norms = np.linalg.norm(normalize_inputs(batch), axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_normalize_zero_vector_error():
    with pytest.raises(NumericError):
        normalize_inputs(np.zeros((1, 4)))


# ---------------------------------------------------------------------------
# forward
# ---------------------------------------------------------------------------


def test_forward_single_sentence_weight_is_one(rng):
    cluster = normalized_cluster(rng, n_docs=1, sentences_per_doc=(1, 1), d=8)
    params = init_params(8, "cera", seed=3)
    _, trace = forward(cluster, params)
    assert trace.weights.shape == (1,)
    assert trace.weights[0] == 1.0


def test_forward_gate_forced_closed_returns_mean_pool(rng):
    cluster = normalized_cluster(rng, n_docs=2, d=8)
    params = init_params(8, "cerai", seed=5)
    params.gate_b2[...] = -40.0  # sigmoid(-40) ~ 4e-18
    centroid, trace = forward(cluster, params)
    np.testing.assert_allclose(centroid, trace.mean_centroid, atol=1e-6)


def _straight_line_forward(cluster, params):
    """Independent plain-python reimplementation of the forward pipeline."""
    d = params.d
    eps = 1e-5
    rows, pos, weights = [], [], []
    n_docs = len(cluster.documents)
    for doc in cluster.documents:
        for s in doc:
            rows.append([float(x) for x in s.embedding])
            pos.append(min(s.pos_in_doc, params.num_positions - 1))
            weights.append(1.0 / (n_docs * len(doc)))
    n = len(rows)

    def layer_norm(vec, gain, bias):
        mu = sum(vec) / len(vec)
        var = sum((x - mu) ** 2 for x in vec) / len(vec)
        inv = 1.0 / math.sqrt(var + eps)
        return [g * ((x - mu) * inv) + b for x, g, b in zip(vec, gain, bias)]

    pos_added = []
    for k in range(n):
        ln = layer_norm(rows[k], params.ln_in_gain, params.ln_in_bias)
        pos_added.append([a + b for a, b in zip(ln, params.positions[pos[k]])])
    pooled = [sum(weights[k] * pos_added[k][j] for k in range(n)) for j in range(d)]
    scores = []
    for k in range(n):
        feat = pos_added[k] + pooled
        hidden = [
            math.tanh(
                sum(params.scorer_w1[i][j] * feat[j] for j in range(2 * d))
                + params.scorer_b1[i]
            )
            for i in range(d)
        ]
        scores.append(
            sum(params.scorer_w2[i] * hidden[i] for i in range(d))
            + params.scorer_b2[0]
        )
    peak = max(scores)
    exp = [math.exp(s - peak) for s in scores]
    total = sum(exp)
    beta = [e / total for e in exp]
    mix = [sum(beta[k] * rows[k][j] for k in range(n)) for j in range(d)]
    mapped = layer_norm(mix, params.ln_h_gain, params.ln_h_bias)
    attn = [
        sum(params.out_weight[i][j] * mapped[j] for j in range(d)) + params.out_bias[i]
        for i in range(d)
    ]
    if params.variant == "cera":
        return np.asarray(attn)
    mean = [sum(weights[k] * rows[k][j] for k in range(n)) for j in range(d)]
    gate_in = attn + mean
    pre = [
        sum(params.gate_w1[i][j] * gate_in[j] for j in range(2 * d))
        + params.gate_b1[i]
        for i in range(d)
    ]
    hidden = [max(x, 0.0) for x in pre]
    logits = [
        sum(params.gate_w2[i][j] * hidden[j] for j in range(d)) + params.gate_b2[i]
        for i in range(d)
    ]
    alpha = [1.0 / (1.0 + math.exp(-x)) for x in logits]
    return np.asarray(
        [a * c + (1.0 - a) * m for a, c, m in zip(alpha, attn, mean)]
    )


@pytest.mark.parametrize("variant", ["cera", "cerai"])
def test_forward_matches_straight_line_oracle(variant, rng):
    cluster, _, params = random_instance(d=16, variant=variant, seed=11)
    centroid, _ = forward(cluster, params)
    expected = _straight_line_forward(cluster, params)
    np.testing.assert_allclose(centroid, expected, atol=1e-10)


def test_forward_invariants_batch(rng):
    for seed in range(50):
        variant = "cerai" if seed % 2 else "cera"
        cluster, _, params = random_instance(
            d=12, n_docs=2, doc_len=3, variant=variant, seed=seed
        )
        _, trace = forward(cluster, params)
        assert trace.weights.min() >= 0.0
        assert abs(trace.weights.sum() - 1.0) <= 1e-9
        residual = np.linalg.norm(trace.mix - trace.weights @ trace.inputs)
        assert residual < 1e-12
        if variant == "cerai":
            assert np.all(trace.gate >= 0.0) and np.all(trace.gate <= 1.0)


def test_forward_mix_in_convex_hull_2d(rng):
    # with d=2 the attention mix must stay inside the segment hull of inputs
    cluster, _, params = random_instance(d=2, n_docs=1, doc_len=4, seed=7)
    _, trace = forward(cluster, params)
    lo = trace.inputs.min(axis=0) - 1e-12
    hi = trace.inputs.max(axis=0) + 1e-12
    assert np.all(trace.mix >= lo) and np.all(trace.mix <= hi)


def test_forward_document_permutation_invariance(rng):
    cluster, _, params = random_instance(d=8, n_docs=3, doc_len=2, seed=21)
    base_centroid, base_trace = forward(cluster, params)
    permuted = Cluster(
        id=cluster.id,
        documents=[cluster.documents[2], cluster.documents[0], cluster.documents[1]],
        references=cluster.references,
    )
    perm_centroid, perm_trace = forward(permuted, params)
    np.testing.assert_allclose(perm_centroid, base_centroid, atol=1e-9)
    reordered = np.concatenate(
        [base_trace.weights[4:6], base_trace.weights[0:2], base_trace.weights[2:4]]
    )
    np.testing.assert_allclose(perm_trace.weights, reordered, atol=1e-9)


def test_forward_rejects_empty_document():
    cluster = Cluster(
        id="hole",
        documents=[[make_sentence(0, 0, "x", np.ones(4) / 2.0)], []],
    )
    with pytest.raises(DataError):
        forward(cluster, init_params(4, seed=0))


def test_forward_position_clamp(rng):
    d = 6
    doc = [
        make_sentence(0, pos, f"s{pos}", normalize_inputs(rng.normal(size=(1, d)))[0])
        for pos in (0, 40, 77)
    ]
    cluster = Cluster(id="deep", documents=[doc])
    params = init_params(d, seed=1)
    _, trace = forward(cluster, params)
    assert list(trace.pos_rows) == [0, 34, 34]


# ---------------------------------------------------------------------------
# cosine loss and gradients
# ---------------------------------------------------------------------------


def test_cosine_loss_trivials(rng):
    v = rng.normal(size=5)
    assert cosine_loss(v, v) == pytest.approx(0.0, abs=1e-12)
    assert cosine_loss(v, -v) == pytest.approx(2.0, abs=1e-12)


def test_cosine_loss_closed_form():
    loss = cosine_loss(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
    assert loss == pytest.approx(1.0 - 1.0 / math.sqrt(2.0), abs=1e-12)


def test_loss_gradient_zero_at_alignment(rng):
    target = rng.normal(size=8)
    grad = _cosine_loss_grad(2.5 * target, target)
    np.testing.assert_allclose(grad, np.zeros(8), atol=1e-12)


@pytest.mark.parametrize("variant", ["cera", "cerai"])
def test_gradients_match_finite_differences(variant):
    for seed in range(2):
        cluster, target, params = random_instance(
            d=16, n_docs=2, doc_len=3, variant=variant, seed=seed
        )
        errors = finite_difference_check(cluster, target, params, eps=1e-4)
        assert max(errors.values()) < 1e-3, errors


def test_gradients_single_sentence_cluster():
    cluster, target, params = random_instance(
        d=8, n_docs=1, doc_len=1, variant="cera", seed=4
    )
    errors = finite_difference_check(cluster, target, params, eps=1e-4)
    assert max(errors.values()) < 1e-3


def test_gradients_finite_in_degenerate_configuration(rng):
    cluster, target, params = random_instance(d=8, variant="cera", seed=9)
    params.ln_h_gain[...] = 0.0
    params.out_weight[...] = 0.0
    params.out_bias[...] = target
    _, trace = forward(cluster, params)
    grads = backward(trace, target, params)
    for name, grad in grads.items():
        assert np.all(np.isfinite(grad)), name


def test_gradient_check_negative_control():
    passed, _ = gradient_check_report("cera", instances=1, seed=0, corrupt=True)
    assert not passed


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------


def test_adam_zero_gradient_no_update():
    params = init_params(6, "cera", seed=0)
    before = {k: v.copy() for k, v in params.tensors().items()}
    state = AdamState.for_params(params)
    grads = {k: np.zeros_like(v) for k, v in params.tensors().items()}
    adam_step(params, grads, state, lr=0.1)
    for name, tensor in params.tensors().items():
        np.testing.assert_array_equal(tensor, before[name])


def test_adam_first_step_is_signed_lr(rng):
    params = init_params(4, "cera", seed=1)
    before = {k: v.copy() for k, v in params.tensors().items()}
    state = AdamState.for_params(params)
    grads = {
        k: rng.choice([-1.0, 1.0], size=v.shape) * rng.uniform(0.5, 2.0, size=v.shape)
        for k, v in params.tensors().items()
    }
    lr = 1e-3
    adam_step(params, grads, state, lr=lr)
    for name, tensor in params.tensors().items():
        step = tensor - before[name]
        np.testing.assert_allclose(step, -lr * np.sign(grads[name]), atol=lr * 1e-6)


class _BareParams:
    """Minimal stand-in exposing the optimizer's tensors() contract."""

    def __init__(self, x: np.ndarray):
        self.x = x

    def tensors(self) -> dict[str, np.ndarray]:
        return {"x": self.x}


def test_adam_converges_on_quadratic():
    # f(x) = sum(a_i (x_i - b_i)^2), d=4, driven by the real optimizer
    a = np.array([1.0, 2.0, 0.5, 3.0])
    b = np.array([0.3, -1.2, 2.0, 0.0])
    params = _BareParams(np.zeros(4))
    state = AdamState(m={"x": np.zeros(4)}, v={"x": np.zeros(4)})
    losses = []
    for _ in range(100):
        grads = {"x": 2.0 * a * (params.x - b)}
        adam_step(params, grads, state, lr=0.01)
        losses.append(float(np.sum(a * (params.x - b) ** 2)))
    for previous, current in zip(losses[5:], losses[6:]):
        assert current <= previous + 1e-12
    assert losses[-1] < losses[5] * 0.5


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------


def _training_sets(rng, n_train=6, n_val=3, d=8):
    clusters = []
    for i in range(n_train + n_val):
        cluster = random_cluster(
            rng, n_docs=2, sentences_per_doc=(2, 3), d=d,
            cluster_id=f"t{i}", with_reference=True,
        )
        clusters.append(cluster)
    return clusters[:n_train], clusters[n_train:]


def test_train_patience_zero_runs_single_epoch(rng):
    train_set, val_set = _training_sets(rng)
    config = TrainConfig(
        max_epochs=10, patience=0, validation_metric="cosine-loss", seed=1
    )
    _, history = train(train_set, val_set, config)
    assert len(history) == 1


def test_train_scheduler_decays_twice_by_epoch_seven(rng):
    train_set, val_set = _training_sets(rng)
    config = TrainConfig(
        learning_rate=5e-4,
        scheduler_step=3,
        scheduler_gamma=0.1,
        max_epochs=7,
        patience=7,
        validation_metric="cosine-loss",
        seed=1,
    )
    _, history = train(train_set, val_set, config)
    assert len(history) == 7
    assert history[0].lr == pytest.approx(5e-4, rel=1e-12)
    assert history[3].lr == pytest.approx(5e-5, rel=1e-12)
    assert history[6].lr == pytest.approx(5e-6, rel=1e-12)


def test_train_deterministic_and_reduces_loss(rng, tmp_path):
    train_set, val_set = _training_sets(rng, n_train=8, n_val=4)
    config = TrainConfig(
        learning_rate=3e-3,
        max_epochs=6,
        patience=6,
        scheduler_step=100,
        validation_metric="cosine-loss",
        seed=7,
    )
    params_a, history_a = train(train_set, val_set, config)
    params_b, history_b = train(train_set, val_set, config)
    assert history_a == history_b
    for name, tensor in params_a.tensors().items():
        np.testing.assert_array_equal(tensor, params_b.tensors()[name])
    path_a, path_b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(params_a, path_a)
    save_checkpoint(params_b, path_b)
    assert path_a.read_bytes() == path_b.read_bytes()
    assert history_a[-1].train_loss < history_a[0].train_loss


def test_train_requires_references(rng):
    train_set, val_set = _training_sets(rng)
    train_set[0].references = []
    with pytest.raises(DataError):
        train(train_set, val_set, TrainConfig(validation_metric="cosine-loss"))


def test_train_rejects_empty_sets():
    with pytest.raises(DataError):
        train([], [], TrainConfig())


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValidationError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValidationError):
        TrainConfig(scheduler_gamma=1.5)
    with pytest.raises(ValidationError):
        TrainConfig(validation_metric="bleu")


def test_write_history(tmp_path, rng):
    from centrosum.cera import HistoryEntry

    history = [HistoryEntry(1, 0.5, 0.25, 5e-4), HistoryEntry(2, 0.4, 0.2, 5e-4)]
    path = tmp_path / "history.tsv"
    write_history(history, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch\ttrain_loss\tval_metric\tlr"
    assert lines[1].split("\t")[0] == "1"
    assert float(lines[2].split("\t")[1]) == 0.4


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("variant", ["cera", "cerai"])
def test_checkpoint_round_trip_bitwise(variant, tmp_path):
    _, _, params = random_instance(d=8, variant=variant, seed=13)
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path, meta={"note": "fixture"})
    loaded, meta = load_checkpoint(path)
    assert meta == {"note": "fixture"}
    assert loaded.variant == variant
    path2 = tmp_path / "model2.ckpt"
    save_checkpoint(loaded, path2, meta={"note": "fixture"})
    assert path.read_bytes() == path2.read_bytes()
    reloaded, _ = load_checkpoint(path2)
    for name, tensor in loaded.tensors().items():
        np.testing.assert_array_equal(tensor, reloaded.tensors()[name])


def test_checkpoint_truncation_error(tmp_path):
    _, _, params = random_instance(d=8, seed=1)
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    blob = path.read_bytes()
    path.write_bytes(blob[: len(blob) // 2])
    with pytest.raises(DataError, match="truncated"):
        load_checkpoint(path)


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "model.ckpt"
    path.write_bytes(b"XXXX" + b"\x00" * 32)
    with pytest.raises(DataError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_variant_mismatch(tmp_path):
    _, _, params = random_instance(d=8, variant="cera", seed=2)
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    with pytest.raises(DataError, match="variant|expected"):
        load_checkpoint(path, expect_variant="cerai")


def test_checkpoint_dimension_mismatch(tmp_path):
    _, _, params = random_instance(d=8, seed=3)
    path = tmp_path / "model.ckpt"
    save_checkpoint(params, path)
    with pytest.raises(DataError, match="d=8"):
        load_checkpoint(path, expect_d=16)
