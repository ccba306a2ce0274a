"""Learned centroid regression for cluster summarization.

The model scores every sentence of a cluster with a shared two-layer
perceptron over position-augmented, layer-normalized embeddings, softmaxes
the scores into attention weights, pools the original unit-normalized
embeddings with those weights and maps the pooled vector through a linear
output layer.  The interpolated variant additionally predicts an
elementwise gate that blends the regressed centroid with the cluster
mean-pool.

Training minimizes the cosine distance to a gold centroid with manually
derived exact gradients and a from-scratch Adam optimizer; everything runs
in float64 and is bitwise deterministic for a fixed seed in single-threaded
mode.  Checkpoints are stored as little-endian float32.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Cluster, ReferenceSummary, SummarySentence, Sentence, gold_centroid
from .errors import DataError, NumericError, ValidationError
from .rouge import rouge_n
from .selection import SelectionConfig, cosine_similarity, render_summary, select_summary

VARIANTS = ("cera", "cerai")
LN_EPS = 1e-5
DEFAULT_NUM_POSITIONS = 35

_BASE_TENSORS = (
    "positions",
    "scorer_w1",
    "scorer_b1",
    "scorer_w2",
    "scorer_b2",
    "out_weight",
    "out_bias",
    "ln_in_gain",
    "ln_in_bias",
    "ln_h_gain",
    "ln_h_bias",
)
_GATE_TENSORS = ("gate_w1", "gate_b1", "gate_w2", "gate_b2")


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class CeraParams:
    """All learnable tensors of the centroid regressor."""

    variant: str
    positions: np.ndarray      # (num_positions, d) learnable positional table
    scorer_w1: np.ndarray      # (d, 2d)
    scorer_b1: np.ndarray      # (d,)
    scorer_w2: np.ndarray      # (d,)  single output neuron
    scorer_b2: np.ndarray      # (1,)
    out_weight: np.ndarray     # (d, d)
    out_bias: np.ndarray       # (d,)
    ln_in_gain: np.ndarray     # (d,)
    ln_in_bias: np.ndarray     # (d,)
    ln_h_gain: np.ndarray      # (d,)
    ln_h_bias: np.ndarray      # (d,)
    gate_w1: np.ndarray | None = None  # (d, 2d), interpolated variant only
    gate_b1: np.ndarray | None = None  # (d,)
    gate_w2: np.ndarray | None = None  # (d, d)
    gate_b2: np.ndarray | None = None  # (d,)

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "cerai" and self.gate_w1 is None:
            raise ValidationError("interpolated variant requires gate tensors")

    @property
    def d(self) -> int:
        return int(self.positions.shape[1])

    @property
    def num_positions(self) -> int:
        return int(self.positions.shape[0])

    def tensors(self) -> dict[str, np.ndarray]:
        """Live references to every parameter tensor, in a fixed order."""
        names = _BASE_TENSORS + (_GATE_TENSORS if self.variant == "cerai" else ())
        return {name: getattr(self, name) for name in names}


def init_params(
    d: int,
    variant: str = "cera",
    num_positions: int = DEFAULT_NUM_POSITIONS,
    seed: int = 0,
) -> CeraParams:
    """Initialize parameters: uniform(+-1/sqrt(fan_in)) weights, zero biases.

    The positional table starts at zero so the untrained model is
    position-agnostic.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    rng = np.random.default_rng(seed)

    def matrix(rows: int, fan_in: int) -> np.ndarray:
        limit = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-limit, limit, size=(rows, fan_in))

    def vector(fan_in: int) -> np.ndarray:
        limit = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-limit, limit, size=fan_in)

    gate = {}
    if variant == "cerai":
        gate = {
            "gate_w1": matrix(d, 2 * d),
            "gate_b1": np.zeros(d),
            "gate_w2": matrix(d, d),
            "gate_b2": np.zeros(d),
        }
    return CeraParams(
        variant=variant,
        positions=np.zeros((num_positions, d)),
        scorer_w1=matrix(d, 2 * d),
        scorer_b1=np.zeros(d),
        scorer_w2=vector(d),
        scorer_b2=np.zeros(1),
        out_weight=matrix(d, d),
        out_bias=np.zeros(d),
        ln_in_gain=np.ones(d),
        ln_in_bias=np.zeros(d),
        ln_h_gain=np.ones(d),
        ln_h_bias=np.zeros(d),
        **gate,
    )


def clone_params(params: CeraParams) -> CeraParams:
    copies = {name: tensor.copy() for name, tensor in params.tensors().items()}
    return replace(params, **copies)


# ---------------------------------------------------------------------------
# Input preparation
# ---------------------------------------------------------------------------


def normalize_inputs(embeddings: np.ndarray) -> np.ndarray:
    """Scale each row to unit L2 norm (float64). Data prep, not differentiated."""
    embeddings = np.asarray(embeddings, dtype=np.float64)
    norms = np.linalg.norm(embeddings, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise NumericError("cannot normalize a zero-norm embedding")
    return embeddings / norms


def normalize_cluster(cluster: Cluster) -> Cluster:
    """Copy of ``cluster`` with unit-normalized sentence and reference embeddings."""

    def unit(v: np.ndarray) -> np.ndarray:
        return normalize_inputs(np.asarray(v, dtype=np.float64)[np.newaxis, :])[0]

    documents = [
        [Sentence(s.doc_index, s.pos_in_doc, s.text, unit(s.embedding)) for s in doc]
        for doc in cluster.documents
    ]
    references = [
        ReferenceSummary([SummarySentence(s.text, unit(s.embedding)) for s in ref.sentences])
        for ref in cluster.references
    ]
    return Cluster(cluster.id, documents, references, cluster.languages)


def _model_inputs(cluster: Cluster) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flatten a cluster into (embeddings, position ids, two-stage-mean weights)."""
    if cluster.n_sentences == 0:
        raise DataError(f"cluster {cluster.id!r} has no sentences")
    rows: list[np.ndarray] = []
    pos_ids: list[int] = []
    weights: list[float] = []
    n_docs = len(cluster.documents)
    for doc_index, doc in enumerate(cluster.documents):
        if not doc:
            raise DataError(
                f"cluster {cluster.id!r}: document {doc_index} is empty"
            )
        for sentence in doc:
            rows.append(np.asarray(sentence.embedding, dtype=np.float64))
            pos_ids.append(sentence.pos_in_doc)
            weights.append(1.0 / (n_docs * len(doc)))
    return np.stack(rows), np.asarray(pos_ids, dtype=np.intp), np.asarray(weights)


# ---------------------------------------------------------------------------
# Forward pass
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class ForwardTrace:
    """Every intermediate of a forward pass, retained for backprop/inspection."""

    inputs: np.ndarray         # (N, d) unit-normalized embeddings
    pos_rows: np.ndarray       # (N,) clamped positional-table rows
    doc_weight: np.ndarray     # (N,) two-stage mean weights (sum to 1)
    normed_in: np.ndarray      # (N, d) ln_in normalization (pre gain/bias)
    inv_in: np.ndarray         # (N, 1)
    pos_added: np.ndarray      # (N, d) normalized inputs + positional rows
    pooled_pos: np.ndarray     # (d,) two-stage mean of pos_added
    features: np.ndarray       # (N, 2d) concat(pos_added, pooled_pos)
    hidden: np.ndarray         # (N, d) tanh activations of the scorer
    scores: np.ndarray         # (N,) pre-softmax scores
    weights: np.ndarray        # (N,) attention weights (softmax output)
    mix: np.ndarray            # (d,) attention-weighted sum of inputs
    normed_h: np.ndarray       # (d,)
    inv_h: float
    mapped: np.ndarray         # (d,) ln_h output fed to the output layer
    attn_centroid: np.ndarray  # (d,) regressed centroid before interpolation
    mean_centroid: np.ndarray | None  # (d,) cluster mean-pool (interpolated variant)
    gate_input: np.ndarray | None     # (2d,)
    gate_pre: np.ndarray | None       # (d,) pre-ReLU
    gate_hidden: np.ndarray | None    # (d,) post-ReLU
    gate: np.ndarray | None           # (d,) sigmoid gate in [0, 1]
    centroid: np.ndarray       # (d,) final estimate


def _layer_norm(
    x: np.ndarray, gain: np.ndarray, bias: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    normed = (x - mu) * inv
    return gain * normed + bias, normed, inv


def _check_finite(stage: str, value: np.ndarray) -> None:
    if not np.all(np.isfinite(value)):
        raise NumericError(f"non-finite values produced at stage {stage!r}")


def forward(cluster: Cluster, params: CeraParams) -> tuple[np.ndarray, ForwardTrace]:
    """Predict the cluster centroid; returns the estimate and its trace.

    Expects a preprocessed cluster whose embeddings are unit-normalized
    (see :func:`normalize_cluster`).
    """
    inputs, pos_ids, doc_weight = _model_inputs(cluster)
    d = params.d
    if inputs.shape[1] != d:
        raise DataError(
            f"cluster dimension {inputs.shape[1]} does not match model d={d}"
        )
    pos_rows = np.minimum(pos_ids, params.num_positions - 1)

    ln_in_out, normed_in, inv_in = _layer_norm(inputs, params.ln_in_gain, params.ln_in_bias)
    pos_added = ln_in_out + params.positions[pos_rows]
    _check_finite("positional augmentation", pos_added)
    pooled_pos = doc_weight @ pos_added
    features = np.concatenate(
        [pos_added, np.broadcast_to(pooled_pos, pos_added.shape)], axis=1
    )
    hidden = np.tanh(features @ params.scorer_w1.T + params.scorer_b1)
    scores = hidden @ params.scorer_w2 + params.scorer_b2[0]
    _check_finite("scorer", scores)
    shifted = scores - scores.max()
    exp = np.exp(shifted)
    weights = exp / exp.sum()
    mix = weights @ inputs
    ln_h_out, normed_h, inv_h = _layer_norm(mix, params.ln_h_gain, params.ln_h_bias)
    attn_centroid = params.out_weight @ ln_h_out + params.out_bias
    _check_finite("output projection", attn_centroid)

    mean_centroid = gate_input = gate_pre = gate_hidden = gate = None
    if params.variant == "cerai":
        mean_centroid = doc_weight @ inputs
        gate_input = np.concatenate([attn_centroid, mean_centroid])
        gate_pre = params.gate_w1 @ gate_input + params.gate_b1
        gate_hidden = np.maximum(gate_pre, 0.0)
        gate_logits = params.gate_w2 @ gate_hidden + params.gate_b2
        gate = 1.0 / (1.0 + np.exp(-gate_logits))
        centroid = gate * attn_centroid + (1.0 - gate) * mean_centroid
        _check_finite("interpolation", centroid)
    else:
        centroid = attn_centroid

    trace = ForwardTrace(
        inputs=inputs,
        pos_rows=pos_rows,
        doc_weight=doc_weight,
        normed_in=normed_in,
        inv_in=inv_in,
        pos_added=pos_added,
        pooled_pos=pooled_pos,
        features=features,
        hidden=hidden,
        scores=scores,
        weights=weights,
        mix=mix,
        normed_h=normed_h,
        inv_h=float(inv_h.item()),
        mapped=ln_h_out,
        attn_centroid=attn_centroid,
        mean_centroid=mean_centroid,
        gate_input=gate_input,
        gate_pre=gate_pre,
        gate_hidden=gate_hidden,
        gate=gate,
        centroid=centroid,
    )
    return centroid, trace


# ---------------------------------------------------------------------------
# Loss and exact gradients
# ---------------------------------------------------------------------------


def cosine_loss(predicted: np.ndarray, target: np.ndarray) -> float:
    """Cosine distance ``1 - cos(predicted, target)``; non-negative."""
    return 1.0 - cosine_similarity(predicted, target)


def _cosine_loss_grad(predicted: np.ndarray, target: np.ndarray) -> np.ndarray:
    predicted = np.asarray(predicted, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    np_norm = float(np.linalg.norm(predicted))
    nt_norm = float(np.linalg.norm(target))
    if np_norm == 0.0 or nt_norm == 0.0:
        raise NumericError("cosine loss gradient undefined for zero-norm vectors")
    dot = float(np.dot(predicted, target))
    # d(1 - cos)/d predicted
    return -(target / (np_norm * nt_norm) - dot * predicted / (np_norm**3 * nt_norm))


def backward(
    trace: ForwardTrace, target: np.ndarray, params: CeraParams
) -> dict[str, np.ndarray]:
    """Exact gradients of the cosine loss w.r.t. every parameter tensor.

    Inputs are treated as constants; the positional table receives gradient
    only at the rows used by the cluster.
    """
    d = params.d
    grads = {name: np.zeros_like(t) for name, t in params.tensors().items()}
    d_centroid = _cosine_loss_grad(trace.centroid, target)

    if params.variant == "cerai":
        diff = trace.attn_centroid - trace.mean_centroid
        d_gate = d_centroid * diff
        d_attn = d_centroid * trace.gate
        d_gate_logits = d_gate * trace.gate * (1.0 - trace.gate)
        grads["gate_w2"] += np.outer(d_gate_logits, trace.gate_hidden)
        grads["gate_b2"] += d_gate_logits
        d_gate_hidden = params.gate_w2.T @ d_gate_logits
        d_gate_pre = d_gate_hidden * (trace.gate_pre > 0.0)
        grads["gate_w1"] += np.outer(d_gate_pre, trace.gate_input)
        grads["gate_b1"] += d_gate_pre
        d_gate_input = params.gate_w1.T @ d_gate_pre
        d_attn = d_attn + d_gate_input[:d]
        # the mean-pool half of the gate input depends on inputs only
    else:
        d_attn = d_centroid

    grads["out_weight"] += np.outer(d_attn, trace.mapped)
    grads["out_bias"] += d_attn
    d_mapped = params.out_weight.T @ d_attn

    grads["ln_h_gain"] += d_mapped * trace.normed_h
    grads["ln_h_bias"] += d_mapped
    d_normed = d_mapped * params.ln_h_gain
    d_mix = trace.inv_h * (
        d_normed
        - d_normed.mean()
        - trace.normed_h * (d_normed * trace.normed_h).mean()
    )

    d_weights = trace.inputs @ d_mix
    d_scores = trace.weights * (d_weights - float(trace.weights @ d_weights))

    grads["scorer_w2"] += trace.hidden.T @ d_scores
    grads["scorer_b2"] += d_scores.sum()
    d_hidden = np.outer(d_scores, params.scorer_w2)
    d_pre = d_hidden * (1.0 - trace.hidden**2)
    grads["scorer_w1"] += d_pre.T @ trace.features
    grads["scorer_b1"] += d_pre.sum(axis=0)
    d_features = d_pre @ params.scorer_w1

    d_pooled = d_features[:, d:].sum(axis=0)
    d_pos_added = d_features[:, :d] + trace.doc_weight[:, np.newaxis] * d_pooled

    np.add.at(grads["positions"], trace.pos_rows, d_pos_added)

    grads["ln_in_gain"] += (d_pos_added * trace.normed_in).sum(axis=0)
    grads["ln_in_bias"] += d_pos_added.sum(axis=0)
    return grads


# ---------------------------------------------------------------------------
# Adam optimizer
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class AdamState:
    """First/second-moment accumulators for every parameter tensor."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: CeraParams) -> "AdamState":
        return cls(
            m={name: np.zeros_like(t) for name, t in params.tensors().items()},
            v={name: np.zeros_like(t) for name, t in params.tensors().items()},
        )


def adam_step(
    params: CeraParams, grads: dict[str, np.ndarray], state: AdamState, lr: float
) -> None:
    """One bias-corrected Adam update, in place."""
    state.step += 1
    t = state.step
    for name, tensor in params.tensors().items():
        g = grads[name]
        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * g**2
        m_hat = state.m[name] / (1.0 - state.beta1**t)
        v_hat = state.v[name] / (1.0 - state.beta2**t)
        tensor -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainConfig:
    """Training hyperparameters (defaults follow the tuned configuration)."""

    learning_rate: float = 5e-4
    batch_size: int = 2
    scheduler_step: int = 3
    scheduler_gamma: float = 0.1
    max_epochs: int = 20
    patience: int = 3
    variant: str = "cera"
    validation_metric: str = "rouge2-recall"  # or "cosine-loss"
    seed: int = 0
    num_positions: int = DEFAULT_NUM_POSITIONS
    selection: SelectionConfig = field(default_factory=SelectionConfig)

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValidationError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValidationError("batch size must be >= 1")
        if not (0.0 < self.scheduler_gamma <= 1.0):
            raise ValidationError("scheduler gamma must be in (0, 1]")
        if self.scheduler_step < 1:
            raise ValidationError("scheduler step must be >= 1")
        if self.max_epochs < 1:
            raise ValidationError("max epochs must be >= 1")
        if self.patience < 0:
            raise ValidationError("patience must be >= 0")
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}")
        if self.validation_metric not in ("rouge2-recall", "cosine-loss"):
            raise ValidationError("validation metric must be rouge2-recall or cosine-loss")


@dataclass(frozen=True)
class HistoryEntry:
    epoch: int
    train_loss: float
    val_metric: float
    lr: float


def _gold_targets(clusters: Sequence[Cluster]) -> list[np.ndarray]:
    targets = []
    for cluster in clusters:
        if not cluster.references:
            raise DataError(f"cluster {cluster.id!r} has no reference summary")
        targets.append(
            np.mean([gold_centroid(ref) for ref in cluster.references], axis=0)
        )
    return targets


def _validation_value(
    params: CeraParams,
    raw_clusters: Sequence[Cluster],
    model_clusters: Sequence[Cluster],
    targets: Sequence[np.ndarray],
    config: TrainConfig,
) -> float:
    if config.validation_metric == "cosine-loss":
        losses = [
            cosine_loss(forward(cluster, params)[0], target)
            for cluster, target in zip(model_clusters, targets)
        ]
        return float(np.mean(losses))
    recalls = []
    for raw, model in zip(raw_clusters, model_clusters):
        centroid, _ = forward(model, params)
        state = select_summary(raw, centroid, config.selection)
        candidate = render_summary(raw, state)
        references = [ref.text() for ref in raw.references]
        recalls.append(rouge_n(candidate, references, 2).recall)
    return float(np.mean(recalls))


def _improved(value: float, best: float, metric: str) -> bool:
    if metric == "cosine-loss":
        return value < best
    return value > best


def train(
    train_clusters: Sequence[Cluster],
    val_clusters: Sequence[Cluster],
    config: TrainConfig,
) -> tuple[CeraParams, list[HistoryEntry]]:
    """Mini-batch training with step-decayed Adam and early stopping.

    Batch items are whole clusters; the batch loss is the mean of
    per-cluster cosine distances.  After each epoch the validation metric
    is computed and the best-scoring parameters are retained; training
    stops once the best epoch lies ``patience`` epochs in the past.
    """
    if not train_clusters or not val_clusters:
        raise DataError("training requires non-empty train and validation sets")
    model_train = [normalize_cluster(c) for c in train_clusters]
    train_targets = _gold_targets(model_train)
    model_val = [normalize_cluster(c) for c in val_clusters]
    val_targets = _gold_targets(model_val)

    d = model_train[0].dim
    params = init_params(d, config.variant, config.num_positions, config.seed)
    adam = AdamState.for_params(params)
    rng = np.random.default_rng(config.seed)

    history: list[HistoryEntry] = []
    best_params = clone_params(params)
    best_value = -np.inf if config.validation_metric == "rouge2-recall" else np.inf
    best_epoch = 0

    for epoch_idx in range(config.max_epochs):
        lr = config.learning_rate * config.scheduler_gamma ** (
            epoch_idx // config.scheduler_step
        )
        order = rng.permutation(len(model_train))
        epoch_losses: list[float] = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            batch_grads: dict[str, np.ndarray] | None = None
            for cluster_idx in batch:
                cluster = model_train[cluster_idx]
                target = train_targets[cluster_idx]
                centroid, trace = forward(cluster, params)
                loss = cosine_loss(centroid, target)
                if not np.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch_idx + 1}, "
                        f"cluster {cluster.id!r}"
                    )
                epoch_losses.append(loss)
                grads = backward(trace, target, params)
                if batch_grads is None:
                    batch_grads = grads
                else:
                    for name in batch_grads:
                        batch_grads[name] += grads[name]
            assert batch_grads is not None
            scale = 1.0 / len(batch)
            for name in batch_grads:
                batch_grads[name] *= scale
            adam_step(params, batch_grads, adam, lr)

        val_value = _validation_value(params, val_clusters, model_val, val_targets, config)
        history.append(
            HistoryEntry(
                epoch=epoch_idx + 1,
                train_loss=float(np.mean(epoch_losses)),
                val_metric=val_value,
                lr=lr,
            )
        )
        if _improved(val_value, best_value, config.validation_metric):
            best_value = val_value
            best_params = clone_params(params)
            best_epoch = epoch_idx
        if epoch_idx - best_epoch >= config.patience:
            break
    return best_params, history


def write_history(history: Sequence[HistoryEntry], path: str | Path) -> None:
    """Write the per-epoch log as tab-separated text."""
    lines = ["epoch\ttrain_loss\tval_metric\tlr"]
    for entry in history:
        lines.append(
            f"{entry.epoch}\t{entry.train_loss!r}\t{entry.val_metric!r}\t{entry.lr!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Checkpoint I/O
# ---------------------------------------------------------------------------

CKPT_MAGIC = b"CERA"
CKPT_VERSION = 1


def save_checkpoint(
    params: CeraParams, path: str | Path, meta: dict | None = None
) -> None:
    """Serialize parameters as a versioned little-endian float32 binary."""
    blob = bytearray()
    blob += struct.pack("<4sII", CKPT_MAGIC, CKPT_VERSION, params.d)
    blob += struct.pack("<B", VARIANTS.index(params.variant))
    meta_bytes = json.dumps(meta or {}, ensure_ascii=False).encode("utf-8")
    blob += struct.pack("<I", len(meta_bytes))
    blob += meta_bytes
    tensors = params.tensors()
    blob += struct.pack("<H", len(tensors))
    for name, tensor in tensors.items():
        name_bytes = name.encode("utf-8")
        blob += struct.pack("<H", len(name_bytes))
        blob += name_bytes
        blob += struct.pack("<B", tensor.ndim)
        for dim in tensor.shape:
            blob += struct.pack("<I", dim)
        blob += np.ascontiguousarray(tensor, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(
    path: str | Path,
    expect_variant: str | None = None,
    expect_d: int | None = None,
) -> tuple[CeraParams, dict]:
    """Load a checkpoint; tensors come back as float64 upcasts of stored f32."""
    blob = Path(path).read_bytes()
    offset = 0

    def take(fmt: str):
        nonlocal offset
        size = struct.calcsize(fmt)
        if offset + size > len(blob):
            raise DataError(f"{path}: truncated checkpoint")
        values = struct.unpack_from(fmt, blob, offset)
        offset += size
        return values

    magic, version, d = take("<4sII")
    if magic != CKPT_MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {CKPT_MAGIC!r}")
    if version != CKPT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")
    (variant_flag,) = take("<B")
    if variant_flag >= len(VARIANTS):
        raise DataError(f"{path}: unknown variant flag {variant_flag}")
    variant = VARIANTS[variant_flag]
    if expect_variant is not None and variant != expect_variant:
        raise DataError(
            f"{path}: checkpoint holds a {variant!r} model, expected {expect_variant!r}"
        )
    if expect_d is not None and d != expect_d:
        raise DataError(f"{path}: checkpoint d={d} does not match expected d={expect_d}")
    (meta_len,) = take("<I")
    if offset + meta_len > len(blob):
        raise DataError(f"{path}: truncated checkpoint")
    meta = json.loads(blob[offset : offset + meta_len].decode("utf-8"))
    offset += meta_len
    (tensor_count,) = take("<H")
    tensors: dict[str, np.ndarray] = {}
    for _ in range(tensor_count):
        (name_len,) = take("<H")
        if offset + name_len > len(blob):
            raise DataError(f"{path}: truncated checkpoint")
        name = blob[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (ndim,) = take("<B")
        shape = tuple(take("<I")[0] for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        size = 4 * count
        if offset + size > len(blob):
            raise DataError(f"{path}: truncated checkpoint")
        data = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        offset += size
        tensors[name] = data.reshape(shape).astype(np.float64)
    if offset != len(blob):
        raise DataError(f"{path}: {len(blob) - offset} trailing bytes in checkpoint")
    expected = set(_BASE_TENSORS) | (
        set(_GATE_TENSORS) if variant == "cerai" else set()
    )
    if set(tensors) != expected:
        raise DataError(f"{path}: checkpoint tensor table does not match variant")
    return CeraParams(variant=variant, **tensors), meta


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------


def random_instance(
    d: int = 16,
    n_docs: int = 2,
    doc_len: int = 3,
    variant: str = "cera",
    seed: int = 0,
) -> tuple[Cluster, np.ndarray, CeraParams]:
    """A random synthetic cluster, gold centroid and jittered parameters."""
    rng = np.random.default_rng(seed)
    documents = []
    for doc_index in range(n_docs):
        doc = []
        for pos in range(doc_len):
            emb = normalize_inputs(rng.normal(size=(1, d)))[0]
            doc.append(Sentence(doc_index, pos, f"sentence {doc_index} {pos}", emb))
        documents.append(doc)
    cluster = Cluster(id=f"synthetic-{seed}", documents=documents)
    target = normalize_inputs(rng.normal(size=(1, d)))[0]
    params = init_params(d, variant, seed=seed)
    for tensor in params.tensors().values():
        tensor += rng.normal(scale=0.05, size=tensor.shape)
    return cluster, target, params


def finite_difference_check(
    cluster: Cluster,
    target: np.ndarray,
    params: CeraParams,
    eps: float = 1e-4,
    corrupt: bool = False,
) -> dict[str, float]:
    """Max relative error of analytic vs central-difference gradients.

    Relative error is ``|a - n| / max(|a|, |n|, 1e-6)`` per element.  The
    ``corrupt`` hook perturbs one analytic gradient tensor and serves as a
    negative control for the check itself.
    """
    centroid, trace = forward(cluster, params)
    analytic = backward(trace, target, params)
    if corrupt:
        analytic["scorer_w1"] = analytic["scorer_w1"] + 0.5
    errors: dict[str, float] = {}
    for name, tensor in params.tensors().items():
        flat = tensor.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + eps
            loss_plus = cosine_loss(forward(cluster, params)[0], target)
            flat[i] = original - eps
            loss_minus = cosine_loss(forward(cluster, params)[0], target)
            flat[i] = original
            numeric[i] = (loss_plus - loss_minus) / (2.0 * eps)
        a = analytic[name].reshape(-1)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(numeric)), 1e-6)
        errors[name] = float(np.max(np.abs(a - numeric) / denom))
    return errors


def gradient_check_report(
    variant: str,
    instances: int = 5,
    d: int = 16,
    eps: float = 1e-4,
    threshold: float = 1e-3,
    seed: int = 0,
    corrupt: bool = False,
) -> tuple[bool, list[dict]]:
    """Run the finite-difference suite on seeded random instances."""
    rows: list[dict] = []
    passed = True
    for instance in range(instances):
        cluster, target, params = random_instance(
            d=d, variant=variant, seed=seed + instance
        )
        errors = finite_difference_check(cluster, target, params, eps, corrupt)
        for name, err in errors.items():
            ok = err < threshold
            passed = passed and ok
            rows.append(
                {
                    "variant": variant,
                    "instance": instance,
                    "tensor": name,
                    "max_rel_err": err,
                    "ok": ok,
                }
            )
    return passed, rows
