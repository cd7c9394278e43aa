"""Supervised pairwise antecedent classification.

A pair example couples a mention with an earlier candidate antecedent; its
feature vector is the concatenation [g_i ; g_j ; same_surface] of the two
mention vectors and a binary surface-match indicator. The classifier is a
three-hidden-layer ReLU network with a logistic output, trained with binary
cross entropy and dropout, entirely in numpy so gradients stay inspectable.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigError, FormatError, TrainingError, ValidationError

MODEL_MAGIC = b"MWM1"
_CLAMP = 1e-7


@dataclass
class PairExample:
    mention_i: int  # the later mention
    mention_j: int  # candidate antecedent, mention_j < mention_i
    features: np.ndarray
    label: int


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 128
    epochs: int = 20
    patience: int = 3
    hidden_size: int = 150
    dropout: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if min(self.learning_rate, self.batch_size, self.epochs, self.hidden_size) <= 0:
            raise ConfigError("hyperparameters must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")


def surface_match(a, b):
    """1 when two mentions share their exact surface string, else 0."""
    return 1 if a.surface == b.surface else 0


def pair_features(embeddings, corpus, i, j):
    phi = surface_match(corpus.mentions[i], corpus.mentions[j])
    return np.concatenate([embeddings.row(i), embeddings.row(j), [float(phi)]])


def build_features(embeddings, corpus, pairs):
    """Feature matrix for (mention, antecedent) id pairs, one row per pair."""
    if not pairs:
        return np.zeros((0, 2 * embeddings.dim + 1))
    return np.stack([pair_features(embeddings, corpus, i, j) for i, j in pairs])


def sample_pairs_network(corpus, graph, embeddings, add_all_positives=False):
    """Labeled pairs from a mention network: each mention against its earlier
    neighbors, labeled by gold-identity equality.

    Pairs touching an ambiguous (unlabeled) mention are skipped. With
    add_all_positives, every earlier coreferent mention is also emitted even
    if the network lacks the edge, maximizing positive examples.
    """
    if graph.num_nodes != len(corpus.mentions):
        raise ValidationError("graph does not span the corpus mention set")
    gold = corpus.gold_labels()
    examples = []
    seen = set()
    for i in range(graph.num_nodes):
        if gold[i] is None:
            continue
        for j in sorted(graph.neighbors(i)):
            if j >= i or gold[j] is None:
                continue
            label = int(gold[i] == gold[j])
            examples.append(
                PairExample(i, j, pair_features(embeddings, corpus, i, j), label)
            )
            seen.add((i, j))
    if add_all_positives:
        for ids in corpus.identity_index.values():
            for a_pos in range(len(ids)):
                for b_pos in range(a_pos + 1, len(ids)):
                    j, i = ids[a_pos], ids[b_pos]
                    if (i, j) not in seen:
                        examples.append(
                            PairExample(i, j, pair_features(embeddings, corpus, i, j), 1)
                        )
                        seen.add((i, j))
        examples.sort(key=lambda e: (e.mention_i, e.mention_j))
    return examples


def sample_pairs_nearest(corpus, embeddings, n=20):
    """Labeled pairs ignoring the network: for each mention take the n nearest
    earlier coreferent mentions as positives and the n nearest earlier
    non-coreferent mentions as negatives (fewer when unavailable)."""
    gold = corpus.gold_labels()
    unit = embeddings.unit()
    examples = []
    for i in range(len(corpus.mentions)):
        if gold[i] is None or i == 0:
            continue
        sims = unit[:i] @ unit[i]
        order = np.argsort(-sims, kind="stable")
        pos = neg = 0
        chosen = []
        for j in order:
            j = int(j)
            if gold[j] is None:
                continue
            if gold[j] == gold[i]:
                if pos < n:
                    chosen.append((j, 1))
                    pos += 1
            elif neg < n:
                chosen.append((j, 0))
                neg += 1
            if pos >= n and neg >= n:
                break
        for j, label in sorted(chosen):
            examples.append(
                PairExample(i, j, pair_features(embeddings, corpus, i, j), label)
            )
    return examples


def bce_loss(predictions, labels):
    """Summed binary cross entropy; probabilities are clamped away from 0/1."""
    p = np.clip(np.asarray(predictions, dtype=np.float64), _CLAMP, 1.0 - _CLAMP)
    y = np.asarray(labels, dtype=np.float64)
    if p.shape != y.shape or p.size == 0:
        raise ValidationError("predictions and labels must align and be non-empty")
    return float(-np.sum(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class AntecedentModel:
    """Feedforward binary classifier: input -> three ReLU hidden layers of
    hidden_size units -> logistic output. Dropout (inverted scaling) applies
    at the input and after each hidden activation, during training only."""

    def __init__(self, input_dim, hidden_size=150, dropout=0.5, seed=0):
        if input_dim < 1:
            raise ConfigError("input_dim must be >= 1")
        self.input_dim = input_dim
        self.hidden_size = hidden_size
        self.dropout = dropout
        rng = np.random.default_rng(seed)
        sizes = [input_dim, hidden_size, hidden_size, hidden_size, 1]
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = np.sqrt(2.0 / fan_in)
            self.weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            self.biases.append(np.zeros(fan_out))

    @property
    def layer_sizes(self):
        return [self.input_dim] + [w.shape[1] for w in self.weights]

    def parameters(self):
        params = []
        for w, b in zip(self.weights, self.biases):
            params.append(w)
            params.append(b)
        return params

    def sample_masks(self, rng, batch_size):
        """Dropout masks for one batch: input plus each hidden activation."""
        keep = 1.0 - self.dropout
        shapes = [(batch_size, self.input_dim)] + [
            (batch_size, self.hidden_size) for _ in range(3)
        ]
        return [(rng.random(size=s) < keep) / keep for s in shapes]

    def _forward(self, x, masks=None):
        """Returns (probabilities, output logits, layer inputs) for backprop."""
        a = x if masks is None else x * masks[0]
        inputs = [a]
        for layer in range(3):
            z = a @ self.weights[layer] + self.biases[layer]
            a = np.maximum(z, 0.0)
            if masks is not None:
                a = a * masks[layer + 1]
            inputs.append(a)
        z_out = (a @ self.weights[3] + self.biases[3])[:, 0]
        return _sigmoid(z_out), z_out, inputs

    def score_batch(self, features, pairs=None):
        x = np.asarray(features, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.input_dim:
            raise ValidationError(
                f"feature dimension {x.shape[1]} != model input {self.input_dim}"
            )
        p, _, _ = self._forward(x)
        return p

    def score(self, features):
        """Probability that the pair is coreferent; dropout is never applied."""
        return float(self.score_batch(features)[0])

    def loss_and_gradients(self, x, y, masks=None):
        """Mean BCE over the batch plus gradients for every parameter.

        Pass fixed masks to differentiate the dropout-regularized loss; with
        masks=None the clean (inference) loss is used. The loss is computed
        from the logits (softplus(z) - y*z), the exact unclamped cross
        entropy, so it stays consistent with the analytic gradient even when
        the sigmoid saturates.
        """
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        batch = x.shape[0]
        p, z, inputs = self._forward(x, masks)
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))

        grads_w = [None] * 4
        grads_b = [None] * 4
        delta = ((p - y) / batch)[:, None]
        grads_w[3] = inputs[3].T @ delta
        grads_b[3] = delta.sum(axis=0)
        upstream = delta @ self.weights[3].T
        for layer in (2, 1, 0):
            act = inputs[layer + 1]
            if masks is not None:
                upstream = upstream * masks[layer + 1]
            # post-mask activation is positive exactly where the ReLU passed
            # and the mask kept the unit, so it doubles as the ReLU indicator
            upstream = upstream * (act > 0.0)
            grads_w[layer] = inputs[layer].T @ upstream
            grads_b[layer] = upstream.sum(axis=0)
            if layer > 0:
                upstream = upstream @ self.weights[layer].T
        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.append(gw)
            grads.append(gb)
        return loss, grads

    def copy_parameters(self):
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]

    def set_parameters(self, weights, biases):
        self.weights = [w.copy() for w in weights]
        self.biases = [b.copy() for b in biases]


class _Adam:
    """Adam optimizer state for a flat list of parameter arrays."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def _stack_examples(pairs):
    x = np.stack([e.features for e in pairs])
    y = np.asarray([e.label for e in pairs], dtype=np.float64)
    return x, y


def train(pairs, dev_pairs, config):
    """Train an antecedent classifier by mini-batch Adam on BCE.

    Early stopping tracks the dev loss with the configured patience and the
    returned model carries the best-dev weights. Deterministic given the
    config seed. The mention vectors inside the pair features are consumed
    read-only; nothing updates them.
    """
    if not pairs:
        raise TrainingError("no training pairs")
    x, y = _stack_examples(pairs)
    if y.min() == y.max():
        raise TrainingError(
            "training pairs contain a single class; the classifier cannot "
            "learn to separate coreferent from non-coreferent pairs"
        )
    dev = _stack_examples(dev_pairs) if dev_pairs else None

    rng = np.random.default_rng(config.seed)
    model = AntecedentModel(
        x.shape[1],
        hidden_size=config.hidden_size,
        dropout=config.dropout,
        seed=config.seed,
    )
    optimizer = _Adam(model.parameters(), config.learning_rate)

    best_loss = np.inf
    best_params = model.copy_parameters()
    bad_epochs = 0
    for _ in range(config.epochs):
        perm = rng.permutation(len(pairs))
        for start in range(0, len(pairs), config.batch_size):
            idx = perm[start : start + config.batch_size]
            masks = (
                model.sample_masks(rng, idx.size) if config.dropout > 0.0 else None
            )
            _, grads = model.loss_and_gradients(x[idx], y[idx], masks)
            optimizer.step(model.parameters(), grads)
        if dev is None:
            best_params = model.copy_parameters()
            continue
        dev_loss = bce_loss(model.score_batch(dev[0]), dev[1]) / len(dev[1])
        if dev_loss < best_loss - 1e-12:
            best_loss = dev_loss
            best_params = model.copy_parameters()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break
    model.set_parameters(*best_params)
    return model


def pairs_fingerprint(pairs):
    """Stable digest of the (i, j, label) triples used to train a model."""
    h = hashlib.sha256()
    for e in pairs:
        h.update(f"{e.mention_i},{e.mention_j},{e.label};".encode())
    return h.hexdigest()


def save_model(model, path, config=None, fingerprint=None):
    """Binary checkpoint plus a JSON sidecar describing how it was trained."""
    sizes = model.layer_sizes
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(sizes)))
        fh.write(struct.pack(f"<{len(sizes)}I", *sizes))
        for w, b in zip(model.weights, model.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f4").tobytes())
    sidecar = {
        "layer_sizes": sizes,
        "dropout": model.dropout,
        "train_config": asdict(config) if config is not None else None,
        "training_data_fingerprint": fingerprint,
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MODEL_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {MODEL_MAGIC!r}")
        (n_sizes,) = struct.unpack("<I", fh.read(4))
        sizes = list(struct.unpack(f"<{n_sizes}I", fh.read(4 * n_sizes)))
        if len(sizes) != 5 or sizes[-1] != 1 or len(set(sizes[1:4])) != 1:
            raise FormatError(f"{path}: unsupported layer sizes {sizes}")
        model = AntecedentModel(sizes[0], hidden_size=sizes[1])
        weights = []
        biases = []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            wbytes = fh.read(fan_in * fan_out * 4)
            bbytes = fh.read(fan_out * 4)
            if len(wbytes) != fan_in * fan_out * 4 or len(bbytes) != fan_out * 4:
                raise FormatError(f"{path}: truncated weight payload")
            weights.append(
                np.frombuffer(wbytes, dtype="<f4").astype(np.float64).reshape(fan_in, fan_out)
            )
            biases.append(np.frombuffer(bbytes, dtype="<f4").astype(np.float64))
        extra = fh.read(1)
        if extra:
            raise FormatError(f"{path}: trailing bytes after weights")
    model.set_parameters(weights, biases)
    return model
