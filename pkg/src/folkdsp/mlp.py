"""Feed-forward network: 26 -> 256 -> 128 -> 64 -> 6 by default.

Rectifier hidden units, softmax output, mean cross-entropy loss, plain
mini-batch gradient descent. Training is single-threaded and bit-reproducible
for a fixed (seed, data, config); the returned model carries the parameters
of the epoch with the best validation loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, SchemaError, ShapeError, TrainingDiverged

MLP_SCHEMA = "folkdsp-mlp/1"
DEFAULT_LAYER_SIZES = (26, 256, 128, 64, 6)


@dataclass
class MLPModel:
    layer_sizes: tuple
    weights: list  # weights[i]: layer_sizes[i] x layer_sizes[i+1]
    biases: list
    class_order: tuple

    def copy(self) -> "MLPModel":
        return MLPModel(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            class_order=self.class_order,
        )


@dataclass
class TrainConfig:
    epochs: int = 200
    batch_size: int = 16
    learning_rate: float = 1e-3
    seed: int = 0


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    best_epoch: int = 0
    seed: int = 0

    def epochs(self):
        return range(1, len(self.train_loss) + 1)


def init(seed: int = 0, layer_sizes=DEFAULT_LAYER_SIZES, class_order=None) -> MLPModel:
    """Glorot-uniform weights, zero biases; deterministic given seed."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    if class_order is None:
        class_order = tuple(range(layer_sizes[-1]))
    return MLPModel(layer_sizes=tuple(layer_sizes), weights=weights, biases=biases, class_order=tuple(class_order))


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_full(model: MLPModel, X: np.ndarray):
    """Returns (activations per layer, logits); activations[0] is the input."""
    acts = [X]
    h = X
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        h = np.maximum(0.0, h @ w + b)
        acts.append(h)
    logits = h @ model.weights[-1] + model.biases[-1]
    return acts, logits


def forward(model: MLPModel, x) -> np.ndarray:
    """Class probabilities for one input or a batch."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    X = np.atleast_2d(arr)
    if X.shape[1] != model.layer_sizes[0]:
        raise ShapeError(f"expected {model.layer_sizes[0]} inputs, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite input")
    _, logits = _forward_full(model, X)
    probs = _softmax(logits)
    return probs[0] if single else probs


def cross_entropy(model: MLPModel, X: np.ndarray, y_idx: np.ndarray) -> float:
    """Mean -log p(true class), computed with log-sum-exp stabilization."""
    _, logits = _forward_full(model, np.atleast_2d(X))
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return float(-log_probs[np.arange(len(y_idx)), y_idx].mean())


def gradients(model: MLPModel, X: np.ndarray, y_idx: np.ndarray):
    """Backprop gradients of the mean cross-entropy over the batch."""
    X = np.atleast_2d(X)
    n = X.shape[0]
    acts, logits = _forward_full(model, X)
    probs = _softmax(logits)
    delta = probs.copy()
    delta[np.arange(n), y_idx] -= 1.0
    delta /= n

    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (acts[layer] > 0.0)
    return grads_w, grads_b


def _check_finite(model: MLPModel) -> bool:
    return all(np.all(np.isfinite(w)) for w in model.weights) and all(
        np.all(np.isfinite(b)) for b in model.biases
    )


def train(model: MLPModel, train_set, validation_set, config: TrainConfig):
    """Mini-batch gradient descent; returns (best-epoch model, report).

    train_set / validation_set are (X, labels) pairs; labels must be drawn
    from the model's class_order.
    """
    X_tr, y_tr = _encode_set(model, train_set)
    X_val, y_val = _encode_set(model, validation_set)
    if len(set(y_tr.tolist())) < 1:
        raise ShapeError("training set is empty")

    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    report = TrainReport(seed=config.seed)
    best = model.copy()
    best_val = np.inf

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(y_tr))
        batch_losses = []
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            batch_losses.append(cross_entropy(model, X_tr[batch], y_tr[batch]))
            grads_w, grads_b = gradients(model, X_tr[batch], y_tr[batch])
            for w, gw in zip(model.weights, grads_w):
                w -= config.learning_rate * gw
            for b, gb in zip(model.biases, grads_b):
                b -= config.learning_rate * gb

        train_loss = float(np.mean(batch_losses))
        val_loss = cross_entropy(model, X_val, y_val)
        if not (np.isfinite(train_loss) and np.isfinite(val_loss) and _check_finite(model)):
            raise TrainingDiverged(epoch)
        _, logits = _forward_full(model, X_val)
        val_acc = float(np.mean(np.argmax(logits, axis=1) == y_val))
        report.train_loss.append(train_loss)
        report.val_loss.append(val_loss)
        report.val_accuracy.append(val_acc)
        if val_loss < best_val:
            best_val = val_loss
            best = model.copy()
            report.best_epoch = epoch

    if report.best_epoch == 0:  # e.g. zero epochs requested
        best = model.copy()
    return best, report


def _encode_set(model: MLPModel, pair):
    X, y = pair
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    mapping = {c: i for i, c in enumerate(model.class_order)}
    try:
        y_idx = np.array([mapping[v] for v in list(y)], dtype=np.int64)
    except KeyError as exc:
        raise ShapeError(f"label {exc.args[0]!r} not in class_order") from None
    if X.shape[0] != len(y_idx):
        raise ShapeError("one label per row required")
    return X, y_idx


def predict(model: MLPModel, x):
    """Predicted class plus probability vector; ties break by class_order."""
    probs = np.atleast_2d(forward(model, x))
    idx = np.argmax(probs, axis=1)
    labels = np.array([model.class_order[i] for i in idx], dtype=object)
    if np.asarray(x).ndim == 1:
        return labels[0], probs[0]
    return labels, probs


def report_to_csv(report: TrainReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,train_loss,val_loss,val_acc\n")
        for e, (tl, vl, va) in enumerate(
            zip(report.train_loss, report.val_loss, report.val_accuracy), start=1
        ):
            fh.write(f"{e},{tl:.9g},{vl:.9g},{va:.9g}\n")


def mlp_to_json(model: MLPModel, extra: dict | None = None) -> dict:
    doc = {
        "schema": MLP_SCHEMA,
        "layer_sizes": list(model.layer_sizes),
        "class_order": list(model.class_order),
        "weights": [w.ravel(order="C").tolist() for w in model.weights],
        "biases": [b.tolist() for b in model.biases],
    }
    if extra:
        doc["extra"] = extra
    return doc


def mlp_from_json(doc: dict) -> tuple[MLPModel, dict]:
    if doc.get("schema") != MLP_SCHEMA:
        raise SchemaError(f"unknown mlp schema {doc.get('schema')!r}")
    sizes = tuple(doc["layer_sizes"])
    weights = [
        np.array(flat, dtype=np.float64).reshape(fan_in, fan_out)
        for flat, fan_in, fan_out in zip(doc["weights"], sizes[:-1], sizes[1:])
    ]
    biases = [np.array(b, dtype=np.float64) for b in doc["biases"]]
    model = MLPModel(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        class_order=tuple(doc["class_order"]),
    )
    return model, doc.get("extra", {})


def save_mlp(model: MLPModel, path, extra: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mlp_to_json(model, extra), fh, sort_keys=True)


def load_mlp(path) -> tuple[MLPModel, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return mlp_from_json(json.load(fh))
