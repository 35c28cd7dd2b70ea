"""No-context baseline: averaged hashed n-gram embeddings into a softmax.

Trained from seeded uniform noise with no pretrained vectors of any kind,
so it measures what sentence text alone supports. Used both as the
comparison point for the CRF configurations and as the encoder behind the
taxonomy validation centroids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ModelError
from .features import FEATURE_HASH_SEED, text_feature_ids


@dataclass(frozen=True)
class BaselineConfig:
    seed: int
    buckets: int = 2 ** 15
    dim: int = 64
    epochs: int = 12
    step: float = 0.25
    batch_size: int = 16
    hash_seed: int = FEATURE_HASH_SEED
    max_chars: int = 512


@dataclass
class BaselineModel:
    label_set: tuple[str, ...]
    embeddings: np.ndarray  # (buckets, dim)
    output_weights: np.ndarray  # (L, dim)
    biases: np.ndarray  # (L,)
    config: BaselineConfig
    trained: bool = False

    def sentence_vector(self, text: str) -> np.ndarray:
        """Mean of the hashed n-gram embedding rows for this text."""
        ids = text_feature_ids(text, self.config.buckets,
                               max_chars=self.config.max_chars,
                               seed=self.config.hash_seed)
        return self.embeddings[ids].mean(axis=0)

    def logits(self, text: str) -> np.ndarray:
        return self.output_weights @ self.sentence_vector(text) + self.biases


def predict_baseline(model: BaselineModel, text: str) -> str:
    return model.label_set[int(np.argmax(model.logits(text)))]


def train_baseline(texts: list[str], labels: list[str],
                   label_set: tuple[str, ...],
                   config: BaselineConfig) -> BaselineModel:
    """Mini-batch gradient descent on softmax cross-entropy."""
    if not texts:
        raise ModelError("empty training set")
    if len(texts) != len(labels):
        raise ModelError("texts and labels have different lengths")
    index = {lab: i for i, lab in enumerate(label_set)}
    try:
        y = np.array([index[lab] for lab in labels], dtype=np.int64)
    except KeyError as exc:
        raise ModelError(f"label {exc.args[0]!r} is not in the label set")

    rng = np.random.RandomState(config.seed)
    L = len(label_set)
    scale = 0.5 / config.dim
    model = BaselineModel(
        label_set=tuple(label_set),
        embeddings=rng.uniform(-scale, scale, (config.buckets, config.dim)),
        output_weights=rng.uniform(-scale, scale, (L, config.dim)),
        biases=np.zeros(L),
        config=config,
    )
    id_lists = [
        text_feature_ids(t, config.buckets, max_chars=config.max_chars,
                         seed=config.hash_seed)
        for t in texts
    ]
    n = len(texts)
    total_steps = config.epochs * ((n + config.batch_size - 1) // config.batch_size)
    step_no = 0
    order = np.arange(n)
    for _ in range(config.epochs):
        rng.shuffle(order)
        for lo in range(0, n, config.batch_size):
            batch = order[lo:lo + config.batch_size]
            lr = config.step * (1.0 - step_no / total_steps)
            step_no += 1
            grad_out = np.zeros_like(model.output_weights)
            grad_bias = np.zeros_like(model.biases)
            for i in batch:
                ids = id_lists[i]
                vec = model.embeddings[ids].mean(axis=0)
                logits = model.output_weights @ vec + model.biases
                logits -= logits.max()
                probs = np.exp(logits)
                probs /= probs.sum()
                dlogit = probs
                dlogit[y[i]] -= 1.0
                grad_out += np.outer(dlogit, vec)
                grad_bias += dlogit
                dvec = model.output_weights.T @ dlogit
                np.add.at(model.embeddings, ids,
                          (-lr / len(ids) / len(batch)) * dvec)
            model.output_weights -= lr * grad_out / len(batch)
            model.biases -= lr * grad_bias / len(batch)
    model.trained = True
    return model
