import numpy as np
import pytest

from chatact.errors import ModelError
from chatact.labeler.baseline import (
    BaselineConfig,
    predict_baseline,
    train_baseline,
)


def test_empty_training_set_errors():
    with pytest.raises(ModelError):
        train_baseline([], [], ("A", "B"), BaselineConfig(seed=0))


def test_unknown_label_errors():
    with pytest.raises(ModelError):
        train_baseline(["hi"], ["C"], ("A", "B"), BaselineConfig(seed=0))


def test_one_class_always_predicted():
    texts = ["alpha beta", "beta gamma", "gamma delta"]
    model = train_baseline(texts, ["A"] * 3, ("A", "B"),
                           BaselineConfig(seed=0, epochs=5))
    for t in texts + ["unseen words"]:
        assert predict_baseline(model, t) == "A"


def test_separable_classes_reach_perfect_train_accuracy():
    rng = np.random.RandomState(0)
    texts, labels = [], []
    for _ in range(60):
        texts.append(" ".join(rng.choice(["aaa", "bbb", "ccc"], 4)))
        labels.append("A")
        texts.append(" ".join(rng.choice(["xxx", "yyy", "zzz"], 4)))
        labels.append("B")
    model = train_baseline(texts, labels, ("A", "B"),
                           BaselineConfig(seed=1, epochs=40))
    correct = sum(predict_baseline(model, t) == l for t, l in zip(texts, labels))
    assert correct == len(texts)


def test_training_is_deterministic():
    texts = ["a b c", "c d e", "e f g", "g h i"]
    labels = ["A", "B", "A", "B"]
    cfg = BaselineConfig(seed=3, epochs=5)
    m1 = train_baseline(texts, labels, ("A", "B"), cfg)
    m2 = train_baseline(texts, labels, ("A", "B"), cfg)
    assert np.array_equal(m1.embeddings, m2.embeddings)
    assert np.array_equal(m1.output_weights, m2.output_weights)


def test_init_is_seeded_noise_only():
    cfg = BaselineConfig(seed=4, epochs=0)
    model = train_baseline(["hi"], ["A"], ("A", "B"), cfg)
    rng = np.random.RandomState(4)
    scale = 0.5 / cfg.dim
    expected = rng.uniform(-scale, scale, (cfg.buckets, cfg.dim))
    assert np.array_equal(model.embeddings, expected)


def test_sentence_vector_is_mean_of_rows():
    model = train_baseline(["x"], ["A"], ("A",),
                           BaselineConfig(seed=5, epochs=0))
    from chatact.labeler.features import text_feature_ids

    ids = text_feature_ids("hello there", model.config.buckets,
                           seed=model.config.hash_seed)
    expected = model.embeddings[ids].mean(axis=0)
    assert np.allclose(model.sentence_vector("hello there"), expected)
