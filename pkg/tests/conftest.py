import json
from pathlib import Path

import numpy as np
import pytest

from chatact.corpus import attach_annotations, parse_transcript, read_annotations
from chatact.labeler import FeatureConfig, FeatureVector, PreparedWindow, SequenceModel
from chatact.taxonomy import default_taxonomy

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def taxonomy():
    return default_taxonomy()


@pytest.fixture(scope="session")
def fixture_dialogue():
    """The hand-labeled 20-sentence metrics fixture."""
    dialogue = parse_transcript(
        (DATA / "metrics_fixture_transcript.jsonl").read_text())
    records = read_annotations(
        (DATA / "metrics_fixture_annotations.jsonl").read_text())
    return attach_annotations(dialogue, records)


@pytest.fixture(scope="session")
def golden_report():
    return json.loads((DATA / "metrics_golden_report.json").read_text())


@pytest.fixture(scope="session")
def multiparty_dialogue():
    """Three speakers; the third breaks the two-speaker window assumption."""
    lines = [
        {"ts": "2021-03-01T10:00:00Z", "speaker": "PG",
         "text": "BR, hold off on moving the collider origin until you sync with me.",
         "id": "p0"},
        {"ts": "2021-03-01T10:00:30Z", "speaker": "BR",
         "text": "ill check", "id": "p1"},
        {"ts": "2021-03-01T10:01:00Z", "speaker": "ER",
         "text": "while we are measuring distances, please add a table with the origin location and the distances to the top and bottom of the object",
         "id": "p2"},
    ]
    return parse_transcript("\n".join(json.dumps(l) for l in lines),
                            dialogue_id="multiparty")


def random_model(rng: np.random.RandomState, n_labels: int, dim: int = 16,
                 scale: float = 1.0) -> SequenceModel:
    labels = tuple(f"L{i}" for i in range(n_labels))
    return SequenceModel(
        label_set=labels,
        emission_weights=rng.uniform(-scale, scale, (n_labels, dim)),
        transitions=rng.uniform(-scale, scale, (n_labels, n_labels)),
        start_scores=rng.uniform(-scale, scale, n_labels),
        end_scores=rng.uniform(-scale, scale, n_labels),
        l2=0.0,
        feature_config=FeatureConfig(dim=dim),
        taxonomy_hash="test",
    )


def random_window(rng: np.random.RandomState, n: int, dim: int = 16,
                  n_labels: int = 4, n_active: int = 4,
                  labeled: str = "all") -> PreparedWindow:
    feats = []
    for _ in range(n):
        idx = np.sort(rng.choice(dim, size=min(n_active, dim), replace=False))
        vals = rng.uniform(0.2, 2.0, size=len(idx))
        feats.append(FeatureVector(indices=idx.astype(np.int64),
                                   values=vals, dim=dim))
    if labeled == "all":
        gold = rng.randint(0, n_labels, size=n).astype(np.int64)
    elif labeled == "none":
        gold = np.full(n, -1, dtype=np.int64)
    else:  # "some": at least one labeled, at least one masked when n > 1
        gold = rng.randint(0, n_labels, size=n).astype(np.int64)
        if n > 1:
            masked = rng.choice(n, size=max(1, n // 2), replace=False)
            gold[masked] = -1
            if (gold < 0).all():
                gold[rng.randint(0, n)] = rng.randint(0, n_labels)
    return PreparedWindow(
        window_id="w", sentence_ids=tuple(f"s{i}" for i in range(n)),
        features=feats, gold=gold,
    )
