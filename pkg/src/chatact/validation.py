"""Geometric check that the label hierarchy is real in the data.

Train the no-context baseline on the full label set, average its sentence
embeddings per label, and compare cosine distances: labels that share a
top-level act should sit closer to each other than the all-pairs average.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .corpus import Dialogue
from .errors import ChatactError, ModelError
from .labeler.baseline import BaselineModel

# Distances previously observed on a private software-team corpus, for
# orientation only; tests assert the within-class < overall property, not
# these numbers.
REFERENCE_DISTANCES = {
    "Acknowledge": 0.85,
    "Assign": 0.67,
    "Code-Message-Table": 0.83,
    "Inform": 0.78,
    "Propose": 0.75,
    "Query": 0.90,
    "Reject": 0.81,
    "Request": 0.77,
    "Social": 0.91,
    "All": 0.91,
}
REFERENCE_MOST_SIMILAR = ("Inform-ClaimTask", "Reject-Counter-Claim", 0.44)


@dataclass(frozen=True)
class LabelCentroid:
    label: str
    vector: np.ndarray
    support: int


def compute_centroids(model: BaselineModel, dialogue: Dialogue,
                      mode: str = "sentence_mean"):
    """Per-label average vectors under the trained baseline.

    mode "sentence_mean" averages the model's sentence embeddings over all
    sentences carrying the gold label; mode "output_row" takes the label's
    row of the output weight matrix instead. Returns (centroids, omitted)
    where omitted lists labels in the model's label set with zero support.
    """
    if not model.trained:
        raise ModelError("baseline model has not been trained")
    if mode not in ("sentence_mean", "output_row"):
        raise ChatactError(f"unknown centroid mode {mode!r}")
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    for sent in dialogue.sentences:
        if sent.gold_label is None:
            continue
        vec = model.sentence_vector(sent.text)
        if sent.gold_label in sums:
            sums[sent.gold_label] += vec
            counts[sent.gold_label] += 1
        else:
            sums[sent.gold_label] = vec.copy()
            counts[sent.gold_label] = 1
    centroids = []
    for label in sorted(sums):
        if mode == "sentence_mean":
            vector = sums[label] / counts[label]
        else:
            vector = model.output_weights[model.label_set.index(label)].copy()
        centroids.append(LabelCentroid(label=label, vector=vector,
                                       support=counts[label]))
    omitted = sorted(set(model.label_set) - set(sums))
    return centroids, omitted


def cosine_distance(u: np.ndarray, v: np.ndarray) -> float:
    """1 - cos(u, v), in [0, 2]."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ChatactError("cosine distance is undefined for a zero vector")
    return 1.0 - float(np.dot(u, v)) / (nu * nv)


def most_similar_pair(centroids: list[LabelCentroid]):
    """The closest centroid pair; ties resolve to the lexicographically
    first (label_a, label_b) pair."""
    if len(centroids) < 2:
        raise ChatactError("need at least two centroids")
    by_label = {c.label: c for c in centroids}
    best = None
    for a, b in combinations(sorted(by_label), 2):
        d = cosine_distance(by_label[a].vector, by_label[b].vector)
        if best is None or d < best[2]:
            best = (a, b, d)
    return best


def hierarchy_consistency_report(centroids: list[LabelCentroid],
                                 taxonomy) -> dict:
    """Within-class vs overall average pairwise cosine distances.

    For each top-level act with at least two member centroids, the mean
    pairwise distance among members; "all_mean" is the mean over every
    centroid pair. Classes whose within-class mean is not below the overall
    mean are flagged.
    """
    if len(centroids) < 2:
        raise ChatactError("need at least two centroids")
    members: dict[str, list[LabelCentroid]] = {}
    for c in centroids:
        members.setdefault(taxonomy.top_level(c.label), []).append(c)

    all_pairs = [
        cosine_distance(a.vector, b.vector)
        for a, b in combinations(centroids, 2)
    ]
    all_mean = float(np.mean(all_pairs))
    classes: dict[str, dict] = {}
    violations = []
    for cls in sorted(members):
        group = members[cls]
        if len(group) < 2:
            continue
        dists = [
            cosine_distance(a.vector, b.vector)
            for a, b in combinations(group, 2)
        ]
        within = float(np.mean(dists))
        classes[cls] = {
            "within_mean": within,
            "n_pairs": len(dists),
            "members": [c.label for c in group],
        }
        if within >= all_mean:
            violations.append(cls)
    return {
        "classes": classes,
        "all_mean": all_mean,
        "all_pairs": len(all_pairs),
        "violations": violations,
    }


def render_report(report: dict) -> str:
    lines = ["class            within-class mean distance"]
    for cls, row in report["classes"].items():
        flag = "  (not below overall)" if cls in report["violations"] else ""
        lines.append(f"{cls:<16} {row['within_mean']:.3f}{flag}")
    lines.append(f"{'All':<16} {report['all_mean']:.3f}")
    return "\n".join(lines)
