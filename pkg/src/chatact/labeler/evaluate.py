"""Accuracy, per-label precision/recall, and confusion counts."""

from __future__ import annotations

from dataclasses import dataclass

from ..corpus import Dialogue
from ..errors import ModelError
from ..segmentation import Window
from .crf import SequenceModel, decode_window, prepare_windows

# Accuracies previously observed on a private software-team corpus, kept
# for orientation when reading results on other data. Nothing asserts them.
REFERENCE_ACCURACIES = {
    "bag_of_ngrams_baseline": 0.44,
    "crf_1_line": 0.58,
    "crf_5_line": 0.59,
    "crf_10_line": 0.60,
    "crf_10_line_speaker": 0.58,
    "crf_10_line_time": 0.61,
}


@dataclass
class EvalReport:
    accuracy: float
    n_labeled: int
    n_unlabeled: int
    per_label: dict[str, dict[str, float]]  # precision, recall, support
    confusion: dict[str, dict[str, int]]  # gold -> predicted -> count

    def summary(self) -> str:
        lines = [f"accuracy {self.accuracy:.4f} "
                 f"({self.n_labeled} labeled, {self.n_unlabeled} unlabeled)"]
        width = max((len(l) for l in self.per_label), default=0)
        for lab in sorted(self.per_label):
            row = self.per_label[lab]
            lines.append(
                f"  {lab:<{width}}  P {row['precision']:.3f}  "
                f"R {row['recall']:.3f}  n={int(row['support'])}"
            )
        return "\n".join(lines)


def evaluate(model: SequenceModel, dialogue: Dialogue, windows: list[Window],
             taxonomy, extra=None) -> EvalReport:
    """Decode the windows and score against collapsed gold labels."""
    prepared = prepare_windows(dialogue, windows, taxonomy, model.label_set,
                               model.feature_config, extra)
    gold_pred: list[tuple[str, str]] = []
    n_unlabeled = 0
    for pw in prepared:
        path = decode_window(model, pw)
        for pred, gold_idx in zip(path, pw.gold):
            if gold_idx < 0:
                n_unlabeled += 1
                continue
            gold_pred.append((model.label_set[gold_idx], pred))
    if not gold_pred:
        raise ModelError("no labeled sentences to evaluate")

    confusion: dict[str, dict[str, int]] = {}
    for gold, pred in gold_pred:
        confusion.setdefault(gold, {}).setdefault(pred, 0)
        confusion[gold][pred] += 1
    correct = sum(1 for g, p in gold_pred if g == p)
    labels = sorted({g for g, _ in gold_pred} | {p for _, p in gold_pred})
    per_label = {}
    for lab in labels:
        tp = confusion.get(lab, {}).get(lab, 0)
        support = sum(confusion.get(lab, {}).values())
        predicted = sum(row.get(lab, 0) for row in confusion.values())
        per_label[lab] = {
            "precision": tp / predicted if predicted else 0.0,
            "recall": tp / support if support else 0.0,
            "support": float(support),
        }
    return EvalReport(
        accuracy=correct / len(gold_pred),
        n_labeled=len(gold_pred),
        n_unlabeled=n_unlabeled,
        per_label=per_label,
        confusion=confusion,
    )
