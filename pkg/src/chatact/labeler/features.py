"""Hashed sparse features for sentence emissions.

Every feature is a namespaced string hashed into a fixed-dimension space
with a seeded FNV-1a hash, so vectors are identical across runs and
platforms. Collisions are permitted and harmless at the default dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import Dialogue, is_emoticon_token
from ..segmentation import Window

# Published hashing seed; changing it invalidates every stored model.
FEATURE_HASH_SEED = 0x5A17AC7C47C70A95

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = 0xFFFFFFFFFFFFFFFF


def hash_feature(feature: str, dim: int, seed: int = FEATURE_HASH_SEED) -> int:
    """Seeded 64-bit FNV-1a of the UTF-8 feature string, reduced mod dim."""
    h = (_FNV_OFFSET ^ seed) & _MASK
    for b in feature.encode("utf-8"):
        h ^= b
        h = (h * _FNV_PRIME) & _MASK
    return h % dim


@dataclass(frozen=True)
class FeatureConfig:
    dim: int = 2 ** 18
    hash_seed: int = FEATURE_HASH_SEED
    char_ngram_min: int = 3
    char_ngram_max: int = 5
    max_chars: int = 512  # cap for very long pasted blocks

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "hash_seed": format(self.hash_seed, "x"),
            "char_ngram_min": self.char_ngram_min,
            "char_ngram_max": self.char_ngram_max,
            "max_chars": self.max_chars,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureConfig":
        return cls(
            dim=obj["dim"],
            hash_seed=int(obj["hash_seed"], 16),
            char_ngram_min=obj["char_ngram_min"],
            char_ngram_max=obj["char_ngram_max"],
            max_chars=obj["max_chars"],
        )


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Sparse vector: strictly increasing indices, no stored zeros."""

    indices: np.ndarray  # int64, sorted
    values: np.ndarray  # float64
    dim: int

    def __eq__(self, other):
        return (
            isinstance(other, FeatureVector)
            and self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class SentenceUnit:
    """A sentence plus the message context featurization needs."""

    sentence_id: str
    text: str
    is_code_block: bool
    speaker: str
    timestamp: float
    message_initial: bool
    gold_label: str | None = None
    predicted_label: str | None = None


def window_units(dialogue: Dialogue, window: Window) -> list[SentenceUnit]:
    units = []
    for sid in window.sentence_ids:
        sent = dialogue.sentence(sid)
        msg = dialogue.message(sent.message_id)
        units.append(SentenceUnit(
            sentence_id=sent.id,
            text=sent.text,
            is_code_block=sent.is_code_block,
            speaker=msg.speaker,
            timestamp=msg.timestamp,
            message_initial=sent.index_in_message == 0,
            gold_label=sent.gold_label,
            predicted_label=sent.predicted_label,
        ))
    return units


def _gap_bucket(gap: float) -> str:
    if gap < 60:
        return "<1m"
    if gap < 600:
        return "<10m"
    if gap < 3600:
        return "<1h"
    return ">=1h"


def featurize(units: list[SentenceUnit], position: int,
              config: FeatureConfig = FeatureConfig()) -> FeatureVector:
    """Hashed features for one sentence in its window context."""
    unit = units[position]
    text = unit.text[: config.max_chars].lower()
    tokens = text.split()

    feats: list[str] = []
    for tok in tokens:
        feats.append("w=" + tok)
    for a, b in zip(tokens, tokens[1:]):
        feats.append("wb=" + a + "|" + b)
    for n in range(config.char_ngram_min, config.char_ngram_max + 1):
        for i in range(len(text) - n + 1):
            feats.append(f"c{n}=" + text[i:i + n])

    feats.append("bias")
    if unit.is_code_block:
        feats.append("f=code")
    if len(tokens) == 1 and is_emoticon_token(unit.text.strip()):
        feats.append("f=emoticon")
    if position == 0:
        feats.append("f=first")
    if unit.message_initial:
        feats.append("f=msginit")
    if "?" in text:
        feats.append("f=qmark")
    if any(t.startswith("@") and len(t) > 1 for t in tokens):
        feats.append("f=mention")
    if position > 0:
        prev = units[position - 1]
        if prev.speaker != unit.speaker:
            feats.append("f=spkchg")
        feats.append("gap=" + _gap_bucket(unit.timestamp - prev.timestamp))

    counts: dict[int, float] = {}
    for f in feats:
        idx = hash_feature(f, config.dim, config.hash_seed)
        counts[idx] = counts.get(idx, 0.0) + 1.0
    items = sorted(counts.items())
    return FeatureVector(
        indices=np.array([i for i, _ in items], dtype=np.int64),
        values=np.array([v for _, v in items], dtype=np.float64),
        dim=config.dim,
    )


def text_feature_ids(text: str, buckets: int, *, char_min: int = 3,
                     char_max: int = 5, max_chars: int = 512,
                     seed: int = FEATURE_HASH_SEED) -> np.ndarray:
    """Text-only n-gram bucket ids (with multiplicity) for the baseline."""
    text = text[:max_chars].lower()
    tokens = text.split()
    feats = ["w=" + t for t in tokens]
    for n in range(char_min, char_max + 1):
        for i in range(len(text) - n + 1):
            feats.append(f"c{n}=" + text[i:i + n])
    if not feats:
        feats = ["empty"]
    return np.array([hash_feature(f, buckets, seed) for f in feats],
                    dtype=np.int64)
