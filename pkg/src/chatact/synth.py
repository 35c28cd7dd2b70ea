"""Synthetic chat corpus with known statistics, for tests and demos.

Labels follow a Markov chain over the 18-label reduced set with realistic
response structure (queries draw answers, assignments draw acceptances).
Certain label pairs intentionally share their entire vocabulary
(Inform/Inform-InResponse, Acknowledge/Acknowledge-Accept,
Query/Query-For-Clarification): text alone cannot separate them, dialogue
context can. Stationary label proportions are computed exactly from the
chain, so corpus statistics have an analytic reference.

Everything is driven by one seed; the emitted transcript re-parses through
the real ingestion pipeline into exactly the intended sentences.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np

from .corpus import (
    AnnotationRecord,
    Dialogue,
    attach_annotations,
    parse_transcript,
    serialize_transcript,
    write_annotations,
)

LABELS = (
    "Inform",
    "Query",
    "Request",
    "Assign",
    "Propose",
    "Acknowledge",
    "Reject",
    "Code",
    "Social",
    "Inform-InResponse",
    "Inform-NewIssue",
    "Query-For-Clarification",
    "Acknowledge-Accept",
    "Propose-OfferAssistance",
    "Social-Comradery",
    "Social-Appreciation",
    "Social-Frustration",
    "Social-Blame-Person",
)

# Labels that answer someone else: they open a new message from a new speaker.
RESPONSIVE = {
    "Inform-InResponse", "Acknowledge", "Acknowledge-Accept", "Reject",
    "Social-Appreciation", "Query-For-Clarification",
    "Propose-OfferAssistance", "Social-Comradery",
}

QUESTION_LABELS = {"Query", "Query-For-Clarification", "Request",
                   "Propose-OfferAssistance"}

_TRANSITIONS: dict[str, dict[str, float]] = {
    "Inform": {"Inform": .70, "Query": .04, "Acknowledge": .02,
               "Query-For-Clarification": .03, "Propose": .03,
               "Inform-NewIssue": .04, "Request": .04, "Assign": .04,
               "Code": .02, "Social": .02},
    "Query": {"Inform-InResponse": .55, "Inform": .02, "Acknowledge": .05,
              "Query-For-Clarification": .14, "Query": .05, "Reject": .03},
    "Request": {"Acknowledge-Accept": .45, "Reject": .12,
                "Inform-InResponse": .12, "Acknowledge": .05},
    "Assign": {"Acknowledge-Accept": .55, "Reject": .15, "Inform": .02,
               "Query-For-Clarification": .05},
    "Propose": {"Acknowledge": .35, "Reject": .12, "Query": .10,
                "Acknowledge-Accept": .10, "Inform": .04},
    "Acknowledge": {"Inform": .06, "Query": .10, "Social-Appreciation": .06,
                    "Assign": .07, "Propose": .05, "Code": .04, "Social": .08,
                    "Inform-NewIssue": .04},
    "Reject": {"Propose": .18, "Inform": .04, "Query": .08,
               "Social-Frustration": .06, "Inform-InResponse": .08,
               "Social": .06, "Inform-NewIssue": .05},
    "Code": {"Inform": .04, "Code": .30, "Query": .10,
             "Social-Frustration": .05, "Propose": .08,
             "Inform-NewIssue": .06},
    "Social": {"Social": .30, "Inform": .04, "Query": .08,
               "Social-Comradery": .08},
    "Inform-InResponse": {"Acknowledge": .16, "Social-Appreciation": .12,
                          "Inform": .04, "Query-For-Clarification": .12,
                          "Query": .06, "Inform-InResponse": .06,
                          "Social": .04, "Inform-NewIssue": .04},
    "Inform-NewIssue": {"Query": .50, "Propose": .10,
                        "Propose-OfferAssistance": .06, "Assign": .08,
                        "Social-Frustration": .04, "Code": .04,
                        "Inform-NewIssue": .04},
    "Query-For-Clarification": {"Inform-InResponse": .60, "Inform": .02,
                                "Acknowledge": .05},
    "Acknowledge-Accept": {"Inform": .06, "Social-Appreciation": .10,
                           "Query": .07, "Social-Comradery": .04,
                           "Social": .06, "Code": .05, "Inform-NewIssue": .04},
    "Propose-OfferAssistance": {"Acknowledge-Accept": .40, "Acknowledge": .15,
                                "Reject": .10, "Social-Appreciation": .08},
    "Social-Comradery": {"Inform": .04, "Social": .16, "Social-Comradery": .06,
                         "Query": .06, "Inform-NewIssue": .05},
    "Social-Appreciation": {"Inform": .04, "Query": .08, "Social": .14,
                            "Acknowledge": .05, "Inform-NewIssue": .04},
    "Social-Frustration": {"Social-Comradery": .15,
                           "Propose-OfferAssistance": .15, "Propose": .10,
                           "Inform": .04, "Social-Frustration": .05,
                           "Social": .08},
    "Social-Blame-Person": {"Inform": .04, "Reject": .10,
                            "Social-Frustration": .08, "Propose": .10,
                            "Social": .08},
}

_START = {"Inform": .5, "Query": .2, "Social": .1, "Inform-NewIssue": .1,
          "Code": .1}

# (class-pool prob, label-unique prob, filler prob). Pairs that must be
# text-confusable get zero unique mass and share their class pool.
_VOCAB_MIX: dict[str, tuple[float, float, float]] = {
    "Inform": (.80, .00, .20),
    "Inform-InResponse": (.80, .00, .20),
    "Inform-NewIssue": (.80, .00, .20),
    "Query": (.75, .00, .25),
    "Query-For-Clarification": (.75, .00, .25),
    "Acknowledge": (.75, .00, .25),
    "Acknowledge-Accept": (.75, .00, .25),
    "Request": (.55, .25, .20),
    "Assign": (.55, .25, .20),
    "Propose": (.70, .10, .20),
    "Propose-OfferAssistance": (.50, .30, .20),
    "Reject": (.55, .25, .20),
    "Code": (.30, .50, .20),
    "Social": (.55, .20, .25),
    "Social-Comradery": (.80, .00, .20),
    "Social-Appreciation": (.80, .00, .20),
    "Social-Frustration": (.45, .35, .20),
    "Social-Blame-Person": (.45, .35, .20),
}

SPEAKERS = ("ana", "ben", "cam", "dee", "eli", "fay")


@dataclass(frozen=True)
class SynthConfig:
    n_sentences: int = 4000
    seed: int = 7
    class_vocab: int = 28
    label_vocab: int = 25
    filler_vocab: int = 40
    start_epoch: float = 1.6226e9
    speakers: tuple[str, ...] = SPEAKERS
    dialogue_id: str = "synth"


@dataclass
class SynthCorpus:
    dialogue: Dialogue  # annotated with gold labels
    records: list[AnnotationRecord]
    labels: list[str]  # intended label per sentence, in order
    transition_matrix: np.ndarray
    stationary: np.ndarray
    label_order: tuple[str, ...] = LABELS
    config: SynthConfig = field(default_factory=SynthConfig)

    def transcript_jsonl(self) -> str:
        return serialize_transcript(self.dialogue)

    def annotations_jsonl(self) -> str:
        return write_annotations(self.records)

    @property
    def majority_label(self) -> str:
        return LABELS[int(np.argmax(self.stationary))]


def transition_matrix() -> np.ndarray:
    """Row-stochastic transition matrix. Mass not explicitly assigned by
    _TRANSITIONS spreads uniformly, so every transition keeps support."""
    n = len(LABELS)
    idx = {lab: i for i, lab in enumerate(LABELS)}
    T = np.zeros((n, n))
    for src in LABELS:
        row = _TRANSITIONS[src]
        leftover = 1.0 - sum(row.values())
        assert leftover > 0, src
        T[idx[src], :] = leftover / n
        for dst, p in row.items():
            T[idx[src], idx[dst]] += p
    T /= T.sum(axis=1, keepdims=True)
    return T


def stationary_distribution(T: np.ndarray, iters: int = 200_000,
                            tol: float = 1e-13) -> np.ndarray:
    pi = np.full(T.shape[0], 1.0 / T.shape[0])
    for _ in range(iters):
        nxt = pi @ T
        if np.abs(nxt - pi).max() < tol:
            return nxt / nxt.sum()
        pi = nxt
    return pi / pi.sum()


def _class_of(label: str) -> str:
    return label.split("-")[0]


class _Vocab:
    def __init__(self, cfg: SynthConfig):
        self.class_pool = {
            cls: [f"{cls[:3].lower()}c{i}" for i in range(cfg.class_vocab)]
            for cls in {_class_of(l) for l in LABELS}
        }
        self.label_pool = {
            lab: [f"{lab.lower().replace('-', '')}u{i}"
                  for i in range(cfg.label_vocab)]
            for lab in LABELS
        }
        self.filler = [f"fill{i}" for i in range(cfg.filler_vocab)]

    def sentence(self, label: str, rng: random.Random) -> str:
        class_p, uniq_p, _ = _VOCAB_MIX[label]
        short = label.startswith("Acknowledge")
        k = rng.randint(2, 4) if short else rng.randint(3, 8)
        tokens = []
        for _ in range(k):
            r = rng.random()
            if r < class_p:
                tokens.append(rng.choice(self.class_pool[_class_of(label)]))
            elif r < class_p + uniq_p:
                tokens.append(rng.choice(self.label_pool[label]))
            else:
                tokens.append(rng.choice(self.filler))
        text = " ".join(tokens)
        if label == "Code":
            return "$ " + text
        if label in QUESTION_LABELS:
            return text + "?"
        return text + "."


def _sample(rng: random.Random, dist: dict[str, float]) -> str:
    r = rng.random() * sum(dist.values())
    acc = 0.0
    for key, p in dist.items():
        acc += p
        if r <= acc:
            return key
    return key  # pragma: no cover - float edge


def generate(config: SynthConfig = SynthConfig()) -> SynthCorpus:
    """Build the corpus; deterministic for a fixed config."""
    rng = random.Random(config.seed)
    T = transition_matrix()
    idx = {lab: i for i, lab in enumerate(LABELS)}
    vocab = _Vocab(config)

    labels: list[str] = []
    cur = _sample(rng, _START)
    labels.append(cur)
    while len(labels) < config.n_sentences:
        row = T[idx[cur]]
        cur = LABELS[rng.choices(range(len(LABELS)), weights=row)[0]]
        labels.append(cur)

    # group sentences into messages and assign speakers and timestamps
    messages: list[dict] = []  # {"speaker", "ts", "sentences": [text...]}
    prev_label: str | None = None
    ts = config.start_epoch

    def new_message(label: str):
        nonlocal ts
        if messages:
            gap = rng.uniform(3700, 14000) if rng.random() < 0.04 \
                else rng.uniform(5, 240)
            ts += round(gap, 1)
        if label in RESPONSIVE and messages:
            prev_speaker = messages[-1]["speaker"]
            others = [s for s in config.speakers if s != prev_speaker]
            speaker = rng.choice(others)
        elif messages and rng.random() < 0.25:
            speaker = messages[-1]["speaker"]
        else:
            speaker = rng.choice(config.speakers)
        messages.append({"speaker": speaker, "ts": ts, "sentences": []})

    for label in labels:
        text = vocab.sentence(label, rng)
        continue_message = False
        if messages and label not in RESPONSIVE and label != "Code" \
                and prev_label != "Code" \
                and len(messages[-1]["sentences"]) < 6:
            if label == prev_label == "Inform":
                continue_message = True
            elif label == prev_label == "Social":
                continue_message = rng.random() < 0.6
            elif prev_label == "Inform-NewIssue" \
                    and label in ("Query", "Request"):
                continue_message = rng.random() < 0.95
            elif prev_label == "Inform" and label in ("Query", "Request"):
                continue_message = rng.random() < 0.35
        if not continue_message:
            new_message(label)
        messages[-1]["sentences"].append(text)
        prev_label = label

    lines = []
    for i, msg in enumerate(messages):
        lines.append(json.dumps({
            "ts": msg["ts"],
            "speaker": msg["speaker"],
            "text": " ".join(msg["sentences"]),
            "id": f"m{i:05d}",
            "dialogue_id": config.dialogue_id,
        }))
    dialogue = parse_transcript("\n".join(lines), dialogue_id=config.dialogue_id)
    if len(dialogue.sentences) != len(labels):
        raise AssertionError(
            f"generator produced {len(labels)} sentences but the splitter "
            f"found {len(dialogue.sentences)}"
        )
    records = [
        AnnotationRecord(
            sentence_id=sent.id,
            label=lab,
            annotator="generator",
            created_at=dialogue.timestamp_of(sent),
            source="human",
        )
        for sent, lab in zip(dialogue.sentences, labels)
    ]
    annotated = attach_annotations(dialogue, records)
    return SynthCorpus(
        dialogue=annotated,
        records=records,
        labels=labels,
        transition_matrix=T,
        stationary=stationary_distribution(T),
        config=config,
    )


def write_corpus(corpus: SynthCorpus, directory) -> tuple[str, str]:
    """Write transcript and annotations JSONL files; returns their paths."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    transcript = directory / "transcript.jsonl"
    annotations = directory / "annotations.jsonl"
    transcript.write_text(corpus.transcript_jsonl(), encoding="utf-8")
    annotations.write_text(corpus.annotations_jsonl(), encoding="utf-8")
    return str(transcript), str(annotations)
