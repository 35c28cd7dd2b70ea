"""Chat transcripts as ordered, speaker-attributed sentence streams.

A Dialogue is one channel's batch of Messages sorted by (timestamp, id).
Each Message is split into Sentences, the unit every downstream stage
(segmentation, labeling, metrics) operates on. Parsing and splitting are
pure; annotated views are new objects, never mutations.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import re
from dataclasses import dataclass, replace

from .errors import AnnotationError, ChatactError, TranscriptError

# --------------------------------------------------------------------------
# time helpers (timestamps are float epoch seconds at microsecond resolution)

_UTC = _dt.timezone.utc


def parse_ts(value) -> float:
    """Accept RFC3339 strings, epoch-second strings, or numbers."""
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        try:
            return float(text)
        except ValueError:
            pass
        iso = text.replace("Z", "+00:00").replace("z", "+00:00")
        try:
            dt = _dt.datetime.fromisoformat(iso)
        except ValueError:
            raise ChatactError(f"unparseable timestamp: {value!r}")
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=_UTC)
        return dt.timestamp()
    raise ChatactError(f"unparseable timestamp: {value!r}")


def format_ts(ts: float) -> str:
    """RFC3339 with microseconds dropped when zero."""
    micros = round(ts * 1e6)
    dt = _dt.datetime.fromtimestamp(micros / 1e6, tz=_UTC)
    if micros % 1_000_000 == 0:
        return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
    return dt.strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def parse_duration(text: str | int | float) -> float:
    """Durations like '1h', '30m', '45s', '2d', or plain seconds."""
    if isinstance(text, (int, float)):
        return float(text)
    m = re.fullmatch(r"\s*(\d+(?:\.\d+)?)\s*(ms|s|m|h|d)?\s*", text)
    if not m:
        raise ChatactError(f"unparseable duration: {text!r}")
    value = float(m.group(1))
    unit = m.group(2) or "s"
    return value * {"ms": 1e-3, "s": 1.0, "m": 60.0, "h": 3600.0, "d": 86400.0}[unit]


# --------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Message:
    id: str
    speaker: str
    timestamp: float
    text: str
    dialogue_id: str


@dataclass(frozen=True)
class Sentence:
    id: str
    message_id: str
    index_in_message: int
    index_in_dialogue: int
    text: str
    is_code_block: bool = False
    gold_label: str | None = None
    predicted_label: str | None = None


@dataclass(frozen=True)
class AnnotationRecord:
    """One labeling event; logs of these are append-only.

    sentence_id may be a plain sentence id or ``message:<message_id>`` for a
    block annotation covering every sentence of that message.
    """

    sentence_id: str
    label: str
    annotator: str
    created_at: float
    source: str = "human"  # human | model | corrected
    char_start: int | None = None
    char_end: int | None = None

    def to_json(self) -> dict:
        out = {
            "sentence_id": self.sentence_id,
            "label": self.label,
            "annotator": self.annotator,
            "created_at": format_ts(self.created_at),
            "source": self.source,
        }
        if self.char_start is not None:
            out["char_start"] = self.char_start
            out["char_end"] = self.char_end
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "AnnotationRecord":
        return cls(
            sentence_id=obj["sentence_id"],
            label=obj["label"],
            annotator=obj.get("annotator", ""),
            created_at=parse_ts(obj["created_at"]),
            source=obj.get("source", "human"),
            char_start=obj.get("char_start"),
            char_end=obj.get("char_end"),
        )


@dataclass(frozen=True)
class Dialogue:
    dialogue_id: str
    messages: tuple[Message, ...]
    sentences: tuple[Sentence, ...]
    reordered: bool = False  # input timestamps were out of order and re-sorted
    dropped: int = 0  # records filtered out by design (e.g. Slack subtypes)
    rejected: int = 0  # records skipped because required fields were missing

    def __post_init__(self):
        object.__setattr__(
            self, "_message_by_id", {m.id: m for m in self.messages}
        )
        object.__setattr__(
            self, "_sentence_by_id", {s.id: s for s in self.sentences}
        )
        by_msg: dict[str, list[Sentence]] = {}
        for s in self.sentences:
            by_msg.setdefault(s.message_id, []).append(s)
        object.__setattr__(self, "_sentences_by_message", by_msg)

    def message(self, message_id: str) -> Message:
        return self._message_by_id[message_id]

    def sentence(self, sentence_id: str) -> Sentence:
        return self._sentence_by_id[sentence_id]

    def has_sentence(self, sentence_id: str) -> bool:
        return sentence_id in self._sentence_by_id

    def has_message(self, message_id: str) -> bool:
        return message_id in self._message_by_id

    def sentences_of(self, message_id: str) -> list[Sentence]:
        return list(self._sentences_by_message.get(message_id, []))

    def speaker_of(self, sentence: Sentence) -> str:
        return self._message_by_id[sentence.message_id].speaker

    def timestamp_of(self, sentence: Sentence) -> float:
        return self._message_by_id[sentence.message_id].timestamp

    def with_sentences(self, sentences: list[Sentence]) -> "Dialogue":
        return replace(self, sentences=tuple(sentences))


# --------------------------------------------------------------------------
# sentence splitting

_FENCE_RE = re.compile(r"```.*?(?:```|\Z)", re.DOTALL)
_TERMINAL_RE = re.compile(r"(?<=[.!?])\s+")
_EMOTICON_RE = re.compile(r":[A-Za-z0-9_+\-]+:")
_CODE_LINE_RES = (
    re.compile(r"^\$\s+\S"),
    re.compile(r"^>>>\s"),
    re.compile(r"^Traceback \(most recent call last\)"),
    re.compile(r'^\s*File\s+"'),
    re.compile(r"^\s*at\s+\S+\(.*\)\s*$"),
    re.compile(r"^\w[\w.]*(Error|Exception)\b"),
)


def is_emoticon_token(token: str) -> bool:
    return bool(_EMOTICON_RE.fullmatch(token))


def _looks_like_code_line(line: str) -> bool:
    stripped = line.strip()
    if not stripped:
        return False
    return any(r.match(line) or r.match(stripped) for r in _CODE_LINE_RES)


def _peel_emoticons(chunk: str) -> list[str]:
    """Split standalone emoticon tokens off the edges of a text chunk."""
    tokens = chunk.split()
    lead: list[str] = []
    trail: list[str] = []
    while tokens and is_emoticon_token(tokens[0]):
        lead.append(tokens.pop(0))
    while tokens and is_emoticon_token(tokens[-1]):
        trail.insert(0, tokens.pop())
    parts = lead[:]
    if tokens:
        parts.append(" ".join(tokens))
    parts.extend(trail)
    return parts


def _split_plain(text: str) -> list[tuple[str, bool]]:
    """Non-fenced text: per line, code-heuristic or punctuation splitting."""
    out: list[tuple[str, bool]] = []
    for line in text.replace("\r\n", "\n").replace("\r", "\n").split("\n"):
        if not line.strip():
            continue
        if _looks_like_code_line(line):
            out.append((line.strip(), True))
            continue
        for chunk in _TERMINAL_RE.split(line):
            chunk = chunk.strip()
            if not chunk:
                continue
            for part in _peel_emoticons(chunk):
                out.append((part, False))
    return out


def split_sentences(message: Message) -> list[Sentence]:
    """Split one message into its sentence units.

    Fenced code blocks and console/stack-trace lines become single sentences
    flagged is_code_block; standalone emoticon tokens become their own
    sentences; everything else splits on terminal punctuation followed by
    whitespace and on hard newlines. Total: no non-whitespace character is
    dropped or duplicated.
    """
    text = message.text
    pieces: list[tuple[str, bool]] = []
    pos = 0
    for m in _FENCE_RE.finditer(text):
        pieces.extend(_split_plain(text[pos:m.start()]))
        pieces.append((m.group(0).strip(), True))
        pos = m.end()
    pieces.extend(_split_plain(text[pos:]))
    if not pieces:
        pieces = [(text.strip(), False)]
    return [
        Sentence(
            id=f"{message.id}:s{i}",
            message_id=message.id,
            index_in_message=i,
            index_in_dialogue=-1,  # assigned when the dialogue is assembled
            text=chunk,
            is_code_block=is_code,
        )
        for i, (chunk, is_code) in enumerate(pieces)
    ]


def _assemble(dialogue_id: str, messages: list[Message], *, reordered: bool = False,
              dropped: int = 0, rejected: int = 0) -> Dialogue:
    sentences: list[Sentence] = []
    for msg in messages:
        for sent in split_sentences(msg):
            sentences.append(replace(sent, index_in_dialogue=len(sentences)))
    return Dialogue(
        dialogue_id=dialogue_id,
        messages=tuple(messages),
        sentences=tuple(sentences),
        reordered=reordered,
        dropped=dropped,
        rejected=rejected,
    )


def dialogue_from_messages(messages: list[Message],
                           dialogue_id: str | None = None) -> Dialogue:
    """Assemble a dialogue (sorted, sentence-split) from Message objects."""
    if dialogue_id is None:
        dialogue_id = messages[0].dialogue_id if messages else "dialogue"
    ordered = sorted(messages, key=lambda m: (m.timestamp, m.id))
    reordered = [m.id for m in ordered] != [m.id for m in messages]
    return _assemble(dialogue_id, ordered, reordered=reordered)


# --------------------------------------------------------------------------
# transcript parsing


def parse_transcript(stream, dialogue_id: str | None = None) -> Dialogue:
    """Parse the native JSON-lines transcript into a Dialogue.

    Each line is one message: {"ts": ..., "speaker": ..., "text": ...,
    "id"?: ..., "dialogue_id"?: ...}. Messages are sorted by (timestamp, id);
    out-of-order input is accepted and flagged on the Dialogue.
    """
    if isinstance(stream, (str, bytes)):
        lines = stream.splitlines()
    else:
        lines = [ln for ln in stream]
    records = []
    for lineno, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise TranscriptError(f"invalid JSON ({exc.msg})", lineno)
        if not isinstance(obj, dict):
            raise TranscriptError("record is not an object", lineno)
        for field in ("ts", "speaker", "text"):
            if field not in obj:
                raise TranscriptError(f"missing field {field!r}", lineno)
        text = str(obj["text"])
        if not text.strip():
            raise TranscriptError("empty text", lineno)
        try:
            ts = parse_ts(obj["ts"])
        except ChatactError as exc:
            raise TranscriptError(str(exc), lineno)
        records.append((lineno, ts, str(obj["speaker"]), text,
                        obj.get("id"), obj.get("dialogue_id")))

    if dialogue_id is None:
        dialogue_id = next(
            (r[5] for r in records if r[5]), "dialogue"
        )
    messages = [
        Message(
            id=str(rid) if rid is not None else f"{dialogue_id}:{lineno:06d}",
            speaker=speaker,
            timestamp=ts,
            text=text,
            dialogue_id=dialogue_id,
        )
        for lineno, ts, speaker, text, rid, _ in records
    ]
    ordered = sorted(messages, key=lambda m: (m.timestamp, m.id))
    reordered = [m.id for m in ordered] != [m.id for m in messages]
    return _assemble(dialogue_id, ordered, reordered=reordered)


def serialize_transcript(dialogue: Dialogue) -> str:
    """Native JSON-lines form; parse_transcript(serialize(d)) == d."""
    lines = []
    for m in dialogue.messages:
        lines.append(json.dumps(
            {"ts": format_ts(m.timestamp), "speaker": m.speaker, "text": m.text,
             "id": m.id, "dialogue_id": m.dialogue_id},
            ensure_ascii=False,
        ))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_slack_export(data, user_map: dict[str, str] | None = None,
                       dialogue_id: str = "slack") -> Dialogue:
    """Parse a Slack channel-export array (one channel-day file, or several
    concatenated) into a Dialogue.

    Subtype records without user text (joins, topic changes) are dropped and
    counted; records missing ts or user are skipped and counted as rejects.
    A stream whose every record is rejected is an error.
    """
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise TranscriptError(f"invalid JSON: {exc.msg}")
    if not isinstance(data, list):
        raise TranscriptError("Slack export must be a JSON array of records")
    user_map = user_map or {}
    messages: list[Message] = []
    dropped = 0
    rejected = 0
    for obj in data:
        if not isinstance(obj, dict):
            rejected += 1
            continue
        if obj.get("subtype") and not str(obj.get("text") or "").strip():
            dropped += 1
            continue
        ts_raw = obj.get("ts")
        user = obj.get("user")
        text = str(obj.get("text") or "")
        if ts_raw is None or user is None or not text.strip():
            rejected += 1
            continue
        try:
            ts = parse_ts(ts_raw)
        except ChatactError:
            rejected += 1
            continue
        mid = obj.get("client_msg_id")
        if not mid:
            digest = hashlib.sha1(text.encode("utf-8")).hexdigest()[:8]
            mid = f"{ts_raw}:{user}:{digest}"
        messages.append(Message(
            id=str(mid),
            speaker=user_map.get(str(user), str(user)),
            timestamp=ts,
            text=text,
            dialogue_id=dialogue_id,
        ))
    if data and not messages and rejected and not dropped:
        raise TranscriptError(f"all {rejected} records were rejected")
    ordered = sorted(messages, key=lambda m: (m.timestamp, m.id))
    reordered = [m.id for m in ordered] != [m.id for m in messages]
    return _assemble(dialogue_id, ordered, reordered=reordered,
                     dropped=dropped, rejected=rejected)


def subdialogue(dialogue: Dialogue, message_ids) -> Dialogue:
    """A new dialogue containing just the given messages, in dialogue order.

    Sentence ids are stable (they are message-scoped); index_in_dialogue is
    re-densified for the slice.
    """
    wanted = set(message_ids)
    messages = [m for m in dialogue.messages if m.id in wanted]
    sentences = []
    for m in messages:
        for s in dialogue.sentences_of(m.id):
            sentences.append(replace(s, index_in_dialogue=len(sentences)))
    return Dialogue(
        dialogue_id=dialogue.dialogue_id,
        messages=tuple(messages),
        sentences=tuple(sentences),
        reordered=dialogue.reordered,
    )


def serialize_labeled(dialogue: Dialogue) -> str:
    """Labeled sentence stream: one JSON object per sentence, with enough
    message context (speaker, timestamp) for metrics to run on it alone."""
    lines = []
    for s in dialogue.sentences:
        msg = dialogue.message(s.message_id)
        lines.append(json.dumps({
            "sentence_id": s.id,
            "message_id": s.message_id,
            "dialogue_id": dialogue.dialogue_id,
            "speaker": msg.speaker,
            "ts": format_ts(msg.timestamp),
            "index_in_message": s.index_in_message,
            "text": s.text,
            "is_code_block": s.is_code_block,
            "gold_label": s.gold_label,
            "predicted_label": s.predicted_label,
        }, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_labeled(text: str) -> Dialogue:
    """Rebuild a dialogue from a labeled sentence stream.

    Message text is reconstituted by joining sentence texts; labels,
    ordering, speakers, and timestamps round-trip exactly.
    """
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise TranscriptError(f"invalid JSON ({exc.msg})", lineno)
    if not rows:
        return Dialogue(dialogue_id="dialogue", messages=(), sentences=())
    dialogue_id = rows[0].get("dialogue_id") or "dialogue"
    by_message: dict[str, list[dict]] = {}
    order: list[str] = []
    for row in rows:
        mid = row["message_id"]
        if mid not in by_message:
            by_message[mid] = []
            order.append(mid)
        by_message[mid].append(row)
    messages = []
    sentences = []
    for mid in order:
        group = sorted(by_message[mid], key=lambda r: r["index_in_message"])
        messages.append(Message(
            id=mid,
            speaker=group[0]["speaker"],
            timestamp=parse_ts(group[0]["ts"]),
            text=" ".join(r["text"] for r in group),
            dialogue_id=dialogue_id,
        ))
        for r in group:
            sentences.append(Sentence(
                id=r["sentence_id"],
                message_id=mid,
                index_in_message=r["index_in_message"],
                index_in_dialogue=len(sentences),
                text=r["text"],
                is_code_block=bool(r.get("is_code_block")),
                gold_label=r.get("gold_label"),
                predicted_label=r.get("predicted_label"),
            ))
    return Dialogue(dialogue_id=dialogue_id, messages=tuple(messages),
                    sentences=tuple(sentences))


# --------------------------------------------------------------------------
# annotations


def _fold_gold(dialogue: Dialogue, records: list[AnnotationRecord],
               sources=("human", "corrected")) -> dict[str, AnnotationRecord]:
    """Effective record per sentence id under class-then-recency precedence."""
    rank = {s: i + 1 for i, s in enumerate(sources)}
    best: dict[str, tuple[int, float, int, AnnotationRecord]] = {}

    def consider(sid: str, rec: AnnotationRecord, order: int):
        key = (rank[rec.source], rec.created_at, order)
        if sid not in best or key >= best[sid][:3]:
            best[sid] = (*key, rec)

    for order, rec in enumerate(records):
        if rec.source not in rank:
            continue
        if rec.sentence_id.startswith("message:"):
            mid = rec.sentence_id[len("message:"):]
            for sent in dialogue.sentences_of(mid):
                consider(sent.id, rec, order)
        else:
            consider(rec.sentence_id, rec, order)
    return {sid: entry[3] for sid, entry in best.items()}


def attach_annotations(dialogue: Dialogue,
                       records: list[AnnotationRecord]) -> Dialogue:
    """Return a new dialogue whose sentences carry effective gold labels.

    Block records (sentence_id = ``message:<id>``) propagate to every
    sentence of the message; corrected records beat human ones, and within a
    source class the latest record wins.
    """
    dangling = []
    for rec in records:
        if rec.sentence_id.startswith("message:"):
            if not dialogue.has_message(rec.sentence_id[len("message:"):]):
                dangling.append(rec.sentence_id)
        elif not dialogue.has_sentence(rec.sentence_id):
            dangling.append(rec.sentence_id)
        if rec.char_start is not None:
            target = rec.sentence_id
            if not target.startswith("message:") and dialogue.has_sentence(target):
                length = len(dialogue.sentence(target).text)
                if not (0 <= rec.char_start < rec.char_end <= length):
                    raise AnnotationError(
                        f"bad span [{rec.char_start}, {rec.char_end}) on "
                        f"{target!r} (text length {length})"
                    )
    if dangling:
        raise AnnotationError(
            "annotation records reference unknown targets: "
            + ", ".join(sorted(set(dangling)))
        )
    effective = _fold_gold(dialogue, records)
    new_sentences = [
        replace(s, gold_label=effective[s.id].label) if s.id in effective else s
        for s in dialogue.sentences
    ]
    return dialogue.with_sentences(new_sentences)


def read_annotations(text: str) -> list[AnnotationRecord]:
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(AnnotationRecord.from_json(json.loads(line)))
        except (json.JSONDecodeError, KeyError) as exc:
            raise AnnotationError(f"line {lineno}: bad annotation record ({exc})")
    return records


def write_annotations(records: list[AnnotationRecord]) -> str:
    return "".join(json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in records)


# --------------------------------------------------------------------------
# corpus splits


@dataclass(frozen=True)
class CorpusSplit:
    train: tuple[str, ...]
    dev: tuple[str, ...]
    test: tuple[str, ...]
    ratios: tuple[float, float, float]

    def partition_of(self, window_id: str) -> str:
        if window_id in set(self.dev):
            return "dev"
        if window_id in set(self.test):
            return "test"
        return "train"


def split_corpus(window_ids: list[str], ratios=(0.8, 0.05, 0.15),
                 seed: int = 0) -> CorpusSplit:
    """Deterministic train/dev/test split over an ordered window list.

    dev is one contiguous run and test is two contiguous runs; run placement
    is drawn from the seed, and actual sizes land within one window of the
    requested ratios.
    """
    import random

    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ChatactError(f"ratios must sum to 1, got {sum(ratios)}")
    if any(r < 0 for r in ratios):
        raise ChatactError("ratios must be non-negative")
    n = len(window_ids)
    if n < 4:
        raise ChatactError(f"need at least 4 windows to split, got {n}")
    n_dev = round(n * ratios[1])
    n_test = round(n * ratios[2])
    if n_dev + n_test > n:
        n_test = n - n_dev
    t1 = n_test // 2
    t2 = n_test - t1
    rng = random.Random(seed)
    runs = [("test", t1), ("dev", n_dev), ("test", t2)]
    rng.shuffle(runs)
    n_train = n - n_dev - n_test
    # distribute train windows into the 4 gaps around the runs; keep the
    # runs separated by at least one train window when possible
    if n_train >= 3:
        inner = [1, 1]
    elif n_train > 0:
        inner = [1, 0]
    else:
        inner = [0, 0]
    spare = n_train - sum(inner)
    cuts = sorted(rng.randint(0, spare) for _ in range(3))
    gaps = [cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], spare - cuts[2]]
    sizes = [gaps[0], runs[0][1], inner[0] + gaps[1], runs[1][1],
             inner[1] + gaps[2], runs[2][1], gaps[3]]
    kinds = ["train", runs[0][0], "train", runs[1][0], "train", runs[2][0], "train"]
    train: list[str] = []
    dev: list[str] = []
    test: list[str] = []
    pos = 0
    for kind, size in zip(kinds, sizes):
        chunk = window_ids[pos:pos + size]
        pos += size
        {"train": train, "dev": dev, "test": test}[kind].extend(chunk)
    assert pos == n
    return CorpusSplit(
        train=tuple(train), dev=tuple(dev), test=tuple(test),
        ratios=tuple(float(r) for r in ratios),
    )


# --------------------------------------------------------------------------
# corpus statistics


def corpus_stats(dialogue: Dialogue, taxonomy, split: CorpusSplit | None = None,
                 windows=None) -> dict:
    """Per-partition proportions of reduced-set-collapsed gold labels.

    Unlabeled sentences are counted separately and excluded from the
    proportion denominator.
    """
    partitions: dict[str, list[Sentence]] = {}
    if split is None or windows is None:
        partitions["all"] = list(dialogue.sentences)
    else:
        by_id = {w.id: w for w in windows}
        for part_name, ids in (("train", split.train), ("dev", split.dev),
                               ("test", split.test)):
            sents = []
            for wid in ids:
                for sid in by_id[wid].sentence_ids:
                    sents.append(dialogue.sentence(sid))
            partitions[part_name] = sents
    out: dict = {"partitions": {}, "unlabeled": {}}
    for name, sents in partitions.items():
        counts: dict[str, int] = {}
        unlabeled = 0
        for s in sents:
            if s.gold_label is None:
                unlabeled += 1
                continue
            collapsed = taxonomy.collapse(s.gold_label)
            counts[collapsed] = counts.get(collapsed, 0) + 1
        total = sum(counts.values())
        out["partitions"][name] = {
            lab: counts[lab] / total for lab in sorted(counts)
        } if total else {}
        out["unlabeled"][name] = unlabeled
    return out
