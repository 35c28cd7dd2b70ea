"""Partition a dialogue's sentence stream into context windows.

Windows are the unit the sequence model decodes jointly. All strategies
accumulate whole messages (a message is never split across windows) and
together the windows partition the dialogue exactly.

Strategies:
  message  one window per chat message
  static   close a window once it holds at least line_limit sentences
  time     static, plus a forced break when the gap between consecutive
           messages exceeds gap_limit
  speaker  close a window when a message would bring the number of distinct
           speakers above speaker_limit; the triggering message starts the
           next window
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .corpus import Dialogue, Message

DEFAULT_GAP_LIMIT = 3600.0  # one hour


@dataclass(frozen=True)
class Window:
    id: str
    dialogue_id: str
    sentence_ids: tuple[str, ...]
    strategy: str
    params: tuple[tuple[str, float], ...] = ()

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "dialogue_id": self.dialogue_id,
            "sentence_ids": list(self.sentence_ids),
            "strategy": self.strategy,
            "params": dict(self.params),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Window":
        return cls(
            id=obj["id"],
            dialogue_id=obj["dialogue_id"],
            sentence_ids=tuple(obj["sentence_ids"]),
            strategy=obj["strategy"],
            params=tuple(sorted(obj.get("params", {}).items())),
        )


def _emit(dialogue: Dialogue, groups: list[list[Message]], strategy: str,
          **params) -> list[Window]:
    windows = []
    clean_params = tuple(sorted(
        (k, float(v)) for k, v in params.items() if v is not None
    ))
    for i, group in enumerate(groups):
        sids = [s.id for m in group for s in dialogue.sentences_of(m.id)]
        windows.append(Window(
            id=f"{dialogue.dialogue_id}:w{i:05d}",
            dialogue_id=dialogue.dialogue_id,
            sentence_ids=tuple(sids),
            strategy=strategy,
            params=clean_params,
        ))
    return windows


def segment_message(dialogue: Dialogue) -> list[Window]:
    """One window per message."""
    return _emit(dialogue, [[m] for m in dialogue.messages], "message")


def segment_static(dialogue: Dialogue, line_limit: float = 10) -> list[Window]:
    """Greedy accumulation of whole messages up to a sentence-count limit.

    A window closes after the message whose inclusion reaches line_limit, so
    the final message's sentences may overflow the limit.
    """
    if line_limit < 1:
        raise ValueError(f"line_limit must be >= 1, got {line_limit}")
    groups = _accumulate(dialogue, line_limit, gap_limit=math.inf)
    return _emit(dialogue, groups, "static", line_limit=_finite(line_limit))


def segment_time(dialogue: Dialogue, line_limit: float = 10,
                 gap_limit: float = DEFAULT_GAP_LIMIT) -> list[Window]:
    """Static segmentation plus a break at long silences between messages."""
    if line_limit < 1:
        raise ValueError(f"line_limit must be >= 1, got {line_limit}")
    if gap_limit <= 0:
        raise ValueError(f"gap_limit must be positive, got {gap_limit}")
    groups = _accumulate(dialogue, line_limit, gap_limit=gap_limit)
    return _emit(dialogue, groups, "time", line_limit=_finite(line_limit),
                 gap_limit=_finite(gap_limit))


def segment_speaker(dialogue: Dialogue, line_limit: float = 10,
                    speaker_limit: int = 2) -> list[Window]:
    """Restrict each window to at most speaker_limit distinct speakers.

    A message from a speaker beyond the limit closes the current window and
    opens a new one, resetting the speaker set to just that speaker.
    """
    if line_limit < 1:
        raise ValueError(f"line_limit must be >= 1, got {line_limit}")
    if speaker_limit < 1:
        raise ValueError(f"speaker_limit must be >= 1, got {speaker_limit}")
    groups: list[list[Message]] = []
    current: list[Message] = []
    speakers: set[str] = set()
    count = 0
    for msg in dialogue.messages:
        n_sent = len(dialogue.sentences_of(msg.id))
        if current and len(speakers | {msg.speaker}) > speaker_limit:
            groups.append(current)
            current, speakers, count = [], set(), 0
        current.append(msg)
        speakers.add(msg.speaker)
        count += n_sent
        if count >= line_limit:
            groups.append(current)
            current, speakers, count = [], set(), 0
    if current:
        groups.append(current)
    return _emit(dialogue, groups, "speaker", line_limit=_finite(line_limit),
                 speaker_limit=speaker_limit)


def _accumulate(dialogue: Dialogue, line_limit: float,
                gap_limit: float) -> list[list[Message]]:
    groups: list[list[Message]] = []
    current: list[Message] = []
    count = 0
    prev_ts: float | None = None
    for msg in dialogue.messages:
        if current and prev_ts is not None and msg.timestamp - prev_ts > gap_limit:
            groups.append(current)
            current, count = [], 0
        current.append(msg)
        count += len(dialogue.sentences_of(msg.id))
        prev_ts = msg.timestamp
        if count >= line_limit:
            groups.append(current)
            current, count = [], 0
    if current:
        groups.append(current)
    return groups


def _finite(value: float) -> float | None:
    return None if math.isinf(value) else float(value)


def segment(dialogue: Dialogue, strategy: str, line_limit: float = 10,
            gap_limit: float = DEFAULT_GAP_LIMIT,
            speaker_limit: int = 2) -> list[Window]:
    """Dispatch on strategy name; used by the CLI and the model container."""
    if strategy == "message":
        return segment_message(dialogue)
    if strategy == "static":
        return segment_static(dialogue, line_limit)
    if strategy == "time":
        return segment_time(dialogue, line_limit, gap_limit)
    if strategy == "speaker":
        return segment_speaker(dialogue, line_limit, speaker_limit)
    raise ValueError(f"unknown segmentation strategy: {strategy!r}")


def windows_to_jsonl(windows: list[Window]) -> str:
    return "".join(json.dumps(w.to_json(), ensure_ascii=False) + "\n"
                   for w in windows)


def windows_from_jsonl(text: str) -> list[Window]:
    return [Window.from_json(json.loads(line))
            for line in text.splitlines() if line.strip()]
