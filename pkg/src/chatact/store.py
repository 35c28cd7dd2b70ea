"""File-backed project store: content-addressed blobs plus append-only
annotation logs.

Layout under the root directory:

    config.json              active taxonomy hash
    taxonomies/<hash>.toml
    dialogues/<hash>.jsonl   native transcripts, addressed by content hash
    models/<hash>.bin
    annotations/<hash>.jsonl append-only log per dialogue

Current annotation state is always a fold over the log; nothing in the log
is ever rewritten. Writes to one dialogue's log serialize on a per-dialogue
lock; reads work on immutable parsed snapshots.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import replace
from pathlib import Path

from .corpus import (
    AnnotationRecord,
    Dialogue,
    _fold_gold,
    parse_transcript,
    read_annotations,
)
from .errors import StoreError
from .labeler.model_io import load_model
from .taxonomy import Taxonomy, load_taxonomy, serialize_taxonomy


def content_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


class ProjectStore:
    def __init__(self, root):
        self.root = Path(root)
        for sub in ("taxonomies", "dialogues", "models", "annotations"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._dialogue_cache: dict[str, Dialogue] = {}
        self._model_cache: dict[str, object] = {}

    # -- config ------------------------------------------------------------

    def _config(self) -> dict:
        path = self.root / "config.json"
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        return {}

    def _write_config(self, cfg: dict) -> None:
        (self.root / "config.json").write_text(
            json.dumps(cfg, indent=2), encoding="utf-8"
        )

    # -- taxonomy ----------------------------------------------------------

    def put_taxonomy(self, taxonomy: Taxonomy, make_default: bool = True) -> str:
        text = serialize_taxonomy(taxonomy)
        digest = taxonomy.content_hash()
        (self.root / "taxonomies" / f"{digest}.toml").write_text(
            text, encoding="utf-8"
        )
        if make_default:
            cfg = self._config()
            cfg["taxonomy_hash"] = digest
            self._write_config(cfg)
        return digest

    def taxonomy_hash(self) -> str:
        digest = self._config().get("taxonomy_hash")
        if not digest:
            raise StoreError("store has no active taxonomy")
        return digest

    def get_taxonomy(self, digest: str | None = None) -> Taxonomy:
        digest = digest or self.taxonomy_hash()
        path = self.root / "taxonomies" / f"{digest}.toml"
        if not path.exists():
            raise StoreError(f"unknown taxonomy {digest!r}")
        return load_taxonomy(path.read_bytes())

    # -- dialogues ---------------------------------------------------------

    def put_dialogue(self, transcript_text: str) -> str:
        data = transcript_text.encode("utf-8")
        parse_transcript(transcript_text)  # validate before storing
        digest = content_hash(data)
        (self.root / "dialogues" / f"{digest}.jsonl").write_bytes(data)
        self._dialogue_cache.pop(digest, None)
        return digest

    def list_dialogues(self) -> list[dict]:
        out = []
        for path in sorted((self.root / "dialogues").glob("*.jsonl")):
            digest = path.stem
            dlg = self.get_dialogue(digest)
            out.append({
                "store_id": digest,
                "dialogue_id": dlg.dialogue_id,
                "n_messages": len(dlg.messages),
                "n_sentences": len(dlg.sentences),
            })
        return out

    def resolve_dialogue(self, ref: str) -> str:
        """Accept either a store id or a unique dialogue_id."""
        if (self.root / "dialogues" / f"{ref}.jsonl").exists():
            return ref
        matches = [d["store_id"] for d in self.list_dialogues()
                   if d["dialogue_id"] == ref]
        if len(matches) == 1:
            return matches[0]
        raise StoreError(f"unknown dialogue {ref!r}")

    def get_dialogue(self, store_id: str) -> Dialogue:
        if store_id not in self._dialogue_cache:
            path = self.root / "dialogues" / f"{store_id}.jsonl"
            if not path.exists():
                raise StoreError(f"unknown dialogue {store_id!r}")
            self._dialogue_cache[store_id] = parse_transcript(
                path.read_text(encoding="utf-8")
            )
        return self._dialogue_cache[store_id]

    # -- models ------------------------------------------------------------

    def put_model(self, model_bytes: bytes) -> str:
        digest = content_hash(model_bytes)
        path = self.root / "models" / f"{digest}.bin"
        path.write_bytes(model_bytes)
        model = load_model(path)  # validate + check taxonomy reference
        if not (self.root / "taxonomies" / f"{model.taxonomy_hash}.toml").exists():
            path.unlink()
            raise StoreError(
                f"model references taxonomy {model.taxonomy_hash!r}, "
                "which is not in the store"
            )
        self._model_cache.pop(digest, None)
        return digest

    def get_model(self, digest: str):
        if digest not in self._model_cache:
            path = self.root / "models" / f"{digest}.bin"
            if not path.exists():
                raise StoreError(f"unknown model {digest!r}")
            self._model_cache[digest] = load_model(path)
        return self._model_cache[digest]

    def list_models(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "models").glob("*.bin"))

    # -- annotation logs ---------------------------------------------------

    def _lock_for(self, store_id: str) -> threading.Lock:
        with self._locks_guard:
            if store_id not in self._locks:
                self._locks[store_id] = threading.Lock()
            return self._locks[store_id]

    def append_annotations(self, store_id: str,
                           records: list[AnnotationRecord]) -> int:
        self.get_dialogue(store_id)  # raises on unknown id
        path = self.root / "annotations" / f"{store_id}.jsonl"
        payload = "".join(
            json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in records
        )
        with self._lock_for(store_id):
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(payload)
                fh.flush()
        return len(records)

    def read_annotation_log(self, store_id: str) -> list[AnnotationRecord]:
        path = self.root / "annotations" / f"{store_id}.jsonl"
        if not path.exists():
            return []
        return read_annotations(path.read_text(encoding="utf-8"))

    def effective_view(self, store_id: str) -> Dialogue:
        """Dialogue with labels folded from the log.

        gold_label holds the corrected > human fold; predicted_label holds
        the latest model output. Replaying the log always reproduces the
        same view.
        """
        dialogue = self.get_dialogue(store_id)
        records = self.read_annotation_log(store_id)
        gold = _fold_gold(dialogue, records, sources=("human", "corrected"))
        pred = _fold_gold(dialogue, records, sources=("model",))
        new_sentences = []
        for s in dialogue.sentences:
            g = gold.get(s.id)
            p = pred.get(s.id)
            new_sentences.append(replace(
                s,
                gold_label=g.label if g else None,
                predicted_label=p.label if p else None,
            ))
        return dialogue.with_sentences(new_sentences)
