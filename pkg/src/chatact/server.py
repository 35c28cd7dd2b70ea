"""HTTP JSON service backing the review UI.

Stdlib-only server: one route table, JSON in and out, permissive CORS for
the UI origin. GETs never write; annotation POSTs append to the store's
per-dialogue log under its lock, so concurrent writers serialize without
lost records.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from . import __version__
from .corpus import AnnotationRecord, format_ts
from .errors import ChatactError, StoreError
from .metrics import MetricsConfig, build_report
from .segmentation import segment
from .store import ProjectStore

logger = logging.getLogger(__name__)

VALID_SOURCES = ("human", "corrected", "model")


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message
        super().__init__(message)


class ReviewService:
    """Route handlers, independent of the HTTP plumbing (unit-testable)."""

    def __init__(self, store: ProjectStore,
                 metrics_config: MetricsConfig | None = None):
        self.store = store
        self.metrics_config = metrics_config or MetricsConfig()

    # -- GET -----------------------------------------------------------

    def health(self) -> dict:
        return {"status": "ok", "version": __version__}

    def taxonomy(self) -> dict:
        tax = self.store.get_taxonomy()
        return {
            "hash": self.store.taxonomy_hash(),
            "labels": [
                {
                    "id": lab.id,
                    "parent": lab.parent,
                    "description": lab.description,
                    "example": lab.example,
                    "synthesized": lab.synthesized,
                }
                for lab in (tax.labels[k] for k in sorted(tax.labels))
            ],
            "reduced_set": tax.reduced_labels(),
            "priority_rules": [
                {"prefer": r.prefer, "over": r.over, "context": r.context,
                 "note": r.note}
                for r in tax.priority_rules
            ],
        }

    def dialogues(self) -> dict:
        return {"dialogues": self.store.list_dialogues()}

    def dialogue(self, ref: str, view: str = "sentences",
                 strategy: str = "static", line_limit: float = 10,
                 gap_limit: float = 3600.0) -> dict:
        store_id = self._resolve(ref)
        dlg = self.store.effective_view(store_id)
        messages = []
        for msg in dlg.messages:
            messages.append({
                "id": msg.id,
                "speaker": msg.speaker,
                "ts": format_ts(msg.timestamp),
                "text": msg.text,
                "sentences": [
                    {
                        "id": s.id,
                        "index_in_message": s.index_in_message,
                        "index_in_dialogue": s.index_in_dialogue,
                        "text": s.text,
                        "is_code_block": s.is_code_block,
                        "gold_label": s.gold_label,
                        "predicted_label": s.predicted_label,
                        "effective_label": s.gold_label or s.predicted_label,
                    }
                    for s in dlg.sentences_of(msg.id)
                ],
            })
        out = {
            "store_id": store_id,
            "dialogue_id": dlg.dialogue_id,
            "messages": messages,
        }
        if view == "windows":
            windows = segment(dlg, strategy, line_limit=line_limit,
                              gap_limit=gap_limit)
            out["windows"] = [w.to_json() for w in windows]
        elif view != "sentences":
            raise ApiError(400, f"unknown view {view!r}")
        return out

    def metrics(self, ref: str) -> dict:
        store_id = self._resolve(ref)
        dlg = self.store.effective_view(store_id)
        tax = self.store.get_taxonomy()
        return build_report(dlg, tax, self.metrics_config).to_json()

    # -- POST ----------------------------------------------------------

    def post_annotations(self, ref: str, body: dict) -> dict:
        store_id = self._resolve(ref)
        dlg = self.store.get_dialogue(store_id)
        tax = self.store.get_taxonomy()
        raw_records = body.get("records")
        if not isinstance(raw_records, list) or not raw_records:
            raise ApiError(400, "body must carry a non-empty 'records' list")
        records = []
        now = time.time()
        for obj in raw_records:
            label = obj.get("label")
            if label not in tax:
                raise ApiError(400, f"invalid label {label!r}")
            sid = obj.get("sentence_id", "")
            if sid.startswith("message:"):
                if not dlg.has_message(sid[len("message:"):]):
                    raise ApiError(400, f"unknown message target {sid!r}")
            elif not dlg.has_sentence(sid):
                raise ApiError(400, f"unknown sentence id {sid!r}")
            source = obj.get("source", "human")
            if source not in VALID_SOURCES:
                raise ApiError(400, f"invalid source {source!r}")
            char_start = obj.get("char_start")
            char_end = obj.get("char_end")
            if char_start is not None:
                if sid.startswith("message:"):
                    raise ApiError(400, "span offsets are sentence-scoped")
                length = len(dlg.sentence(sid).text)
                if not (isinstance(char_start, int) and isinstance(char_end, int)
                        and 0 <= char_start < char_end <= length):
                    raise ApiError(
                        400, f"invalid span [{char_start}, {char_end}) for {sid!r}"
                    )
            records.append(AnnotationRecord(
                sentence_id=sid,
                label=label,
                annotator=obj.get("annotator", "ui"),
                created_at=now,
                source=source,
                char_start=char_start,
                char_end=char_end,
            ))
        appended = self.store.append_annotations(store_id, records)
        return {"appended": appended}

    def post_label(self, ref: str, model_hash: str) -> dict:
        from .labeler import label_dialogue

        store_id = self._resolve(ref)
        if not model_hash:
            raise ApiError(400, "missing model hash")
        try:
            model = self.store.get_model(model_hash)
        except StoreError as exc:
            raise ApiError(404, str(exc))
        if model.taxonomy_hash != self.store.taxonomy_hash():
            raise ApiError(
                409,
                f"model taxonomy {model.taxonomy_hash!r} does not match "
                f"store taxonomy {self.store.taxonomy_hash()!r}",
            )
        dlg = self.store.get_dialogue(store_id)
        seg = model.segmentation or {"strategy": "static", "line_limit": 10}
        windows = segment(
            dlg, seg.get("strategy", "static"),
            line_limit=seg.get("line_limit", 10) or 10,
            gap_limit=seg.get("gap_limit", 3600.0) or 3600.0,
            speaker_limit=int(seg.get("speaker_limit", 2) or 2),
        )
        labeled = label_dialogue(model, dlg, windows)
        now = time.time()
        records = [
            AnnotationRecord(
                sentence_id=s.id,
                label=s.predicted_label,
                annotator=f"model:{model_hash}",
                created_at=now,
                source="model",
            )
            for s in labeled.sentences if s.predicted_label is not None
        ]
        appended = self.store.append_annotations(store_id, records)
        return {"labeled": appended, "model": model_hash}

    def _resolve(self, ref: str) -> str:
        try:
            return self.store.resolve_dialogue(ref)
        except StoreError as exc:
            raise ApiError(404, str(exc))


_ROUTES = [
    ("GET", re.compile(r"^/health$"), "health"),
    ("GET", re.compile(r"^/taxonomy$"), "taxonomy"),
    ("GET", re.compile(r"^/dialogues$"), "dialogues"),
    ("GET", re.compile(r"^/dialogues/(?P<ref>[^/]+)$"), "dialogue"),
    ("GET", re.compile(r"^/dialogues/(?P<ref>[^/]+)/metrics$"), "metrics"),
    ("POST", re.compile(r"^/dialogues/(?P<ref>[^/]+)/annotations$"),
     "post_annotations"),
    ("POST", re.compile(r"^/dialogues/(?P<ref>[^/]+)/label$"), "post_label"),
]


def make_handler(service: ReviewService, ui_origin: str = "*"):
    class Handler(BaseHTTPRequestHandler):
        server_version = f"chatact/{__version__}"

        def log_message(self, fmt, *args):
            logger.debug("%s " + fmt, self.address_string(), *args)

        def _send(self, status: int, payload: dict):
            data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", ui_origin)
            self.end_headers()
            self.wfile.write(data)

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", ui_origin)
            self.send_header("Access-Control-Allow-Methods",
                             "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def _dispatch(self, method: str):
            parsed = urlparse(self.path)
            query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
            for verb, pattern, name in _ROUTES:
                if verb != method:
                    continue
                m = pattern.match(parsed.path)
                if not m:
                    continue
                try:
                    result = self._call(name, m.groupdict(), query)
                except ApiError as exc:
                    self._send(exc.status, {"error": exc.message})
                except ChatactError as exc:
                    self._send(400, {"error": str(exc)})
                except Exception:  # noqa: BLE001 - report, never crash a worker
                    logger.exception("unhandled error on %s %s", method,
                                     self.path)
                    self._send(500, {"error": "internal error"})
                else:
                    self._send(200, result)
                return
            self._send(404, {"error": f"no route for {method} {parsed.path}"})

        def _call(self, name: str, params: dict, query: dict):
            if name == "dialogue":
                return service.dialogue(
                    params["ref"],
                    view=query.get("view", "sentences"),
                    strategy=query.get("strategy", "static"),
                    line_limit=float(query.get("line_limit", 10)),
                    gap_limit=float(query.get("gap_limit", 3600.0)),
                )
            if name == "post_annotations":
                length = int(self.headers.get("Content-Length") or 0)
                try:
                    body = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    raise ApiError(400, "request body is not valid JSON")
                return service.post_annotations(params["ref"], body)
            if name == "post_label":
                return service.post_label(params["ref"],
                                          query.get("model", ""))
            handler = getattr(service, name)
            return handler(**params)

        def do_GET(self):
            self._dispatch("GET")

        def do_POST(self):
            self._dispatch("POST")

    return Handler


def serve(store: ProjectStore, bind: str = "127.0.0.1:8057",
          ui_origin: str = "*") -> ThreadingHTTPServer:
    """Create the HTTP server (caller decides whether to block on it)."""
    host, _, port = bind.rpartition(":")
    service = ReviewService(store)
    server = ThreadingHTTPServer((host or "127.0.0.1", int(port)),
                                 make_handler(service, ui_origin))
    return server


def serve_forever(store: ProjectStore, bind: str = "127.0.0.1:8057",
                  ui_origin: str = "*") -> None:
    server = serve(store, bind, ui_origin)
    host, port = server.server_address[:2]
    logger.info("serving on http://%s:%s", host, port)
    print(f"chatact review service on http://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def start_in_thread(store: ProjectStore, bind: str = "127.0.0.1:0",
                    ui_origin: str = "*"):
    """Run the service on a daemon thread; returns (server, base_url)."""
    server = serve(store, bind, ui_origin)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    return server, f"http://{host}:{port}"
