"""Versioned binary container for trained models, and emission-score import.

Layout: 8-byte magic, little-endian u32 format version, u32 header length,
UTF-8 JSON header (label set, taxonomy hash, feature and segmentation
config, array shapes), then the dense weight blocks as little-endian
64-bit floats in order: emissions (L x D), transitions (L x L), start (L),
end (L).
"""

from __future__ import annotations

import json
import struct

import numpy as np

from ..corpus import Dialogue
from ..errors import ModelError
from .crf import SequenceModel
from .features import FeatureConfig

MAGIC = b"CHATACTM"
FORMAT_VERSION = 1


def save_model(model: SequenceModel, path) -> None:
    model.validate()
    L = model.num_labels
    D = model.feature_config.dim
    header = {
        "label_set": list(model.label_set),
        "taxonomy_hash": model.taxonomy_hash,
        "l2": model.l2,
        "feature_config": model.feature_config.to_json(),
        "segmentation": model.segmentation,
        "shapes": {"L": L, "D": D},
    }
    header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for arr in (model.emission_weights, model.transitions,
                    model.start_scores, model.end_scores):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path) -> SequenceModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise ModelError("not a model file (bad magic)")
    version, header_len = struct.unpack_from("<II", blob, 8)
    if version != FORMAT_VERSION:
        raise ModelError(f"unsupported model format version {version}")
    try:
        header = json.loads(blob[16:16 + header_len].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelError(f"corrupt model header: {exc}")
    L = header["shapes"]["L"]
    D = header["shapes"]["D"]
    offset = 16 + header_len
    expected = offset + 8 * (L * D + L * L + L + L)
    if len(blob) != expected:
        raise ModelError(
            f"model file truncated: {len(blob)} bytes, expected {expected}"
        )

    def block(count, shape):
        nonlocal offset
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        return arr.reshape(shape).astype(np.float64)

    model = SequenceModel(
        label_set=tuple(header["label_set"]),
        emission_weights=block(L * D, (L, D)),
        transitions=block(L * L, (L, L)),
        start_scores=block(L, (L,)),
        end_scores=block(L, (L,)),
        l2=header["l2"],
        feature_config=FeatureConfig.from_json(header["feature_config"]),
        taxonomy_hash=header["taxonomy_hash"],
        segmentation=header.get("segmentation", {}),
    )
    model.validate()
    return model


def read_emissions(text: str, model: SequenceModel,
                   dialogue: Dialogue | None = None) -> dict[str, np.ndarray]:
    """Parse the JSON-lines emission import format.

    The first line is a header with the taxonomy hash and label order the
    scores were produced for; both must match the model. Remaining lines map
    sentence ids to score vectors that are added to the model's own
    emissions before scoring or training.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ModelError("empty emissions file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ModelError(f"bad emissions header: {exc.msg}")
    if header.get("taxonomy_hash") != model.taxonomy_hash:
        raise ModelError(
            "emissions taxonomy_hash "
            f"{header.get('taxonomy_hash')!r} does not match the model's "
            f"{model.taxonomy_hash!r}"
        )
    if tuple(header.get("label_set", ())) != model.label_set:
        raise ModelError("emissions label order does not match the model")
    table: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ModelError(f"line {lineno}: bad emissions record ({exc.msg})")
        sid = obj.get("sentence_id")
        scores = obj.get("scores")
        if sid is None or scores is None:
            raise ModelError(f"line {lineno}: emissions record needs "
                             "sentence_id and scores")
        if dialogue is not None and not dialogue.has_sentence(sid):
            raise ModelError(f"line {lineno}: unknown sentence id {sid!r}")
        if len(scores) != model.num_labels:
            raise ModelError(
                f"line {lineno}: expected {model.num_labels} scores, "
                f"got {len(scores)}"
            )
        table[sid] = np.asarray(scores, dtype=np.float64)
    return table


def write_emissions(table: dict[str, np.ndarray],
                    model: SequenceModel) -> str:
    header = {"taxonomy_hash": model.taxonomy_hash,
              "label_set": list(model.label_set)}
    lines = [json.dumps(header)]
    for sid in table:
        lines.append(json.dumps(
            {"sentence_id": sid, "scores": [float(x) for x in table[sid]]}
        ))
    return "\n".join(lines) + "\n"
