"""Team-collaboration measures over a labeled sentence stream.

Every number in the report is backed by an explicit evidence list (sentence
ids or statement-response pairs) from which it can be recomputed exactly;
nothing is aggregated into an opaque score. Rates whose denominator is
empty are marked undefined rather than defaulted.

Metrics operate on collapsed (reduced-set) labels so model output and gold
annotations are directly comparable. A sentence's effective label is its
gold label when present, else its predicted label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .corpus import Dialogue, Sentence, format_ts

INITIATOR_KINDS = ("query", "request", "assign", "propose")

DEFAULT_RESPONSE_SETS = {
    "query": ("Inform-InResponse", "Inform", "Acknowledge", "Reject"),
    "request": ("Acknowledge", "Reject"),
    "assign": ("Acknowledge", "Reject"),
    "propose": ("Acknowledge", "Reject", "Query"),
}

# Grouping of metrics under positive team dynamics. This mapping is a
# constructed reading aid, not a measured quantity; reports say so.
DEFAULT_PRINCIPLES = {
    "communication": ("loop_closure_rate", "clarification_rate"),
    "coordination": ("assignment_uptake_rate",),
    "focus_on_goals": ("median_response_latency",),
    "positive_collaborative_attitude": ("comradery_rate", "blame_rate"),
    "supportiveness": ("appreciation_rate",),
    "adaptability": ("frustration_rate",),
}

# positive/negative metrics are universally directional; clue metrics need
# a human to interpret (high clarification may be hard material, not poor
# communication).
DEFAULT_POLARITY = {
    "loop_closure_rate": "positive",
    "clarification_rate": "clue",
    "assignment_uptake_rate": "positive",
    "median_response_latency": "clue",
    "comradery_rate": "positive",
    "appreciation_rate": "positive",
    "frustration_rate": "clue",
    "blame_rate": "negative",
}


@dataclass(frozen=True)
class MetricsConfig:
    horizon_sentences: int = 10
    horizon_time: float = 86400.0  # 24h
    response_sets: dict = field(default_factory=lambda: dict(DEFAULT_RESPONSE_SETS))
    principles: dict = field(default_factory=lambda: dict(DEFAULT_PRINCIPLES))
    polarity: dict = field(default_factory=lambda: dict(DEFAULT_POLARITY))


@dataclass(frozen=True)
class ResponsePair:
    initiator_sentence_id: str
    initiator_kind: str  # query | request | assign | propose
    initiator_speaker: str
    responder_sentence_id: str | None = None
    responder_speaker: str | None = None
    response_kind: str | None = None  # collapsed label of the response
    latency: float | None = None
    closed: bool = False

    def to_json(self) -> dict:
        return {
            "initiator_sentence_id": self.initiator_sentence_id,
            "initiator_kind": self.initiator_kind,
            "initiator_speaker": self.initiator_speaker,
            "responder_sentence_id": self.responder_sentence_id,
            "responder_speaker": self.responder_speaker,
            "response_kind": self.response_kind,
            "latency": self.latency,
            "closed": self.closed,
        }


def effective_label(sentence: Sentence) -> str | None:
    return sentence.gold_label if sentence.gold_label is not None \
        else sentence.predicted_label


def _labeled(dialogue: Dialogue):
    for s in dialogue.sentences:
        lab = effective_label(s)
        if lab is not None:
            yield s, lab


# --------------------------------------------------------------------------
# measures


def frequency_measures(dialogue: Dialogue, taxonomy) -> dict:
    """Counts and per-100-sentence rates of collapsed labels, team-wide and
    per speaker. Unlabeled sentences are tallied separately."""
    team: dict[str, list[str]] = {}
    speakers: dict[str, dict[str, list[str]]] = {}
    labeled_ids: list[str] = []
    speaker_labeled: dict[str, list[str]] = {}
    unlabeled = 0
    for s in dialogue.sentences:
        lab = effective_label(s)
        spk = dialogue.speaker_of(s)
        if lab is None:
            unlabeled += 1
            continue
        collapsed = taxonomy.collapse(lab)
        team.setdefault(collapsed, []).append(s.id)
        speakers.setdefault(spk, {}).setdefault(collapsed, []).append(s.id)
        labeled_ids.append(s.id)
        speaker_labeled.setdefault(spk, []).append(s.id)

    def table(counts: dict[str, list[str]], denom: int) -> dict:
        return {
            lab: {
                "count": len(ids),
                "rate_per_100": 100.0 * len(ids) / denom if denom else None,
                "sentence_ids": list(ids),
            }
            for lab, ids in sorted(counts.items())
        }

    return {
        "team": table(team, len(labeled_ids)),
        "speakers": {
            spk: table(speakers[spk], len(speaker_labeled[spk]))
            for spk in sorted(speakers)
        },
        "labeled_sentence_ids": labeled_ids,
        "unlabeled_count": unlabeled,
    }


def detect_pairs(dialogue: Dialogue, taxonomy,
                 config: MetricsConfig = MetricsConfig()) -> list[ResponsePair]:
    """Statement-response pairs by greedy earliest-first matching.

    Each initiator (a sentence whose collapsed label roots at Query, Request,
    Assign, or Propose) scans forward within the sentence and time horizons
    for the first unconsumed sentence by a different speaker whose collapsed
    label matches the initiator's response set; matched responders cannot
    close a second pair.
    """
    sentences = list(dialogue.sentences)
    collapsed: list[str | None] = []
    for s in sentences:
        lab = effective_label(s)
        collapsed.append(taxonomy.collapse(lab) if lab is not None else None)

    def matches(response_label: str, allowed) -> bool:
        chain = set(taxonomy.ancestors(response_label))
        return any(a in chain for a in allowed)

    consumed: set[int] = set()
    pairs: list[ResponsePair] = []
    for i, s in enumerate(sentences):
        if collapsed[i] is None:
            continue
        kind = taxonomy.top_level(collapsed[i]).lower()
        if kind not in INITIATOR_KINDS:
            continue
        allowed = config.response_sets.get(kind, ())
        t0 = dialogue.timestamp_of(s)
        spk = dialogue.speaker_of(s)
        match_idx = None
        for j in range(i + 1, min(i + config.horizon_sentences + 1,
                                  len(sentences))):
            if dialogue.timestamp_of(sentences[j]) - t0 > config.horizon_time:
                break
            if j in consumed or collapsed[j] is None:
                continue
            if dialogue.speaker_of(sentences[j]) == spk:
                continue
            if matches(collapsed[j], allowed):
                match_idx = j
                break
        if match_idx is None:
            pairs.append(ResponsePair(
                initiator_sentence_id=s.id, initiator_kind=kind,
                initiator_speaker=spk, closed=False,
            ))
        else:
            r = sentences[match_idx]
            consumed.add(match_idx)
            pairs.append(ResponsePair(
                initiator_sentence_id=s.id, initiator_kind=kind,
                initiator_speaker=spk,
                responder_sentence_id=r.id,
                responder_speaker=dialogue.speaker_of(r),
                response_kind=collapsed[match_idx],
                latency=dialogue.timestamp_of(r) - t0,
                closed=True,
            ))
    return pairs


def loop_closure_rate(pairs: list[ResponsePair]) -> float | None:
    """Fraction of query/request initiators that got a response; None
    (undefined) when there were no query/request initiators."""
    relevant = [p for p in pairs if p.initiator_kind in ("query", "request")]
    if not relevant:
        return None
    return sum(p.closed for p in relevant) / len(relevant)


def clarification_rate(dialogue: Dialogue, taxonomy) -> float | None:
    """Clarification requests as a fraction of all Query-rooted sentences."""
    queries = 0
    clarifications = 0
    for _, lab in _labeled(dialogue):
        collapsed = taxonomy.collapse(lab)
        if taxonomy.top_level(collapsed) == "Query":
            queries += 1
            if collapsed == "Query-For-Clarification":
                clarifications += 1
    if queries == 0:
        return None
    return clarifications / queries


def assignment_uptake(pairs: list[ResponsePair], taxonomy) -> dict:
    """How Assign initiators were answered: acceptance rate, with declines
    (Reject-rooted responses) reported separately."""
    assigns = [p for p in pairs if p.initiator_kind == "assign"]
    accepted = [p for p in assigns if p.closed
                and taxonomy.top_level(p.response_kind) == "Acknowledge"]
    declined = [p for p in assigns if p.closed
                and taxonomy.top_level(p.response_kind) == "Reject"]
    return {
        "rate": len(accepted) / len(assigns) if assigns else None,
        "n_assigns": len(assigns),
        "n_accepted": len(accepted),
        "n_declined": len(declined),
        "decline_rate": len(declined) / len(assigns) if assigns else None,
    }


def median_latency(pairs: list[ResponsePair]) -> float | None:
    lats = sorted(p.latency for p in pairs if p.closed)
    if not lats:
        return None
    mid = len(lats) // 2
    if len(lats) % 2:
        return float(lats[mid])
    return float((lats[mid - 1] + lats[mid]) / 2.0)


# --------------------------------------------------------------------------
# report


SOCIAL_RATE_LABELS = {
    "comradery_rate": "Social-Comradery",
    "appreciation_rate": "Social-Appreciation",
    "frustration_rate": "Social-Frustration",
    "blame_rate": "Social-Blame-Person",
}


@dataclass
class MetricsReport:
    scope: str
    window_of_analysis: dict
    metrics: dict
    label_frequencies: dict
    pairs: list[ResponsePair]
    principles: dict
    flags: list[str]
    label_sources: dict
    unlabeled_count: int

    def to_json(self) -> dict:
        return {
            "scope": self.scope,
            "window_of_analysis": self.window_of_analysis,
            "metrics": self.metrics,
            "label_frequencies": self.label_frequencies,
            "pairs": [p.to_json() for p in self.pairs],
            "principles": self.principles,
            "principles_note": "constructed grouping, configurable",
            "flags": self.flags,
            "label_sources": self.label_sources,
            "unlabeled_count": self.unlabeled_count,
        }


def _metric(value, numerator_ids, denominator_ids, polarity, scale=1.0):
    return {
        "value": value,
        "undefined": value is None,
        "numerator": len(numerator_ids),
        "denominator": len(denominator_ids),
        "scale": scale,
        "polarity": polarity,
        "evidence": {
            "numerator_ids": list(numerator_ids),
            "denominator_ids": list(denominator_ids),
        },
    }


def build_report(dialogue: Dialogue, taxonomy,
                 config: MetricsConfig = MetricsConfig()) -> MetricsReport:
    """Compose every measure with its evidence over the labeled dialogue."""
    freqs = frequency_measures(dialogue, taxonomy)
    pairs = detect_pairs(dialogue, taxonomy, config)
    labeled_ids = freqs["labeled_sentence_ids"]
    polarity = config.polarity
    metrics: dict[str, dict] = {}

    lc_pairs = [p for p in pairs if p.initiator_kind in ("query", "request")]
    closed_lc = [p for p in lc_pairs if p.closed]
    metrics["loop_closure_rate"] = _metric(
        loop_closure_rate(pairs),
        [p.initiator_sentence_id for p in closed_lc],
        [p.initiator_sentence_id for p in lc_pairs],
        polarity.get("loop_closure_rate", "clue"),
    )
    metrics["loop_closure_rate"]["evidence"]["pairs"] = [
        p.to_json() for p in lc_pairs
    ]

    query_ids = []
    clar_ids = []
    for s, lab in _labeled(dialogue):
        collapsed = taxonomy.collapse(lab)
        if taxonomy.top_level(collapsed) == "Query":
            query_ids.append(s.id)
            if collapsed == "Query-For-Clarification":
                clar_ids.append(s.id)
    metrics["clarification_rate"] = _metric(
        clarification_rate(dialogue, taxonomy), clar_ids, query_ids,
        polarity.get("clarification_rate", "clue"),
    )

    uptake = assignment_uptake(pairs, taxonomy)
    assigns = [p for p in pairs if p.initiator_kind == "assign"]
    accepted = [p for p in assigns if p.closed
                and taxonomy.top_level(p.response_kind) == "Acknowledge"]
    metrics["assignment_uptake_rate"] = _metric(
        uptake["rate"],
        [p.initiator_sentence_id for p in accepted],
        [p.initiator_sentence_id for p in assigns],
        polarity.get("assignment_uptake_rate", "positive"),
    )
    metrics["assignment_uptake_rate"]["declines"] = uptake["n_declined"]
    metrics["assignment_uptake_rate"]["decline_rate"] = uptake["decline_rate"]
    metrics["assignment_uptake_rate"]["evidence"]["pairs"] = [
        p.to_json() for p in assigns
    ]

    for metric_name, label in SOCIAL_RATE_LABELS.items():
        ids = freqs["team"].get(label, {}).get("sentence_ids", [])
        value = 100.0 * len(ids) / len(labeled_ids) if labeled_ids else None
        metrics[metric_name] = _metric(
            value, ids, labeled_ids, polarity.get(metric_name, "clue"),
            scale=100.0,
        )

    closed = [p for p in pairs if p.closed]
    metrics["median_response_latency"] = {
        "value": median_latency(pairs),
        "undefined": median_latency(pairs) is None,
        "polarity": polarity.get("median_response_latency", "clue"),
        "evidence": {"pairs": [p.to_json() for p in closed]},
    }

    flags = []
    if labeled_ids and not any(
        freqs["team"].get(lab, {}).get("count", 0)
        for lab in ("Social", *SOCIAL_RATE_LABELS.values())
    ):
        flags.append("low-social-signal")
    if not labeled_ids:
        flags.append("no-labeled-sentences")

    sources = {"gold": 0, "predicted": 0}
    for s in dialogue.sentences:
        if s.gold_label is not None:
            sources["gold"] += 1
        elif s.predicted_label is not None:
            sources["predicted"] += 1

    if dialogue.messages:
        window = {"start": format_ts(dialogue.messages[0].timestamp),
                  "end": format_ts(dialogue.messages[-1].timestamp)}
    else:
        window = {"start": None, "end": None}

    return MetricsReport(
        scope="team",
        window_of_analysis=window,
        metrics=metrics,
        label_frequencies={"team": freqs["team"], "speakers": freqs["speakers"]},
        pairs=pairs,
        principles={k: list(v) for k, v in config.principles.items()},
        flags=flags,
        label_sources=sources,
        unlabeled_count=freqs["unlabeled_count"],
    )


def verify_report(report: MetricsReport) -> list[str]:
    """Recompute every rate from its own evidence; returns discrepancies.

    An empty list means the report is self-consistent (the explainability
    contract: evidence lists alone reproduce each number exactly).
    """
    problems = []
    for name, m in report.metrics.items():
        if name == "median_response_latency":
            ev_pairs = m["evidence"]["pairs"]
            lats = sorted(p["latency"] for p in ev_pairs)
            if not lats:
                recomputed = None
            else:
                mid = len(lats) // 2
                recomputed = (float(lats[mid]) if len(lats) % 2
                              else (lats[mid - 1] + lats[mid]) / 2.0)
            if recomputed != m["value"]:
                problems.append(f"{name}: {m['value']} != {recomputed}")
            continue
        num = len(m["evidence"]["numerator_ids"])
        den = len(m["evidence"]["denominator_ids"])
        if num != m["numerator"] or den != m["denominator"]:
            problems.append(f"{name}: evidence counts drifted")
        recomputed = m["scale"] * num / den if den else None
        if recomputed != m["value"]:
            problems.append(f"{name}: {m['value']} != {recomputed}")
    # per-speaker counts must add up to the team counts
    team = {lab: row["count"]
            for lab, row in report.label_frequencies["team"].items()}
    summed: dict[str, int] = {}
    for rows in report.label_frequencies["speakers"].values():
        for lab, row in rows.items():
            summed[lab] = summed.get(lab, 0) + row["count"]
    if team != summed:
        problems.append("per-speaker counts do not sum to team counts")
    return problems


def render_report(report: MetricsReport) -> str:
    """Plain-text table for terminals."""
    lines = [
        f"scope: {report.scope}",
        f"window: {report.window_of_analysis['start']} .. "
        f"{report.window_of_analysis['end']}",
        "",
        f"{'metric':<28}{'value':>12}  polarity",
    ]
    for name, m in report.metrics.items():
        value = m["value"]
        if value is None:
            shown = "n/a"
        elif name == "median_response_latency":
            shown = f"{value:.0f}s"
        else:
            shown = f"{value:.3f}"
        lines.append(f"{name:<28}{shown:>12}  {m['polarity']}")
    if report.flags:
        lines.append("")
        lines.append("flags: " + ", ".join(report.flags))
    lines.append("")
    lines.append(f"{'label':<28}{'count':>8}{'per100':>10}")
    for lab, row in report.label_frequencies["team"].items():
        rate = row["rate_per_100"]
        lines.append(f"{lab:<28}{row['count']:>8}"
                     f"{rate if rate is None else f'{rate:10.1f}':>10}")
    return "\n".join(lines)


def report_to_json(report: MetricsReport, indent: int | None = 2) -> str:
    return json.dumps(report.to_json(), indent=indent, ensure_ascii=False)
