"""Hierarchical dialogue-act label set with priority rules and a reduced set.

Labels form a forest rooted at nine top-level acts. Every label id is the
dash-joined path of its ancestry, so ``Inform-Status-TaskOrIssue`` is a child
of ``Inform-Status`` which is a child of ``Inform``. The reduced set is the
subset of labels the sequence model actually predicts; every label collapses
onto its deepest reduced-set ancestor-or-self.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from importlib import resources

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import TaxonomyError

TOP_LEVEL_ACTS = (
    "Inform",
    "Query",
    "Request",
    "Assign",
    "Propose",
    "Acknowledge",
    "Reject",
    "Code",
    "Social",
)


@dataclass(frozen=True)
class ActLabel:
    id: str
    parent: str | None = None
    description: str = ""
    example: str | None = None
    synthesized: bool = False


@dataclass(frozen=True)
class PriorityRule:
    """Prefer one label over another when the context pattern matches."""

    prefer: str
    over: str
    context: str  # regex, searched case-insensitively in the context string
    note: str = ""


@dataclass(frozen=True)
class Taxonomy:
    labels: dict[str, ActLabel]
    reduced_set: frozenset[str]
    priority_rules: tuple[PriorityRule, ...] = ()
    _collapse_cache: dict[str, str] = field(
        default_factory=dict, repr=False, compare=False
    )

    def __contains__(self, label_id: str) -> bool:
        return label_id in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def roots(self) -> list[str]:
        return [lid for lid, lab in self.labels.items() if lab.parent is None]

    def ancestors(self, label_id: str) -> list[str]:
        """Ancestry chain from the top-level act down to the label itself."""
        if label_id not in self.labels:
            raise TaxonomyError(f"unknown label: {label_id!r}")
        chain = [label_id]
        cur = self.labels[label_id]
        while cur.parent is not None:
            chain.append(cur.parent)
            cur = self.labels[cur.parent]
        chain.reverse()
        return chain

    def top_level(self, label_id: str) -> str:
        return self.ancestors(label_id)[0]

    def collapse(self, label_id: str) -> str:
        """Deepest ancestor-or-self of the label that is in the reduced set."""
        cached = self._collapse_cache.get(label_id)
        if cached is not None:
            return cached
        for candidate in reversed(self.ancestors(label_id)):
            if candidate in self.reduced_set:
                self._collapse_cache[label_id] = candidate
                return candidate
        raise TaxonomyError(
            f"label {label_id!r} has no ancestor in the reduced set"
        )  # pragma: no cover - excluded by validation at load time

    def apply_priority(self, candidates: list[str], context: str = "") -> str:
        """Pick one label from candidates, honoring matching priority rules.

        If a rule's prefer/over pair both appear among the candidates and its
        context pattern matches, the preferred label wins; otherwise the first
        candidate is returned unchanged.
        """
        if not candidates:
            raise TaxonomyError("apply_priority needs at least one candidate")
        for cand in candidates:
            if cand not in self.labels:
                raise TaxonomyError(f"unknown label: {cand!r}")
        cset = set(candidates)
        for rule in self.priority_rules:
            if rule.prefer in cset and rule.over in cset:
                if re.search(rule.context, context, re.IGNORECASE):
                    return rule.prefer
        return candidates[0]

    def reduced_labels(self) -> list[str]:
        """Reduced set in stable order: roots first, then specifics, alphabetical."""
        roots = sorted(l for l in self.reduced_set if self.labels[l].parent is None)
        rest = sorted(l for l in self.reduced_set if self.labels[l].parent is not None)
        return roots + rest

    def content_hash(self) -> str:
        """Digest binding models and emission files to this exact taxonomy."""
        return hashlib.sha256(serialize_taxonomy(self).encode("utf-8")).hexdigest()[:16]


def _validate(labels: dict[str, ActLabel], reduced: list[str],
              rules: list[PriorityRule]) -> None:
    for lid, lab in labels.items():
        if lab.parent is not None:
            if lab.parent not in labels:
                raise TaxonomyError(f"label {lid!r} has dangling parent {lab.parent!r}")
            if not lid.startswith(lab.parent + "-"):
                raise TaxonomyError(
                    f"label {lid!r} does not extend its parent id {lab.parent!r}"
                )
    # cycle check: walk each chain with a step bound
    for lid in labels:
        seen = set()
        cur = lid
        while cur is not None:
            if cur in seen:
                raise TaxonomyError(f"cycle in taxonomy at label {cur!r}")
            seen.add(cur)
            cur = labels[cur].parent
    for lid in labels:
        root = lid
        while labels[root].parent is not None:
            root = labels[root].parent
        if root not in TOP_LEVEL_ACTS:
            raise TaxonomyError(
                f"label {lid!r} roots at {root!r}, not one of the nine top-level acts"
            )
    for rid in reduced:
        if rid not in labels:
            raise TaxonomyError(f"reduced-set member {rid!r} is not a label")
    if len(set(reduced)) != len(reduced):
        dupes = sorted({r for r in reduced if reduced.count(r) > 1})
        raise TaxonomyError(f"duplicate reduced-set members: {dupes}")
    reduced_set = set(reduced)
    for lid in labels:
        chain = [lid]
        cur = labels[lid]
        while cur.parent is not None:
            chain.append(cur.parent)
            cur = labels[cur.parent]
        if not any(c in reduced_set for c in chain):
            raise TaxonomyError(
                f"label {lid!r} has no ancestor-or-self in the reduced set"
            )
    for rule in rules:
        for lid in (rule.prefer, rule.over):
            if lid not in labels:
                raise TaxonomyError(f"priority rule references unknown label {lid!r}")
        try:
            re.compile(rule.context)
        except re.error as exc:
            raise TaxonomyError(f"bad priority-rule context {rule.context!r}: {exc}")


def load_taxonomy(data: bytes | str) -> Taxonomy:
    """Parse and validate a taxonomy from TOML text or bytes."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        doc = tomllib.loads(data.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise TaxonomyError(f"unparseable taxonomy file: {exc}")

    labels: dict[str, ActLabel] = {}
    for entry in doc.get("label", []):
        lid = entry.get("id")
        if not lid:
            raise TaxonomyError("label entry without an id")
        if lid in labels:
            raise TaxonomyError(f"duplicate label id {lid!r}")
        parent = entry.get("parent")
        if parent == lid:
            raise TaxonomyError(f"cycle in taxonomy at label {lid!r}")
        labels[lid] = ActLabel(
            id=lid,
            parent=parent,
            description=entry.get("description", ""),
            example=entry.get("example"),
            synthesized=bool(entry.get("synthesized", False)),
        )
    reduced = list(doc.get("reduced_set", {}).get("ids", []))
    rules = [
        PriorityRule(
            prefer=r["prefer"],
            over=r["over"],
            context=r.get("context", ""),
            note=r.get("note", ""),
        )
        for r in doc.get("priority_rule", [])
    ]
    _validate(labels, reduced, rules)
    return Taxonomy(
        labels=labels, reduced_set=frozenset(reduced), priority_rules=tuple(rules)
    )


def load_taxonomy_file(path) -> Taxonomy:
    with open(path, "rb") as fh:
        return load_taxonomy(fh.read())


def default_taxonomy() -> Taxonomy:
    """The shipped 55-label taxonomy with its 18-label reduced set."""
    data = resources.files("chatact.data").joinpath("default_taxonomy.toml").read_bytes()
    return load_taxonomy(data)


def _toml_str(value: str) -> str:
    out = value.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
    return f'"{out}"'


def serialize_taxonomy(tax: Taxonomy) -> str:
    """Render a taxonomy back to TOML; load(serialize(t)) == t."""
    lines: list[str] = []
    for lid in sorted(tax.labels):
        lab = tax.labels[lid]
        lines.append("[[label]]")
        lines.append(f"id = {_toml_str(lab.id)}")
        if lab.parent is not None:
            lines.append(f"parent = {_toml_str(lab.parent)}")
        if lab.description:
            lines.append(f"description = {_toml_str(lab.description)}")
        if lab.example is not None:
            lines.append(f"example = {_toml_str(lab.example)}")
        if lab.synthesized:
            lines.append("synthesized = true")
        lines.append("")
    lines.append("[reduced_set]")
    ids = ", ".join(_toml_str(i) for i in sorted(tax.reduced_set))
    lines.append(f"ids = [{ids}]")
    lines.append("")
    for rule in tax.priority_rules:
        lines.append("[[priority_rule]]")
        lines.append(f"prefer = {_toml_str(rule.prefer)}")
        lines.append(f"over = {_toml_str(rule.over)}")
        lines.append(f"context = {_toml_str(rule.context)}")
        if rule.note:
            lines.append(f"note = {_toml_str(rule.note)}")
        lines.append("")
    return "\n".join(lines)
