import pytest

from chatact.errors import TaxonomyError
from chatact.taxonomy import (
    TOP_LEVEL_ACTS,
    default_taxonomy,
    load_taxonomy,
    serialize_taxonomy,
)


def test_default_has_55_labels_and_9_roots(taxonomy):
    assert len(taxonomy) == 55
    assert sorted(taxonomy.roots) == sorted(TOP_LEVEL_ACTS)


def test_reduced_set_is_18_and_contains_all_roots(taxonomy):
    assert len(taxonomy.reduced_set) == 18
    assert set(TOP_LEVEL_ACTS) <= taxonomy.reduced_set
    specifics = taxonomy.reduced_set - set(TOP_LEVEL_ACTS)
    assert len(specifics) == 9


def test_every_label_collapses(taxonomy):
    for label in taxonomy.labels:
        collapsed = taxonomy.collapse(label)
        assert collapsed in taxonomy.reduced_set
        assert collapsed in taxonomy.ancestors(label)


def test_ancestors_deep_chain(taxonomy):
    assert taxonomy.ancestors("Inform-Status-TaskOrIssue-Progress") == [
        "Inform",
        "Inform-Status",
        "Inform-Status-TaskOrIssue",
        "Inform-Status-TaskOrIssue-Progress",
    ]


def test_ancestors_root_is_identity(taxonomy):
    assert taxonomy.ancestors("Inform") == ["Inform"]


def test_ancestors_counter_chain_has_length_3(taxonomy):
    assert len(taxonomy.ancestors("Reject-Counter-Assign")) == 3


def test_ancestors_unknown_label(taxonomy):
    with pytest.raises(TaxonomyError):
        taxonomy.ancestors("Nope")


def test_max_chain_depth_is_4(taxonomy):
    assert max(len(taxonomy.ancestors(l)) for l in taxonomy.labels) == 4


def test_collapse_examples(taxonomy):
    # in the reduced set already: collapse to itself
    assert taxonomy.collapse("Social-Frustration") == "Social-Frustration"
    # no intermediate reduced member on the chain: fall back to the root
    assert taxonomy.collapse("Query-Status-Personal") == "Query"
    # sibling of a reduced member still falls back to the root
    assert taxonomy.collapse("Acknowledge-Receipt") == "Acknowledge"
    assert taxonomy.collapse("Inform-NewIssue-Anticipated") == "Inform-NewIssue"


def test_collapse_idempotent(taxonomy):
    for label in taxonomy.labels:
        once = taxonomy.collapse(label)
        assert taxonomy.collapse(once) == once


def test_apply_priority_acceptance_context(taxonomy):
    chosen = taxonomy.apply_priority(
        ["Social-Appreciation", "Acknowledge-Accept"],
        context="functions as acceptance of the assigned task",
    )
    assert chosen == "Acknowledge-Accept"


def test_apply_priority_singleton(taxonomy):
    assert taxonomy.apply_priority(["Inform"]) == "Inform"


def test_apply_priority_role_rule(taxonomy):
    chosen = taxonomy.apply_priority(
        ["Request", "Assign"], context="speaker-role=lead"
    )
    assert chosen == "Assign"


def test_apply_priority_no_match_returns_first(taxonomy):
    chosen = taxonomy.apply_priority(
        ["Social-Appreciation", "Acknowledge-Accept"], context="plain thanks"
    )
    assert chosen == "Social-Appreciation"


def test_roundtrip(taxonomy):
    again = load_taxonomy(serialize_taxonomy(taxonomy))
    assert again == taxonomy
    assert again.content_hash() == taxonomy.content_hash()


def test_cycle_detected():
    with pytest.raises(TaxonomyError):
        load_taxonomy('[[label]]\nid = "Inform"\nparent = "Inform"\n')


def test_dangling_parent():
    bad = '[[label]]\nid = "Inform-Status"\nparent = "Inform"\n'
    with pytest.raises(TaxonomyError):
        load_taxonomy(bad)


def test_duplicate_id():
    bad = '[[label]]\nid = "Inform"\n\n[[label]]\nid = "Inform"\n'
    with pytest.raises(TaxonomyError):
        load_taxonomy(bad)


def test_missing_reduced_member():
    bad = (
        '[[label]]\nid = "Inform"\n\n'
        "[reduced_set]\nids = [\"Inform\", \"Social\"]\n"
    )
    with pytest.raises(TaxonomyError):
        load_taxonomy(bad)


def test_label_without_reduced_ancestor():
    bad = (
        '[[label]]\nid = "Inform"\n\n[[label]]\nid = "Social"\n\n'
        "[reduced_set]\nids = [\"Inform\"]\n"
    )
    with pytest.raises(TaxonomyError):
        load_taxonomy(bad)


def test_synthesized_flags(taxonomy):
    synthesized = {l for l, lab in taxonomy.labels.items() if lab.synthesized}
    assert synthesized == {"Inform-Status", "Reject-Counter"}
