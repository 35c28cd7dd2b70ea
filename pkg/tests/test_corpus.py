import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chatact.corpus import (
    AnnotationRecord,
    Message,
    attach_annotations,
    corpus_stats,
    parse_slack_export,
    parse_transcript,
    parse_labeled,
    parse_ts,
    serialize_labeled,
    serialize_transcript,
    split_corpus,
    split_sentences,
    subdialogue,
)
from chatact.errors import AnnotationError, ChatactError, TranscriptError

DATA = Path(__file__).parent / "data"


# -- parse_transcript --------------------------------------------------------


def test_single_record():
    d = parse_transcript('{"ts":"2021-03-01T10:00:00Z","speaker":"PG","text":"ill check"}')
    assert len(d.messages) == 1
    assert d.messages[0].speaker == "PG"
    assert d.messages[0].timestamp == parse_ts("2021-03-01T10:00:00Z")


def test_multiparty_order(multiparty_dialogue):
    assert [m.speaker for m in multiparty_dialogue.messages] == ["PG", "BR", "ER"]


def test_empty_stream():
    d = parse_transcript("")
    assert d.messages == () and d.sentences == ()


def test_malformed_record_carries_line_number():
    with pytest.raises(TranscriptError) as err:
        parse_transcript('{"ts":"2021-03-01T10:00:00Z","speaker":"a","text":"x"}\n{oops')
    assert err.value.line_number == 2


def test_missing_field_is_error():
    with pytest.raises(TranscriptError):
        parse_transcript('{"ts":"2021-03-01T10:00:00Z","speaker":"a"}')


def test_out_of_order_resorted_with_flag():
    lines = "\n".join([
        '{"ts":"2021-03-01T10:01:00Z","speaker":"a","text":"second"}',
        '{"ts":"2021-03-01T10:00:00Z","speaker":"b","text":"first"}',
    ])
    d = parse_transcript(lines)
    assert d.reordered
    assert [m.text for m in d.messages] == ["first", "second"]


def test_auto_ids_use_line_numbers():
    d = parse_transcript('{"ts":"5","speaker":"a","text":"x"}', dialogue_id="d")
    assert d.messages[0].id == "d:000001"


def test_roundtrip_serialize_reparse(fixture_dialogue):
    text = serialize_transcript(fixture_dialogue)
    again = parse_transcript(text)
    # labels are not part of the transcript; compare structures
    assert [m for m in again.messages] == [m for m in fixture_dialogue.messages]
    assert [(s.id, s.text, s.is_code_block) for s in again.sentences] == [
        (s.id, s.text, s.is_code_block) for s in fixture_dialogue.sentences
    ]


def test_index_in_dialogue_dense(fixture_dialogue):
    assert [s.index_in_dialogue for s in fixture_dialogue.sentences] == list(
        range(len(fixture_dialogue.sentences)))


# -- parse_slack_export ------------------------------------------------------


def test_slack_basic_mapping():
    d = parse_slack_export('[{"ts":"1614592800.000200","user":"U123","text":"ok I\'ve pushed"}]')
    assert len(d.messages) == 1
    assert d.messages[0].timestamp == pytest.approx(1614592800.0002)
    assert d.messages[0].speaker == "U123"


def test_slack_user_map_applied():
    d = parse_slack_export(
        '[{"ts":"1614592800.0","user":"U123","text":"hi"}]',
        user_map={"U123": "casey"})
    assert d.messages[0].speaker == "casey"


def test_slack_subtype_dropped_counted():
    d = parse_slack_export(json.dumps([
        {"ts": "1614592800.0", "user": "U1", "subtype": "channel_join"},
    ]))
    assert d.dropped == 1 and d.rejected == 0 and not d.messages


def test_slack_missing_user_rejected():
    d = parse_slack_export(json.dumps([
        {"ts": "1614592800.0", "text": "hello"},
        {"ts": "1614592801.0", "user": "U1", "text": "there"},
    ]))
    assert d.rejected == 1 and len(d.messages) == 1


def test_slack_entirely_rejected_is_error():
    with pytest.raises(TranscriptError):
        parse_slack_export('[{"text":"no ts or user"}]')


def test_slack_equal_ts_stable_under_permutation():
    records = [
        {"ts": "1614592800.000100", "user": "U2", "text": "beta"},
        {"ts": "1614592800.000100", "user": "U1", "text": "alpha"},
        {"ts": "1614592801.000000", "user": "U3", "text": "gamma"},
    ]
    orders = [
        [records[0], records[1], records[2]],
        [records[1], records[0], records[2]],
        [records[2], records[0], records[1]],
    ]
    outcomes = [
        [m.text for m in parse_slack_export(json.dumps(o)).messages]
        for o in orders
    ]
    assert outcomes[0] == outcomes[1] == outcomes[2]


# -- split_sentences ---------------------------------------------------------


def _msg(text):
    return Message(id="m", speaker="x", timestamp=0.0, text=text, dialogue_id="d")


def test_split_fixture_cases():
    cases = json.loads((DATA / "sentence_split_cases.json").read_text())
    assert len(cases) == 50
    for case in cases:
        got = [[s.text, s.is_code_block] for s in split_sentences(_msg(case["text"]))]
        assert got == case["expected"], case["name"]


def test_split_indexes_are_dense():
    sents = split_sentences(_msg("One. Two. Three."))
    assert [s.index_in_message for s in sents] == [0, 1, 2]
    assert [s.id for s in sents] == ["m:s0", "m:s1", "m:s2"]


@settings(max_examples=300)
@given(st.text(min_size=1, max_size=200).filter(lambda t: t.strip()))
def test_split_preserves_non_whitespace(text):
    sents = split_sentences(_msg(text))
    assert sents
    original = "".join(text.split())
    rebuilt = "".join("".join(s.text.split()) for s in sents)
    assert rebuilt == original


# -- attach_annotations ------------------------------------------------------


def _rec(sid, label, created="2021-06-02T10:00:00Z", source="human", **kw):
    return AnnotationRecord(sentence_id=sid, label=label, annotator="t",
                            created_at=parse_ts(created), source=source, **kw)


def test_block_annotation_propagates():
    d = parse_transcript('{"ts":"1","speaker":"a","text":"One. Two. Three.","id":"m0"}')
    assert len(d.sentences) == 3
    out = attach_annotations(d, [_rec("message:m0", "Inform")])
    assert [s.gold_label for s in out.sentences] == ["Inform"] * 3


def test_no_records_no_labels(fixture_dialogue):
    d = parse_transcript(serialize_transcript(fixture_dialogue))
    assert all(s.gold_label is None for s in d.sentences)


def test_corrected_supersedes_human():
    d = parse_transcript('{"ts":"1","speaker":"a","text":"hello","id":"m0"}')
    out = attach_annotations(d, [
        _rec("m0:s0", "Inform", "2021-06-02T10:00:00Z", "human"),
        _rec("m0:s0", "Acknowledge", "2021-06-02T10:00:05Z", "corrected"),
    ])
    assert out.sentences[0].gold_label == "Acknowledge"


def test_corrected_wins_even_if_older():
    d = parse_transcript('{"ts":"1","speaker":"a","text":"hello","id":"m0"}')
    out = attach_annotations(d, [
        _rec("m0:s0", "Acknowledge", "2021-06-02T09:00:00Z", "corrected"),
        _rec("m0:s0", "Inform", "2021-06-02T10:00:00Z", "human"),
    ])
    assert out.sentences[0].gold_label == "Acknowledge"


def test_later_human_record_supersedes():
    d = parse_transcript('{"ts":"1","speaker":"a","text":"hello","id":"m0"}')
    out = attach_annotations(d, [
        _rec("m0:s0", "Inform", "2021-06-02T10:00:00Z"),
        _rec("m0:s0", "Query", "2021-06-02T11:00:00Z"),
    ])
    assert out.sentences[0].gold_label == "Query"


def test_sentence_record_overrides_block():
    d = parse_transcript('{"ts":"1","speaker":"a","text":"One. Two.","id":"m0"}')
    out = attach_annotations(d, [
        _rec("message:m0", "Inform", "2021-06-02T10:00:00Z"),
        _rec("m0:s1", "Query", "2021-06-02T11:00:00Z"),
    ])
    assert [s.gold_label for s in out.sentences] == ["Inform", "Query"]


def test_dangling_ids_reported():
    d = parse_transcript('{"ts":"1","speaker":"a","text":"hello","id":"m0"}')
    with pytest.raises(AnnotationError) as err:
        attach_annotations(d, [_rec("m9:s0", "Inform"), _rec("m8:s0", "Query")])
    assert "m8:s0" in str(err.value) and "m9:s0" in str(err.value)


def test_bad_span_rejected():
    d = parse_transcript('{"ts":"1","speaker":"a","text":"hello","id":"m0"}')
    with pytest.raises(AnnotationError):
        attach_annotations(d, [_rec("m0:s0", "Inform", char_start=3, char_end=99)])


def test_attach_idempotent(fixture_dialogue):
    records = [_rec("m00:s0", "Inform"), _rec("message:m03", "Query")]
    once = attach_annotations(fixture_dialogue, records)
    twice = attach_annotations(once, records)
    assert [s.gold_label for s in once.sentences] == \
        [s.gold_label for s in twice.sentences]


# -- labeled stream ----------------------------------------------------------


def test_labeled_stream_roundtrip(fixture_dialogue):
    text = serialize_labeled(fixture_dialogue)
    again = parse_labeled(text)
    assert [(s.id, s.text, s.gold_label) for s in again.sentences] == \
        [(s.id, s.text, s.gold_label) for s in fixture_dialogue.sentences]
    for s in again.sentences:
        assert again.speaker_of(s) == fixture_dialogue.speaker_of(s)
        assert again.timestamp_of(s) == fixture_dialogue.timestamp_of(s)


def test_subdialogue_keeps_ids(fixture_dialogue):
    sub = subdialogue(fixture_dialogue, ["m03", "m04"])
    assert [m.id for m in sub.messages] == ["m03", "m04"]
    assert [s.index_in_dialogue for s in sub.sentences] == [0, 1]
    assert sub.sentences[0].id == "m03:s0"


# -- split_corpus ------------------------------------------------------------


def test_split_100_windows_shapes():
    ids = [f"w{i}" for i in range(100)]
    split = split_corpus(ids, (0.8, 0.05, 0.15), seed=42)
    assert len(split.dev) == 5
    assert len(split.test) == 15
    assert len(split.train) == 80
    assert _contiguous_runs(ids, split.dev) == 1
    assert _contiguous_runs(ids, split.test) == 2


def test_split_all_train():
    ids = [f"w{i}" for i in range(10)]
    split = split_corpus(ids, (1.0, 0.0, 0.0), seed=0)
    assert list(split.train) == ids and not split.dev and not split.test


def test_split_deterministic():
    ids = [f"w{i}" for i in range(50)]
    a = split_corpus(ids, seed=7)
    b = split_corpus(ids, seed=7)
    assert a == b


def test_split_too_few_windows():
    with pytest.raises(ChatactError):
        split_corpus(["a", "b", "c"], seed=0)


def test_split_bad_ratios():
    with pytest.raises(ChatactError):
        split_corpus([f"w{i}" for i in range(10)], (0.5, 0.2, 0.2), seed=0)


def _contiguous_runs(ordered_ids, subset):
    positions = sorted(ordered_ids.index(i) for i in subset)
    if not positions:
        return 0
    runs = 1
    for a, b in zip(positions, positions[1:]):
        if b != a + 1:
            runs += 1
    return runs


def test_split_sweep_disjoint_exhaustive():
    ids = [f"w{i}" for i in range(60)]
    for seed in range(100):
        split = split_corpus(ids, (0.8, 0.05, 0.15), seed=seed)
        parts = list(split.train) + list(split.dev) + list(split.test)
        assert sorted(parts) == sorted(ids)
        assert len(set(parts)) == len(ids)


# -- corpus_stats ------------------------------------------------------------


def test_stats_fixture_proportions(fixture_dialogue, taxonomy):
    stats = corpus_stats(fixture_dialogue, taxonomy)
    table = stats["partitions"]["all"]
    assert sum(table.values()) == pytest.approx(1.0, abs=1e-9)
    assert table["Inform"] == pytest.approx(3 / 20)
    assert table["Assign"] == pytest.approx(2 / 20)
    assert stats["unlabeled"]["all"] == 0


def test_stats_single_label(taxonomy):
    d = parse_transcript('{"ts":"1","speaker":"a","text":"hi","id":"m0"}')
    d = attach_annotations(d, [_rec("m0:s0", "Inform")])
    stats = corpus_stats(d, taxonomy)
    assert stats["partitions"]["all"] == {"Inform": 1.0}


def test_stats_unlabeled_excluded(taxonomy):
    d = parse_transcript("\n".join([
        '{"ts":"1","speaker":"a","text":"hi","id":"m0"}',
        '{"ts":"2","speaker":"a","text":"yo","id":"m1"}',
    ]))
    d = attach_annotations(d, [_rec("m0:s0", "Inform")])
    stats = corpus_stats(d, taxonomy)
    assert stats["partitions"]["all"] == {"Inform": 1.0}
    assert stats["unlabeled"]["all"] == 1
