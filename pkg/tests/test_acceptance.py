"""Acceptance suite: every criterion at its stated tolerance, one printed
pass/fail line each. Run with `pytest tests/test_acceptance.py -s` to see the
lines as they complete.
"""

import collections
import itertools
import json
import random
import time

import numpy as np
import pytest

from chatact.corpus import (
    Message,
    dialogue_from_messages,
    parse_labeled,
    parse_transcript,
    split_corpus,
    subdialogue,
)
from chatact.labeler import (
    FeatureConfig,
    TrainConfig,
    forward_backward,
    load_model,
    log_partition,
    prepare_windows,
    train_crf,
    viterbi_decode,
)
from chatact.labeler.baseline import BaselineConfig, predict_baseline, train_baseline
from chatact.labeler.crf import _accuracy
from chatact.metrics import build_report, detect_pairs, verify_report
from chatact.segmentation import (
    segment_message,
    segment_speaker,
    segment_static,
    segment_time,
)
from chatact.synth import SynthConfig, generate
from chatact.taxonomy import default_taxonomy
from chatact.validation import compute_centroids, hierarchy_consistency_report

from conftest import random_model, random_window


def _report(criterion: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {criterion}" + (f" :: {detail}" if detail else ""))
    assert ok, f"{criterion} failed: {detail}"


@pytest.fixture(scope="module")
def synth_corpus():
    return generate(SynthConfig())


@pytest.fixture(scope="module")
def taxonomy():
    return default_taxonomy()


# -- CRF correctness ---------------------------------------------------------


def _enumerate_all(model, pw):
    """Vectorized enumeration oracle: scores of every label sequence, in
    lexicographic order."""
    emis = np.vstack([
        model.emission_weights[:, fv.indices] @ fv.values for fv in pw.features
    ])
    L = model.num_labels
    n = len(pw)
    seqs = np.array(list(itertools.product(range(L), repeat=n)), dtype=np.int64)
    scores = model.start_scores[seqs[:, 0]] + model.end_scores[seqs[:, -1]]
    for t in range(n):
        scores = scores + emis[t, seqs[:, t]]
    for t in range(n - 1):
        scores = scores + model.transitions[seqs[:, t], seqs[:, t + 1]]
    return seqs, scores


def test_crf_correctness_200_models():
    rng = np.random.RandomState(1234)
    t0 = time.monotonic()
    worst_gap = 0.0
    for _ in range(200):
        L = rng.randint(1, 7)       # L <= 6
        n = rng.randint(1, 6)       # n <= 5
        model = random_model(rng, L, dim=12, scale=1.5)
        pw = random_window(rng, n, dim=12, n_labels=L)
        seqs, scores = _enumerate_all(model, pw)
        best = int(np.argmax(scores))
        got_seq, got_score = viterbi_decode(model, pw)
        assert got_seq == seqs[best].tolist()
        assert abs(got_score - scores[best]) < 1e-9
        m = scores.max()
        brute_log_z = float(m + np.log(np.exp(scores - m).sum()))
        gap = abs(log_partition(model, pw) - brute_log_z)
        worst_gap = max(worst_gap, gap)
        assert gap < 1e-9
    elapsed = time.monotonic() - t0
    _report(
        "CRF correctness (200 random models vs enumeration)",
        elapsed < 10.0,
        f"worst log-partition gap {worst_gap:.2e}, {elapsed:.1f}s (< 10s)",
    )


def test_crf_gradient_check():
    from chatact.labeler.crf import log_likelihood_and_gradient, window_log_likelihood

    rng = np.random.RandomState(4321)
    t0 = time.monotonic()
    eps = 1e-5
    worst = 0.0
    for case in range(20):
        L = rng.randint(2, 4)
        dim = 5
        model = random_model(rng, L, dim=dim, scale=0.5)
        windows = [
            random_window(rng, rng.randint(1, 4), dim=dim, n_labels=L,
                          labeled="all" if case % 2 else "some")
            for _ in range(2)
        ]
        _, gw, gt, gs, ge = log_likelihood_and_gradient(model, windows)

        def ll():
            return sum(window_log_likelihood(model, pw) for pw in windows)

        for analytic, arr in ((gw, model.emission_weights),
                              (gt, model.transitions),
                              (gs, model.start_scores),
                              (ge, model.end_scores)):
            it = np.nditer(arr, flags=["multi_index"])
            while not it.finished:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + eps
                up = ll()
                arr[idx] = orig - eps
                down = ll()
                arr[idx] = orig
                numeric = (up - down) / (2 * eps)
                rel = abs(analytic[idx] - numeric) / max(abs(numeric), 1.0)
                worst = max(worst, rel)
                assert rel < 1e-4
                it.iternext()
    elapsed = time.monotonic() - t0
    _report(
        "CRF gradient vs central finite differences (20 instances)",
        elapsed < 30.0,
        f"worst relative error {worst:.2e} (< 1e-4), {elapsed:.1f}s (< 30s)",
    )


def test_crf_marginal_normalization():
    rng = np.random.RandomState(99)
    worst = 0.0
    for _ in range(300):
        L = rng.randint(1, 8)
        n = rng.randint(1, 9)
        model = random_model(rng, L, dim=10, scale=2.5)
        pw = random_window(rng, n, dim=10, n_labels=L)
        _, unary, pairwise = forward_backward(model, pw)
        worst = max(worst, float(np.abs(unary.sum(axis=1) - 1.0).max()))
        for t in range(n - 1):
            worst = max(worst, abs(float(pairwise[t].sum()) - 1.0))
        assert worst <= 1e-9
    _report(
        "forward-backward marginals normalize",
        True,
        f"worst |sum - 1| = {worst:.2e} (<= 1e-9) over 300 fuzzed windows",
    )


# -- segmentation ------------------------------------------------------------


def _random_messages(rng: random.Random):
    n = rng.randint(1, 8)
    ts = 0.0
    out = []
    for i in range(n):
        ts += rng.choice([1.0, 30.0, 600.0, 2000.0, 4500.0])
        n_sent = rng.randint(1, 3)
        text = " ".join("w." for _ in range(n_sent))
        out.append(Message(id=f"m{i:02d}", speaker=rng.choice("abcd"),
                           timestamp=ts, text=text, dialogue_id="f"))
    return out


def test_segmentation_suite_10k(multiparty_dialogue):
    t0 = time.monotonic()
    rng = random.Random(2024)
    checked = 0
    for _ in range(10_000):
        dialogue = dialogue_from_messages(_random_messages(rng))
        line_limit = rng.randint(1, 8)
        gap_limit = rng.choice([500.0, 1500.0, 3600.0])
        all_ids = [s.id for s in dialogue.sentences]
        for windows in (
            segment_message(dialogue),
            segment_static(dialogue, line_limit),
            segment_time(dialogue, line_limit, gap_limit),
            segment_speaker(dialogue, line_limit, 2),
        ):
            flat = [sid for w in windows for sid in w.sentence_ids]
            assert flat == all_ids, "partition violated"
            for w in windows:
                mids = []
                for sid in w.sentence_ids:
                    mid = dialogue.sentence(sid).message_id
                    if mid not in mids:
                        mids.append(mid)
                count = 0
                for mid in mids:
                    count += len(dialogue.sentences_of(mid))
                assert count == len(w.sentence_ids), "message split"
        # strategy-specific bounds
        for w in segment_time(dialogue, line_limit, gap_limit):
            times = []
            for sid in w.sentence_ids:
                mt = dialogue.timestamp_of(dialogue.sentence(sid))
                if not times or times[-1] != mt:
                    times.append(mt)
            for a, b in zip(times, times[1:]):
                assert b - a <= gap_limit, "gap bound violated"
        for w in segment_speaker(dialogue, line_limit, 2):
            speakers = {dialogue.speaker_of(dialogue.sentence(sid))
                        for sid in w.sentence_ids}
            assert len(speakers) <= 2, "speaker bound violated"
        checked += 1
    # the documented three-speaker fixture
    windows = segment_speaker(multiparty_dialogue, 10, 2)
    speakers = [
        [multiparty_dialogue.speaker_of(multiparty_dialogue.sentence(sid))
         for sid in w.sentence_ids]
        for w in windows
    ]
    assert speakers == [["PG", "BR"], ["ER"]]
    elapsed = time.monotonic() - t0
    _report(
        "segmentation suite (10k fuzzed dialogues + 3-speaker fixture)",
        elapsed < 20.0,
        f"{checked} dialogues x 4 strategies, {elapsed:.1f}s (< 20s)",
    )


# -- learning on the synthetic corpus ----------------------------------------


def test_synthetic_corpus_learning(synth_corpus, taxonomy):
    t0 = time.monotonic()
    dlg = synth_corpus.dialogue
    label_set = tuple(taxonomy.reduced_labels())
    fc = FeatureConfig(dim=2 ** 16)
    msg_ids = [m.id for m in dlg.messages]
    lines = []
    for train_seed, split_seed in ((1, 11), (2, 12), (3, 13)):
        split = split_corpus(msg_ids, (0.7, 0.15, 0.15), seed=split_seed)
        train_dlg = subdialogue(dlg, split.train)
        dev_dlg = subdialogue(dlg, split.dev)

        def crf_dev_accuracy(segment_fn):
            train_pw = prepare_windows(train_dlg, segment_fn(train_dlg),
                                       taxonomy, label_set, fc)
            dev_pw = prepare_windows(dev_dlg, segment_fn(dev_dlg),
                                     taxonomy, label_set, fc)
            model = train_crf(train_pw, dev_pw, label_set,
                              taxonomy.content_hash(),
                              TrainConfig(seed=train_seed, feature_config=fc))
            return _accuracy(model, dev_pw)

        acc_1line = crf_dev_accuracy(segment_message)
        acc_10line = crf_dev_accuracy(lambda d: segment_static(d, 10))

        texts = [s.text for s in train_dlg.sentences if s.gold_label]
        labels = [taxonomy.collapse(s.gold_label)
                  for s in train_dlg.sentences if s.gold_label]
        baseline = train_baseline(
            texts, labels, label_set,
            BaselineConfig(seed=train_seed, epochs=80, step=0.5))
        dev_sents = [s for s in dev_dlg.sentences if s.gold_label]
        acc_baseline = sum(
            predict_baseline(baseline, s.text) == taxonomy.collapse(s.gold_label)
            for s in dev_sents) / len(dev_sents)
        majority = collections.Counter(
            taxonomy.collapse(s.gold_label) for s in dev_sents
        ).most_common(1)[0][1] / len(dev_sents)

        assert acc_10line >= majority + 0.15, \
            f"10-line {acc_10line:.3f} < majority {majority:.3f} + 0.15"
        assert acc_baseline < acc_1line < acc_10line, \
            f"ordering broken: {acc_baseline:.3f}, {acc_1line:.3f}, {acc_10line:.3f}"
        lines.append(f"seed {train_seed}: {acc_baseline:.3f} < "
                     f"{acc_1line:.3f} < {acc_10line:.3f} (maj {majority:.3f})")
    elapsed = time.monotonic() - t0
    _report(
        "synthetic-corpus learning (baseline < 1-line < 10-line, 3 seeds; "
        "10-line >= majority + 15pts)",
        elapsed < 300.0,
        "; ".join(lines) + f"; {elapsed:.0f}s (< 300s)",
    )


# -- taxonomy validation property --------------------------------------------


def test_taxonomy_validation_property(synth_corpus, taxonomy):
    dlg = synth_corpus.dialogue
    texts = [s.text for s in dlg.sentences]
    labels = [s.gold_label for s in dlg.sentences]
    label_set = tuple(sorted(set(labels)))
    model = train_baseline(texts, labels, label_set,
                           BaselineConfig(seed=0, epochs=30))
    centroids, _ = compute_centroids(model, dlg)
    report = hierarchy_consistency_report(centroids, taxonomy)
    assert len(report["classes"]) >= 2
    for cls, row in report["classes"].items():
        assert row["within_mean"] < report["all_mean"], cls
    _report(
        "taxonomy validation (within-class < overall mean distance)",
        not report["violations"],
        f"all_mean {report['all_mean']:.3f}; " + ", ".join(
            f"{cls} {row['within_mean']:.3f}"
            for cls, row in report["classes"].items()),
    )


# -- metrics golden fixture ---------------------------------------------------


def test_metrics_fixture_golden(fixture_dialogue, taxonomy, golden_report):
    report = build_report(fixture_dialogue, taxonomy)
    for name, expected in golden_report["metrics"].items():
        metric = report.metrics[name]
        assert metric["value"] == pytest.approx(expected["value"]), name
        for key in ("numerator", "denominator", "declines", "decline_rate"):
            if key in expected:
                assert metric[key] == pytest.approx(expected[key]), (name, key)
    got_counts = {lab: row["count"]
                  for lab, row in report.label_frequencies["team"].items()}
    assert got_counts == golden_report["team_frequencies"]
    pairs = detect_pairs(fixture_dialogue, taxonomy)
    got_pairs = [
        {"initiator": p.initiator_sentence_id, "kind": p.initiator_kind,
         "closed": p.closed, "responder": p.responder_sentence_id,
         "latency": p.latency, "response_kind": p.response_kind}
        for p in pairs
    ]
    assert got_pairs == golden_report["pairs"]
    problems = verify_report(report)
    assert problems == []
    _report(
        "metrics fixture (hand-computed golden report, evidence-recomputable)",
        True,
        "loop 0.75, clarification 1/3, uptake 0.5, latency 60s; "
        "all rates recompute from evidence",
    )


# -- split protocol ----------------------------------------------------------


def test_split_protocol_100_seeds():
    ids = [f"w{i}" for i in range(100)]

    def runs(subset):
        positions = sorted(ids.index(x) for x in subset)
        if not positions:
            return 0
        n_runs = 1
        for a, b in zip(positions, positions[1:]):
            if b != a + 1:
                n_runs += 1
        return n_runs

    for seed in range(100):
        split = split_corpus(ids, (0.8, 0.05, 0.15), seed=seed)
        everything = list(split.train) + list(split.dev) + list(split.test)
        assert sorted(everything) == sorted(ids)
        assert len(set(everything)) == 100
        assert abs(len(split.dev) - 5) <= 1
        assert abs(len(split.test) - 15) <= 1
        assert abs(len(split.train) - 80) <= 1
        assert runs(split.dev) == 1
        assert runs(split.test) == 2
    _report(
        "split protocol (100-seed sweep: disjoint, exhaustive, 1 dev run, "
        "2 test runs, sizes within 1 window of 80/5/15)",
        True,
    )


# -- pipeline smoke ----------------------------------------------------------


def test_pipeline_smoke(tmp_path, capsys):
    from chatact.cli import cli_run
    from chatact.segmentation import windows_from_jsonl

    t0 = time.monotonic()
    base = tmp_path / "pipeline"
    steps = [
        ["synth", "--out", str(base / "raw"), "--sentences", "4000",
         "--seed", "7"],
        ["ingest", "--in", str(base / "raw" / "transcript.jsonl"),
         "--out", str(base / "normalized.jsonl")],
        ["segment", "--in", str(base / "normalized.jsonl"),
         "--strategy", "static", "--line-limit", "10",
         "--out", str(base / "windows.jsonl")],
        ["train", "--in", str(base / "normalized.jsonl"),
         "--annotations", str(base / "raw" / "annotations.jsonl"),
         "--strategy", "static", "--line-limit", "10",
         "--seed", "1", "--max-epochs", "40",
         "--feature-dim", str(2 ** 16),
         "--out", str(base / "model.bin")],
        ["label", "--in", str(base / "normalized.jsonl"),
         "--model", str(base / "model.bin"),
         "--out", str(base / "labeled.jsonl")],
        ["metrics", "--in", str(base / "labeled.jsonl"),
         "--out", str(base / "report.json")],
    ]
    base.mkdir(parents=True, exist_ok=True)
    for argv in steps:
        code = cli_run(argv)
        assert code == 0, f"step {argv[0]} exited {code}"

    # every artifact is re-loadable
    model = load_model(base / "model.bin")
    assert model.label_set
    labeled = parse_labeled((base / "labeled.jsonl").read_text())
    assert all(s.predicted_label for s in labeled.sentences)
    windows = windows_from_jsonl((base / "windows.jsonl").read_text())
    assert sum(len(w.sentence_ids) for w in windows) == 4000
    report = json.loads((base / "report.json").read_text())
    assert "metrics" in report and "loop_closure_rate" in report["metrics"]
    normalized = parse_transcript((base / "normalized.jsonl").read_text())
    assert len(normalized.sentences) == 4000

    elapsed = time.monotonic() - t0
    capsys.readouterr()  # swallow step outputs before the status line
    _report(
        "pipeline smoke (ingest -> segment -> train -> label -> metrics)",
        elapsed < 300.0,
        f"{elapsed:.0f}s (< 300s), exit 0 at every step, artifacts reload",
    )
