"""Linear-chain CRF over per-window sentence features.

The score of a label sequence y for a window of n sentences is

    start(y_1) + sum_i emit(y_i, x_i) + sum_{i>=2} trans(y_{i-1}, y_i) + end(y_n)

Emissions are linear in hashed sentence features, optionally augmented with
imported external scores. Unlabeled sentences still contribute context: the
likelihood marginalizes over their labels instead of dropping them, so the
chain structure of every window is preserved.

Training maximizes the L2-regularized log-likelihood by full-batch gradient
ascent with per-parameter adaptive (AdaGrad) step sizes; the gradient is
observed-minus-expected feature counts from forward-backward marginals.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from ..corpus import Dialogue
from ..errors import ModelError
from ..segmentation import Window
from .features import FeatureConfig, FeatureVector, featurize, window_units

logger = logging.getLogger(__name__)


@dataclass
class SequenceModel:
    """CRF parameters bound to a taxonomy's reduced label set."""

    label_set: tuple[str, ...]
    emission_weights: np.ndarray  # (L, D)
    transitions: np.ndarray  # (L, L); [i, j] scores label j following label i
    start_scores: np.ndarray  # (L,)
    end_scores: np.ndarray  # (L,)
    l2: float
    feature_config: FeatureConfig
    taxonomy_hash: str
    segmentation: dict = field(default_factory=dict)

    @property
    def num_labels(self) -> int:
        return len(self.label_set)

    def label_index(self, label: str) -> int:
        try:
            return self.label_set.index(label)
        except ValueError:
            raise ModelError(f"label {label!r} is not in the model label set")

    def validate(self) -> None:
        for name, arr in (("emission_weights", self.emission_weights),
                          ("transitions", self.transitions),
                          ("start_scores", self.start_scores),
                          ("end_scores", self.end_scores)):
            if not np.all(np.isfinite(arr)):
                raise ModelError(f"non-finite values in {name}")


@dataclass
class PreparedWindow:
    """A window ready for the CRF: features, gold indices, emissions cache."""

    window_id: str
    sentence_ids: tuple[str, ...]
    features: list[FeatureVector]
    gold: np.ndarray  # int64, -1 where unlabeled/masked
    extra: np.ndarray | None = None  # (n, L) imported emission scores

    def __len__(self) -> int:
        return len(self.features)


def prepare_windows(dialogue: Dialogue, windows: list[Window], taxonomy,
                    label_set: tuple[str, ...],
                    config: FeatureConfig = FeatureConfig(),
                    extra: dict[str, np.ndarray] | None = None,
                    ) -> list[PreparedWindow]:
    """Featurize windows and map gold labels onto the model's label set.

    Gold labels are collapsed through the taxonomy's reduced set first;
    unlabeled sentences become masked (-1) positions. Passing taxonomy=None
    skips gold labels entirely (decode-only preparation).
    """
    index = {lab: i for i, lab in enumerate(label_set)}
    prepared = []
    for window in windows:
        units = window_units(dialogue, window)
        feats = [featurize(units, i, config) for i in range(len(units))]
        gold = np.full(len(units), -1, dtype=np.int64)
        for i, unit in enumerate(units):
            if taxonomy is None or unit.gold_label is None:
                continue
            collapsed = taxonomy.collapse(unit.gold_label)
            if collapsed not in index:
                raise ModelError(
                    f"gold label {unit.gold_label!r} collapses to "
                    f"{collapsed!r}, which is outside the model label set"
                )
            gold[i] = index[collapsed]
        ex = None
        if extra is not None:
            rows = []
            for sid in window.sentence_ids:
                if sid not in extra:
                    raise ModelError(f"no imported emissions for sentence {sid!r}")
                rows.append(extra[sid])
            ex = np.vstack(rows)
        prepared.append(PreparedWindow(
            window_id=window.id,
            sentence_ids=window.sentence_ids,
            features=feats,
            gold=gold,
            extra=ex,
        ))
    return prepared


# --------------------------------------------------------------------------
# scoring


def _logsumexp(a: np.ndarray, axis=None):
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if axis is None:
        return float(out.ravel()[0])
    return np.squeeze(out, axis=axis)


def emission_matrix(model: SequenceModel, pw: PreparedWindow) -> np.ndarray:
    """(n, L) emission scores: hashed-feature scores plus imported scores."""
    n = len(pw)
    emis = np.empty((n, model.num_labels))
    W = model.emission_weights
    for i, fv in enumerate(pw.features):
        emis[i] = W[:, fv.indices] @ fv.values
    if pw.extra is not None:
        emis = emis + pw.extra
    return emis


def crf_score(model: SequenceModel, pw: PreparedWindow,
              label_sequence) -> float:
    """Score of one complete label sequence for a window."""
    emis = emission_matrix(model, pw)
    return sequence_score(model.transitions, model.start_scores,
                          model.end_scores, emis, label_sequence)


def sequence_score(transitions, start, end, emis, label_sequence) -> float:
    y = np.asarray(label_sequence, dtype=np.int64)
    n = emis.shape[0]
    if len(y) != n:
        raise ModelError(
            f"label sequence length {len(y)} != window length {n}"
        )
    score = start[y[0]] + end[y[-1]] + float(emis[np.arange(n), y].sum())
    if n > 1:
        score += float(transitions[y[:-1], y[1:]].sum())
    return float(score)


def _forward(transitions, start, end, emis):
    n, L = emis.shape
    alpha = np.empty((n, L))
    alpha[0] = start + emis[0]
    for t in range(1, n):
        alpha[t] = _logsumexp(alpha[t - 1][:, None] + transitions, axis=0) + emis[t]
    log_z = _logsumexp(alpha[-1] + end)
    return alpha, log_z


def log_partition(model: SequenceModel, pw: PreparedWindow) -> float:
    """log sum over all L^n sequences of exp(score), by forward recursion."""
    emis = emission_matrix(model, pw)
    _, log_z = _forward(model.transitions, model.start_scores,
                        model.end_scores, emis)
    return log_z


def forward_backward(model: SequenceModel, pw: PreparedWindow,
                     observed: np.ndarray | None = None):
    """(log_Z, unary marginals (n, L), pairwise marginals (n-1, L, L)).

    observed clamps positions to a gold label (-1 leaves a position free),
    which turns the result into the statistics of the constrained chain.
    """
    emis = emission_matrix(model, pw)
    return _forward_backward(model.transitions, model.start_scores,
                             model.end_scores, emis, observed)


def _forward_backward(transitions, start, end, emis, observed=None):
    emis = _clamp(emis, observed)
    n, L = emis.shape
    alpha, log_z = _forward(transitions, start, end, emis)
    beta = np.empty((n, L))
    beta[-1] = end
    for t in range(n - 2, -1, -1):
        beta[t] = _logsumexp(transitions + (emis[t + 1] + beta[t + 1])[None, :],
                             axis=1)
    with np.errstate(invalid="ignore"):
        unary = np.exp(alpha + beta - log_z)
    pairwise = np.empty((max(n - 1, 0), L, L))
    for t in range(n - 1):
        pairwise[t] = np.exp(
            alpha[t][:, None] + transitions
            + (emis[t + 1] + beta[t + 1])[None, :] - log_z
        )
    return log_z, unary, pairwise


def _clamp(emis: np.ndarray, observed: np.ndarray | None) -> np.ndarray:
    if observed is None:
        return emis
    emis = emis.copy()
    for t, lab in enumerate(observed):
        if lab >= 0:
            keep = emis[t, lab]
            emis[t, :] = -np.inf
            emis[t, lab] = keep
    return emis


def viterbi_decode(model: SequenceModel, pw: PreparedWindow):
    """Best label sequence and its score.

    Ties break toward the smallest label index applied left-to-right, i.e.
    the lexicographically smallest optimal sequence, via a backward max pass
    and a greedy forward readout.
    """
    emis = emission_matrix(model, pw)
    return _viterbi(model.transitions, model.start_scores, model.end_scores,
                    emis)


def _viterbi(transitions, start, end, emis):
    n, L = emis.shape
    delta = np.empty((n, L))  # best achievable suffix score from (t, label)
    delta[-1] = emis[-1] + end
    for t in range(n - 2, -1, -1):
        delta[t] = emis[t] + np.max(transitions + delta[t + 1][None, :], axis=1)
    path = np.empty(n, dtype=np.int64)
    path[0] = np.argmax(start + delta[0])
    best = float((start + delta[0])[path[0]])
    for t in range(1, n):
        path[t] = np.argmax(transitions[path[t - 1]] + delta[t])
    return path.tolist(), best


def decode_window(model: SequenceModel, pw: PreparedWindow) -> list[str]:
    path, _ = viterbi_decode(model, pw)
    return [model.label_set[i] for i in path]


def label_dialogue(model: SequenceModel, dialogue: Dialogue,
                   windows: list[Window],
                   extra: dict[str, np.ndarray] | None = None) -> Dialogue:
    """Decode every window and return a dialogue with predicted labels set."""
    prepared = prepare_windows(dialogue, windows, None, model.label_set,
                               model.feature_config, extra)
    predictions: dict[str, str] = {}
    for pw in prepared:
        for sid, lab in zip(pw.sentence_ids, decode_window(model, pw)):
            predictions[sid] = lab
    new_sentences = [
        replace(s, predicted_label=predictions[s.id]) if s.id in predictions else s
        for s in dialogue.sentences
    ]
    return dialogue.with_sentences(new_sentences)


# --------------------------------------------------------------------------
# training


@dataclass(frozen=True)
class TrainConfig:
    seed: int  # mandatory: fixes initialization and window order
    base_step: float = 0.1
    l2: float = 1e-4
    patience: int = 5
    max_epochs: int = 100
    init_scale: float = 1e-3
    eps: float = 1e-8
    feature_config: FeatureConfig = FeatureConfig()


def train_crf(train_windows: list[PreparedWindow],
              dev_windows: list[PreparedWindow],
              label_set: tuple[str, ...],
              taxonomy_hash: str,
              config: TrainConfig,
              segmentation: dict | None = None) -> SequenceModel:
    """Fit CRF parameters on gold-labeled windows.

    One AdaGrad step per window, window order reshuffled each epoch from the
    seed; the L2 penalty is applied as an equivalent per-epoch weight decay.
    Early-stops when dev accuracy has not improved for `patience` epochs and
    returns the best-dev parameters. Deterministic for a fixed config.
    """
    if not train_windows:
        raise ModelError("empty training set")
    if not any((pw.gold >= 0).any() for pw in train_windows):
        raise ModelError("no labeled sentences in the training set")
    L = len(label_set)
    D = config.feature_config.dim
    rng = np.random.RandomState(config.seed)
    model = SequenceModel(
        label_set=tuple(label_set),
        emission_weights=np.zeros((L, D)),
        transitions=rng.uniform(-config.init_scale, config.init_scale, (L, L)),
        start_scores=rng.uniform(-config.init_scale, config.init_scale, L),
        end_scores=rng.uniform(-config.init_scale, config.init_scale, L),
        l2=config.l2,
        feature_config=config.feature_config,
        taxonomy_hash=taxonomy_hash,
        segmentation=segmentation or {},
    )
    acc_w = np.zeros((L, D))
    acc_t = np.zeros((L, L))
    acc_s = np.zeros(L)
    acc_e = np.zeros(L)
    decay = max(0.0, 1.0 - 2.0 * config.l2 * config.base_step)

    labeled = [pw for pw in train_windows if (pw.gold >= 0).any()]
    has_dev = any((pw.gold >= 0).any() for pw in dev_windows)
    best_metric = -np.inf
    best_params = None
    stale = 0
    n_labeled = sum(int((pw.gold >= 0).sum()) for pw in labeled)
    order = np.arange(len(labeled))

    for epoch in range(config.max_epochs):
        rng.shuffle(order)
        total_ll = 0.0
        for wi in order:
            pw = labeled[wi]
            emis = emission_matrix(model, pw)
            log_zf, uf, pf = _forward_backward(
                model.transitions, model.start_scores, model.end_scores, emis)
            log_zc, uc, pc = _forward_backward(
                model.transitions, model.start_scores, model.end_scores, emis,
                observed=pw.gold)
            total_ll += log_zc - log_zf
            du = uc - uf
            for pos, fv in enumerate(pw.features):
                g = np.outer(du[pos], fv.values)
                acc_w[:, fv.indices] += g * g
                model.emission_weights[:, fv.indices] += (
                    config.base_step * g
                    / (np.sqrt(acc_w[:, fv.indices]) + config.eps)
                )
            if len(pw) > 1:
                g = (pc - pf).sum(axis=0)
                acc_t += g * g
                model.transitions += (
                    config.base_step * g / (np.sqrt(acc_t) + config.eps)
                )
            acc_s += du[0] * du[0]
            model.start_scores += (
                config.base_step * du[0] / (np.sqrt(acc_s) + config.eps)
            )
            acc_e += du[-1] * du[-1]
            model.end_scores += (
                config.base_step * du[-1] / (np.sqrt(acc_e) + config.eps)
            )
        # L2 as weight decay, once per epoch (exact at l2=0, clamped at inf)
        if decay < 1.0:
            model.emission_weights *= decay
            model.transitions *= decay
            model.start_scores *= decay
            model.end_scores *= decay

        if has_dev:
            metric = _accuracy(model, dev_windows)
        else:
            metric = total_ll / max(n_labeled, 1)
        logger.debug("epoch %d: train ll/sent %.4f, metric %.4f",
                     epoch, total_ll / max(n_labeled, 1), metric)
        if metric > best_metric + 1e-12:
            best_metric = metric
            best_params = (model.emission_weights.copy(),
                           model.transitions.copy(),
                           model.start_scores.copy(),
                           model.end_scores.copy())
            stale = 0
        else:
            stale += 1
            if stale > config.patience:
                break

    if best_params is not None:
        model.emission_weights, model.transitions, \
            model.start_scores, model.end_scores = best_params
    model.validate()
    return model


def _accuracy(model: SequenceModel, windows: list[PreparedWindow]) -> float:
    correct = 0
    total = 0
    for pw in windows:
        if not (pw.gold >= 0).any():
            continue
        path, _ = viterbi_decode(model, pw)
        for pred, gold in zip(path, pw.gold):
            if gold >= 0:
                total += 1
                correct += int(pred == gold)
    return correct / total if total else 0.0


def log_likelihood_and_gradient(model: SequenceModel,
                                windows: list[PreparedWindow]):
    """Unregularized masked log-likelihood and its full analytic gradient.

    Returns (ll, grad_emission, grad_transitions, grad_start, grad_end);
    the gradient is observed-minus-expected statistics from the clamped and
    free forward-backward passes.
    """
    L = model.num_labels
    D = model.feature_config.dim
    gw = np.zeros((L, D))
    gt = np.zeros((L, L))
    gs = np.zeros(L)
    ge = np.zeros(L)
    ll = 0.0
    for pw in windows:
        emis = emission_matrix(model, pw)
        log_zf, uf, pf = _forward_backward(
            model.transitions, model.start_scores, model.end_scores, emis)
        log_zc, uc, pc = _forward_backward(
            model.transitions, model.start_scores, model.end_scores, emis,
            observed=pw.gold)
        ll += log_zc - log_zf
        du = uc - uf
        for pos, fv in enumerate(pw.features):
            gw[:, fv.indices] += np.outer(du[pos], fv.values)
        if len(pw) > 1:
            gt += (pc - pf).sum(axis=0)
        gs += du[0]
        ge += du[-1]
    return ll, gw, gt, gs, ge


def window_log_likelihood(model: SequenceModel, pw: PreparedWindow) -> float:
    """log p(observed labels | window), masked positions marginalized out."""
    emis = emission_matrix(model, pw)
    log_zc, _, _ = _forward_backward(model.transitions, model.start_scores,
                                     model.end_scores, emis, observed=pw.gold)
    log_zf, _, _ = _forward_backward(model.transitions, model.start_scores,
                                     model.end_scores, emis)
    return log_zc - log_zf
