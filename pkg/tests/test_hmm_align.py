import numpy as np
import pytest

from core import SPACE, AlignmentError, FeatureMatrix, FormatError, ValidationError, validate_utterance
from hmm_align import (
    FrameAlignment,
    HmmModel,
    TrainingOptions,
    TrainingUtterance,
    align_corpus,
    alignment_from_obj,
    alignment_to_obj,
    extract_durations,
    flat_start,
    linear_segment_init,
    model_from_json,
    model_to_json,
    new_model,
    path_log_prob,
    speech_mask,
    split_mixtures,
    train_monophone,
    trim_silence,
    viterbi_align,
)


def _corpus(planted_utts, inv):
    return [TrainingUtterance(u.utterance_id, FeatureMatrix(u.data), inv.encode(u.symbols)) for u in planted_utts]


def _random_model(inv, gen, symbols=("AH", "S"), dim=2):
    base = new_model(inv.encode(symbols), inv.silence_id, np.zeros(dim), np.ones(dim), np.full(dim, 1e-3))
    return HmmModel(
        base.phonemes, base.silence_id, base.weights,
        gen.normal(0.0, 2.0, base.means.shape),
        gen.uniform(0.5, 2.0, base.variances.shape),
        gen.uniform(0.2, 0.8, base.n_states),
        base.variance_floor,
    )


def _all_position_paths(n_frames, n_pos):
    """Every monotone sequence with steps 0, 1 or 2 starting at 0 or 1."""
    out = []

    def walk(path):
        if len(path) == n_frames:
            out.append(list(path))
            return
        for step in (0, 1, 2):
            nxt = path[-1] + step
            if nxt < n_pos:
                walk(path + [nxt])

    for start in (0, 1):
        if start < n_pos:
            walk([start])
    return out


@pytest.mark.parametrize(
    "symbols, n_frames",
    [
        (("AH",), 5),
        (("AH", "S"), 7),
        ((SPACE, "AH"), 6),
        (("AH", SPACE, "S"), 7),
        (("S", SPACE), 5),
    ],
)
@pytest.mark.parametrize("allow", [True, False])
def test_viterbi_matches_exhaustive_search(inv, symbols, n_frames, allow):
    gen = np.random.default_rng([n_frames, len(symbols), int(allow)])
    model = _random_model(inv, gen)
    f = FeatureMatrix(gen.normal(0.0, 2.0, (n_frames, 2)))
    phonemes = inv.encode(symbols)
    n_pos = sum(1 if s == SPACE else 3 for s in symbols)
    best = max(path_log_prob(model, f, phonemes, p, allow) for p in _all_position_paths(n_frames, n_pos))
    a = viterbi_align(model, f, phonemes, allow)
    assert a.score == pytest.approx(best, rel=1e-12, abs=1e-9)
    assert len(a.states) == n_frames


def test_path_log_prob_rejects_illegal_paths(inv):
    gen = np.random.default_rng(3)
    model = _random_model(inv, gen)
    f = FeatureMatrix(gen.normal(size=(4, 2)))
    ah = inv.encode(["AH"])
    assert path_log_prob(model, f, ah, [0, 1, 1, 2]) > -1e20
    assert path_log_prob(model, f, ah, [0, 2, 2, 2]) == -1e30  # skip over an emitting state
    assert path_log_prob(model, f, ah, [0, 1, 1, 1]) == -1e30  # never reaches the last state
    assert path_log_prob(model, f, ah, [0, 1, 2]) == -1e30


def test_optional_silence_is_skipped_when_it_does_not_fit(inv):
    gen = np.random.default_rng(0)
    model = _random_model(inv, gen, dim=1)
    means = np.array(model.means)
    means[model.silence_state] = 100.0
    model = HmmModel(model.phonemes, model.silence_id, model.weights, means,
                     model.variances, model.loop_probs, model.variance_floor)
    f = FeatureMatrix(gen.normal(0.0, 1.0, (12, 1)))
    phonemes = inv.encode(["AH", SPACE, "S"])

    skipped = extract_durations(viterbi_align(model, f, phonemes), inv)
    assert skipped.durations[1] == 0
    assert sum(skipped.durations) == 12
    validate_utterance(skipped, inv, hmm_derived=True)

    forced = extract_durations(viterbi_align(model, f, phonemes, allow_optional_silence=False), inv)
    assert forced.durations[1] >= 1
    assert min(forced.durations) >= 1


def test_viterbi_errors(inv):
    gen = np.random.default_rng(1)
    model = _random_model(inv, gen)
    with pytest.raises(AlignmentError, match="cannot hold"):
        viterbi_align(model, FeatureMatrix(np.zeros((5, 2))), inv.encode(["AH", "S"]))
    with pytest.raises(AlignmentError, match="consecutive"):
        viterbi_align(model, FeatureMatrix(np.zeros((9, 2))), inv.encode(["AH", SPACE, SPACE, "S"]))
    with pytest.raises(AlignmentError, match="no states"):
        viterbi_align(model, FeatureMatrix(np.zeros((9, 2))), inv.encode(["IY"]))
    with pytest.raises(AlignmentError, match="dims"):
        viterbi_align(model, FeatureMatrix(np.zeros((9, 3))), inv.encode(["AH"]))


def test_minimum_frames_gives_one_frame_per_state(inv):
    model = _random_model(inv, np.random.default_rng(2))
    a = viterbi_align(model, FeatureMatrix(np.zeros((6, 2))), inv.encode(["AH", SPACE, "S"]))
    assert extract_durations(a, inv).durations == (3, 0, 3)


def test_speech_mask_and_trim():
    f = FeatureMatrix([[-80.0, 1.0], [-10.0, 2.0], [0.0, 3.0], [-5.0, 4.0], [-90.0, 5.0]])
    assert speech_mask(f, 0, -50.0).tolist() == [False, True, True, True, False]
    np.testing.assert_array_equal(trim_silence(f, 0, -50.0).data[:, 1], [2.0, 3.0, 4.0])
    with pytest.raises(ValidationError, match="silence threshold"):
        trim_silence(FeatureMatrix(np.full((4, 2), -100.0)), 0, -50.0)
    with pytest.raises(ValidationError, match="energy dimension"):
        speech_mask(f, 2, -50.0)


def test_linear_segmentation_splits_speech_evenly(inv):
    energy = [-90.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -90.0]
    f = FeatureMatrix(np.column_stack([energy, np.zeros(9)]))
    a = linear_segment_init(f, inv.encode(["AH", "S"]), 0, -50.0, inv)
    assert a.tokens == (-1, 0, 0, 0, 0, 1, 1, 1, -1)
    assert a.states[0] == a.states[-1] == 6
    assert extract_durations(a, inv).num_frames == 9


def test_extract_durations_folds_unattributed_silence(inv):
    a = FrameAlignment("u", inv.encode(["AH", "S"]), (6, 6, 0, 1, 6, 3), (-1, -1, 0, 0, -1, 1), inv.silence_id)
    assert extract_durations(a, inv).durations == (5, 1)
    assert [(s.token, s.duration) for s in a.segments] == [(-1, 2), (0, 2), (-1, 1), (1, 1)]


def test_frame_alignment_objects_round_trip(inv):
    a = FrameAlignment("u", inv.encode(["AH", SPACE]), (0, 1, 2, 6), (0, 0, 0, 1), inv.silence_id, score=-3.5)
    assert alignment_from_obj(alignment_to_obj(a, inv), inv) == a
    bad = alignment_to_obj(a, inv)
    bad["tokens"] = [0, 0, 5, 1]
    with pytest.raises(FormatError, match="outside the transcript"):
        alignment_from_obj(bad, inv, path="a.jsonl", line=4)


def test_model_json_round_trip(inv):
    model = _random_model(inv, np.random.default_rng(4))
    back = model_from_json(model_to_json(model, inv), inv)
    assert back.phonemes == model.phonemes
    for name in ("weights", "means", "variances", "loop_probs", "variance_floor"):
        np.testing.assert_array_equal(getattr(back, name), getattr(model, name))
    with pytest.raises(FormatError, match="not a durkit-hmm"):
        model_from_json({"format": "other"}, inv)


def test_model_rejects_inconsistent_arrays(inv):
    model = _random_model(inv, np.random.default_rng(5))
    with pytest.raises(ValidationError, match="loop"):
        HmmModel(model.phonemes, model.silence_id, model.weights, model.means,
                 model.variances, np.ones(model.n_states), model.variance_floor)
    with pytest.raises(ValidationError, match="weights"):
        HmmModel(model.phonemes, model.silence_id, model.weights * 2, model.means,
                 model.variances, model.loop_probs, model.variance_floor)


def test_split_doubles_components_around_the_old_mean(inv):
    model = _random_model(inv, np.random.default_rng(6))
    split = split_mixtures(model, max_gaussians=4, seed=9)
    assert split.n_components == 2
    np.testing.assert_allclose(split.weights.sum(axis=1), 1.0)
    np.testing.assert_allclose(split.means.mean(axis=1), model.means[:, 0])
    np.testing.assert_array_equal(split_mixtures(model, 4, seed=9).means, split.means)
    assert split_mixtures(split, max_gaussians=3) is split


def test_flat_start_when_no_iterations(planted, inv):
    corpus = _corpus(planted(utterances=3), inv)
    model = train_monophone(corpus, inv, TrainingOptions(em_iters=0, split_iters=0))
    stacked = np.vstack([u.features.data for u in corpus])
    np.testing.assert_allclose(model.means[:, 0], np.broadcast_to(stacked.mean(axis=0), (model.n_states, 2)))
    assert model.history == ()
    np.testing.assert_array_equal(model.loop_probs, 0.5)


def test_first_iteration_reestimates_from_linear_segmentation(planted, inv):
    corpus = _corpus(planted(utterances=6, seed=2), inv)
    model = train_monophone(corpus, inv, TrainingOptions(em_iters=1, split_iters=0))
    frames = {}
    for u in corpus:
        seg = linear_segment_init(u.features, u.phonemes, 0, -50.0, inv, layout=model.phonemes)
        for state, row in zip(seg.states, u.features.data):
            frames.setdefault(state, []).append(row)
    for state, rows in frames.items():
        np.testing.assert_allclose(model.means[state, 0], np.mean(rows, axis=0), rtol=1e-9)
    assert len(model.history) == 1


def test_planted_corpus_is_recovered(planted, inv):
    utts = planted(utterances=15, seed=7)
    corpus = _corpus(utts, inv)
    model = train_monophone(corpus, inv, TrainingOptions(em_iters=8, split_iters=0))
    correct = total = 0
    for u, a in zip(utts, align_corpus(model, corpus, inv)):
        truth = [model.state_index(p, k) for p, k in u.truth]
        correct += sum(s == t for s, t in zip(a.states, truth))
        total += len(truth)
    assert correct / total >= 0.95


def test_em_objective_never_decreases(planted, inv):
    corpus = _corpus(planted(utterances=9, seed=11), inv)
    model = train_monophone(corpus, inv, TrainingOptions(em_iters=6, split_iters=0))
    objectives = [h.objective for h in model.history]
    assert len(objectives) == 6
    assert all(b >= a - 1e-9 for a, b in zip(objectives, objectives[1:]))


def test_history_tracks_phases_and_mixture_sizes(planted, inv):
    corpus = _corpus(planted(utterances=6, seed=3), inv)
    opts = TrainingOptions(em_iters=2, split_iters=2, split_em_iters=1, max_gaussians=2)
    model = train_monophone(corpus, inv, opts)
    assert [h.phase for h in model.history] == ["em", "em", "split", "split"]
    assert [h.components for h in model.history] == [1, 1, 2, 2]
    more = train_monophone(corpus, inv, TrainingOptions(em_iters=1, split_iters=0), init_model=model)
    assert len(more.history) == 5


def test_uncovered_phoneme_is_rejected(planted, inv):
    corpus = _corpus(planted(utterances=3), inv)
    model = flat_start(corpus, inv)
    extra = TrainingUtterance("x", FeatureMatrix(np.zeros((9, 2))), inv.encode(["IY"]))
    with pytest.raises(AlignmentError, match="not covered"):
        train_monophone(corpus + [extra], inv, init_model=model)


def test_parallel_training_is_identical(planted, inv):
    corpus = _corpus(planted(utterances=6, seed=5), inv)
    serial = train_monophone(corpus, inv, TrainingOptions(em_iters=2, split_iters=1, split_em_iters=1, jobs=1))
    parallel = train_monophone(corpus, inv, TrainingOptions(em_iters=2, split_iters=1, split_em_iters=1, jobs=2))
    np.testing.assert_array_equal(serial.means, parallel.means)
    np.testing.assert_array_equal(serial.variances, parallel.variances)
    assert serial.history == parallel.history
