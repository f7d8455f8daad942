import math

import numpy as np
import pytest

from core import AlignedUtterance, DurationHistogram, ValidationError
from stats import (
    build_histograms,
    export_histogram_csv,
    format_summary_table,
    kld,
    length_ratio,
    parse_histogram_csv,
    percentile,
    summary,
)


def _corpus(inv):
    ah, s = inv.id_of("AH"), inv.id_of("S")
    return [
        AlignedUtterance("a", (ah, s, ah), (2, 4, 4)),
        AlignedUtterance("b", (s, ah), (6, 6)),
    ]


def test_histograms_count_every_token(inv):
    h = build_histograms(_corpus(inv), inv)
    assert h.bins(inv.id_of("AH")) == {2: 1, 4: 1, 6: 1}
    assert h.occurrences(inv.id_of("S")) == 2


def test_summary_uses_population_variance(inv):
    s = summary(_corpus(inv))
    ah = s.phonemes[inv.id_of("AH")]
    assert (ah.count, ah.mean, ah.median, ah.p95) == (3, 4.0, 4, 6)
    assert ah.variance == pytest.approx(8.0 / 3.0)
    assert (s.utterances, s.tokens, s.frames) == (2, 5, 22)
    assert s.hours == pytest.approx(22 * 12.5 / 3.6e6)
    table = format_summary_table(s, inv)
    assert table.splitlines()[0].startswith("utterances=2 tokens=5 frames=22")
    assert any(line.startswith("AH ") for line in table.splitlines())


def test_percentile_picks_the_smallest_reaching_duration():
    bins = {1: 1, 2: 1, 3: 1, 4: 1}
    assert percentile(bins, 0.5) == 2
    assert percentile(bins, 0.95) == 4
    assert percentile({}, 0.5) == 0


def test_kld_of_identical_histograms_is_zero(inv):
    h = build_histograms(_corpus(inv))
    report = kld(h, h)
    assert report.mean == pytest.approx(0.0, abs=1e-15)
    assert report.only_pred == report.only_ref == ()


def test_kld_matches_hand_computation():
    pred = DurationHistogram({1: {2: 1}})
    ref = DurationHistogram({1: {3: 1}})
    # smoothed distributions (0.75, 0.25) against (0.25, 0.75)
    assert kld(pred, ref).mean == pytest.approx(0.5 * math.log(3.0))
    assert kld(pred, ref, epsilon=1.0).mean == pytest.approx(
        (2 / 3) * math.log(2.0) + (1 / 3) * math.log(0.5)
    )


def test_kld_mean_covers_common_phonemes_only():
    pred = DurationHistogram({1: {2: 1}, 2: {5: 1}, 7: {1: 1}})
    ref = DurationHistogram({1: {3: 1}, 2: {5: 3}, 9: {4: 1}})
    report = kld(pred, ref)
    assert sorted(report.per_phoneme) == [1, 2]
    assert report.per_phoneme[2] == pytest.approx(0.0)
    assert report.mean == pytest.approx(0.25 * math.log(3.0))
    assert report.only_pred == (7,)
    assert report.only_ref == (9,)
    weighted = kld(pred, ref, weighted=True)
    assert weighted.mean == pytest.approx(0.125 * math.log(3.0))


def test_kld_rejects_degenerate_inputs():
    h = DurationHistogram({1: {2: 1}})
    with pytest.raises(ValidationError, match="epsilon"):
        kld(h, h, epsilon=0.0)
    with pytest.raises(ValidationError, match="empty"):
        kld(h, DurationHistogram())
    with pytest.raises(ValidationError, match="share no phoneme"):
        kld(h, DurationHistogram({2: {2: 1}}))


def test_length_ratio(inv):
    corpus = _corpus(inv)
    longer = [u.with_durations([2 * d for d in u.durations]) for u in corpus]
    assert length_ratio(longer, corpus) == 2.0
    with pytest.raises(ValidationError):
        length_ratio(corpus, [])


def test_histogram_csv_export_and_parse(inv):
    h = build_histograms(_corpus(inv))
    ah = inv.id_of("AH")
    text = export_histogram_csv(h, ah)
    assert text == "duration,count\n2,1\n4,1\n6,1\n"
    assert parse_histogram_csv(text, ah).bins(ah) == h.bins(ah)
    with pytest.raises(ValidationError, match="header"):
        parse_histogram_csv("d,c\n1,2\n", ah)
    with pytest.raises(ValidationError, match="line 2"):
        parse_histogram_csv("duration,count\nx,1\n", ah)
    with pytest.raises(ValidationError, match="not in histogram"):
        export_histogram_csv(h, inv.id_of("ZH"))


def test_kld_of_a_spike_against_a_flat_histogram_tends_to_log_k():
    k = 5
    spike = DurationHistogram({1: {3: 1000}})
    flat = DurationHistogram({1: {d: 200 for d in range(1, k + 1)}})
    assert kld(spike, flat, epsilon=1e-6).mean == pytest.approx(math.log(k), rel=0.01)
    # the reverse direction blows up as the spike's empty bins get less mass
    assert kld(flat, spike, epsilon=1e-6).mean > 5 * math.log(k)


def test_kld_is_asymmetric():
    pred = DurationHistogram({1: {2: 3, 3: 1}})
    ref = DurationHistogram({1: {2: 1, 3: 1, 4: 2}})
    forward = kld(pred, ref).mean
    backward = kld(ref, pred).mean
    assert forward > 0 and backward > 0
    assert forward != pytest.approx(backward)


def test_kld_is_never_negative():
    gen = np.random.default_rng(13)
    for _ in range(10000):
        size = int(gen.integers(1, 6))
        pred = DurationHistogram({1: dict(zip(gen.integers(1, 10, size).tolist(), gen.integers(1, 20, size).tolist()))})
        ref = DurationHistogram({1: dict(zip(gen.integers(1, 10, size).tolist(), gen.integers(1, 20, size).tolist()))})
        assert kld(pred, ref, epsilon=float(gen.uniform(0.01, 1.0))).mean >= 0.0


def test_histograms_do_not_depend_on_utterance_order(inv):
    gen = np.random.default_rng(3)
    ah, s, iy = inv.encode(["AH", "S", "IY"])
    corpus = [
        AlignedUtterance(f"u{i}", (ah, s, iy), tuple(gen.integers(1, 15, 3).tolist()))
        for i in range(50)
    ]
    reordered = [corpus[i] for i in gen.permutation(len(corpus))]
    h = build_histograms(corpus)
    assert build_histograms(reordered) == h
    assert build_histograms(reordered, jobs=3) == h
