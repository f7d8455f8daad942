# stats.py
"""Per-phoneme duration histograms, summaries and the mean-KLd metric."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import partial, reduce

import numpy as np
from scipy.special import rel_entr

from core import DurationHistogram, PhonemeInventory, ValidationError, WorkerPool, corpus_frames, total_audio_hours

CSV_HEADER = ("duration", "count")


@dataclass(frozen=True)
class PhonemeStats:
    phoneme: int
    count: int
    mean: float
    variance: float  # population variance
    median: int
    p95: int


@dataclass(frozen=True)
class DurationStats:
    phonemes: dict  # phoneme id -> PhonemeStats
    utterances: int
    tokens: int
    frames: int
    hours: float


@dataclass(frozen=True)
class KldReport:
    per_phoneme: dict  # phoneme id -> KLd(pred || ref)
    mean: float
    epsilon: float
    weighted: bool
    only_pred: tuple  # phonemes seen in predictions but not the reference
    only_ref: tuple


def _histogram_of(corpus, inv: PhonemeInventory | None = None) -> DurationHistogram:
    h = DurationHistogram()
    for u in corpus:
        for p, d in zip(u.phonemes, u.durations):
            if inv is not None:
                inv.symbol_of(p)
            h.add(p, d)
    return h


def build_histograms(corpus, inv: PhonemeInventory | None = None, jobs: int = 1) -> DurationHistogram:
    """With ``jobs`` > 1, contiguous chunks are counted on workers and merged."""
    corpus = list(corpus)
    if jobs <= 1 or len(corpus) < 2:
        return _histogram_of(corpus, inv)
    size = -(-len(corpus) // jobs)
    chunks = [corpus[i:i + size] for i in range(0, len(corpus), size)]
    with WorkerPool(jobs) as pool:
        parts = pool.map(partial(_histogram_of, inv=inv), chunks)
    return reduce(DurationHistogram.merge, parts, DurationHistogram())


def percentile(bins: dict, fraction: float) -> int:
    """Smallest duration whose cumulative count reaches ``fraction`` of the total."""
    total = sum(bins.values())
    if total == 0:
        return 0
    cutoff = fraction * total
    running = 0
    for duration, count in sorted(bins.items()):
        running += count
        if running >= cutoff:
            return duration
    return max(bins)


def _phoneme_stats(p: int, bins: dict) -> PhonemeStats:
    durations = np.array(list(bins), dtype=np.float64)
    counts = np.array(list(bins.values()), dtype=np.float64)
    n = counts.sum()
    mean = float((durations * counts).sum() / n)
    variance = float((counts * (durations - mean) ** 2).sum() / n)
    return PhonemeStats(p, int(n), mean, variance, percentile(bins, 0.5), percentile(bins, 0.95))


def summary(corpus, jobs: int = 1) -> DurationStats:
    corpus = list(corpus)
    h = build_histograms(corpus, jobs=jobs)
    per = {p: _phoneme_stats(p, h.bins(p)) for p in h.phonemes() if h.occurrences(p) > 0}
    return DurationStats(
        phonemes=per,
        utterances=len(corpus),
        tokens=sum(len(u.phonemes) for u in corpus),
        frames=corpus_frames(corpus),
        hours=total_audio_hours(corpus),
    )


def length_ratio(a, b) -> float:
    """Total frames of corpus ``a`` over total frames of corpus ``b``."""
    denom = corpus_frames(b)
    if denom == 0:
        raise ValidationError("reference corpus has no frames")
    return corpus_frames(a) / denom


def kld(pred: DurationHistogram, ref: DurationHistogram, epsilon: float = 0.5, weighted: bool = False) -> KldReport:
    """KL(pred || ref) per phoneme over the union of observed durations, with
    ``epsilon`` added to every support bin of both sides before normalising.

    The mean runs over phonemes present in both histograms; unweighted unless
    ``weighted``, which weights by reference occurrences.
    """
    if not epsilon > 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    if len(ref) == 0 or all(ref.occurrences(p) == 0 for p in ref.phonemes()):
        raise ValidationError("reference histogram is empty")
    common = [p for p in ref.phonemes() if p in pred]
    if not common:
        raise ValidationError("predicted and reference histograms share no phoneme")

    per_phoneme = {}
    for p in common:
        pb, rb = pred.bins(p), ref.bins(p)
        support = sorted(set(pb) | set(rb))
        pc = np.array([pb.get(d, 0) for d in support], dtype=np.float64) + epsilon
        rc = np.array([rb.get(d, 0) for d in support], dtype=np.float64) + epsilon
        # clamp float round-off below zero
        per_phoneme[p] = max(0.0, float(rel_entr(pc / pc.sum(), rc / rc.sum()).sum()))

    values = np.array([per_phoneme[p] for p in common])
    if weighted:
        w = np.array([ref.occurrences(p) for p in common], dtype=np.float64)
        mean = float((values * w).sum() / w.sum()) if w.sum() > 0 else float(values.mean())
    else:
        mean = float(values.mean())
    return KldReport(
        per_phoneme=per_phoneme,
        mean=mean,
        epsilon=epsilon,
        weighted=weighted,
        only_pred=tuple(p for p in pred.phonemes() if p not in ref),
        only_ref=tuple(p for p in ref.phonemes() if p not in pred),
    )


def export_histogram_csv(h: DurationHistogram, phoneme: int) -> str:
    if phoneme not in h:
        raise ValidationError(f"phoneme id {phoneme} not in histogram")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for duration, count in h.bins(phoneme).items():
        writer.writerow((duration, count))
    return buf.getvalue()


def parse_histogram_csv(text: str, phoneme: int) -> DurationHistogram:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValidationError(f"histogram CSV must start with header {','.join(CSV_HEADER)}")
    h = DurationHistogram({phoneme: {}})
    for line_no, row in enumerate(rows[1:], 2):
        if not row:
            continue
        try:
            duration, count = (int(x) for x in row)
        except ValueError:
            raise ValidationError(f"line {line_no}: expected two integers, got {row}") from None
        h.add(phoneme, duration, count)
    return h


def format_summary_table(s: DurationStats, inv: PhonemeInventory) -> str:
    lines = [
        f"utterances={s.utterances} tokens={s.tokens} frames={s.frames} hours={s.hours:.4f}",
        f"{'phoneme':<10}{'count':>8}{'mean':>10}{'var':>10}{'median':>8}{'p95':>6}",
    ]
    for p, st in s.phonemes.items():
        lines.append(
            f"{inv.symbol_of(p):<10}{st.count:>8}{st.mean:>10.3f}{st.variance:>10.3f}{st.median:>8}{st.p95:>6}"
        )
    return "\n".join(lines) + "\n"
