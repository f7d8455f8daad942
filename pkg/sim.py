# sim.py
"""Desk-scale simulation: a planted reference duration distribution, a
narrowed "predictor" derived from it, and sweeps of constant and random-walk
modification scored by mean KLd and corpus length."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, field, fields
from functools import partial

import numpy as np
from scipy import stats as distributions

import rng
from core import AlignedUtterance, PhonemeInventory, ValidationError, WorkerPool, total_audio_hours
from durmod import RandomWalkConfig, apply_random_walk, constant_scale, round_half_away, substitute_oracle
from stats import build_histograms, kld, length_ratio

logger = logging.getLogger(__name__)

FAMILIES = ("negbinom", "lognormal")
MIN_FRAMES = {"hmm": 3, "ctc": 1}
SWEEP_COLUMNS = ("mode", "parameter", "kld", "hours", "length_ratio")


@dataclass(frozen=True)
class SimConfig:
    phonemes: int = 40
    means: tuple = ()  # empty: evenly spaced from 5 to 14 frames
    dispersion: float = 1.5  # Fano factor of the part above the minimum
    family: str = "negbinom"
    min_style: str = "hmm"
    mean_shrink: float = 0.92
    var_shrink: float = 0.8
    utterances: int = 2000
    utterance_length: int = 50
    seed: int = 0
    frame_shift_ms: float = 12.5
    epsilon: float = 0.5
    sigmas: tuple = (0.0, 0.0125, 0.025, 0.0375, 0.05)
    alphas: tuple = (0.9, 1.0, 1.1, 1.2)
    clip_lo: float = 0.9
    clip_hi: float = 1.2
    oracle: bool = True

    def __post_init__(self):
        for name in ("means", "sigmas", "alphas"):
            object.__setattr__(self, name, tuple(float(x) for x in getattr(self, name)))
        if not self.means:
            object.__setattr__(self, "means", tuple(float(x) for x in np.linspace(5.0, 14.0, self.phonemes)))

    @classmethod
    def from_dict(cls, obj: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(obj) - known)
        if unknown:
            raise ValidationError(f"unknown simulation option(s): {', '.join(unknown)}")
        return cls(**obj).validate()

    def to_dict(self) -> dict:
        out = asdict(self)
        for name in ("means", "sigmas", "alphas"):
            out[name] = list(out[name])
        return out

    @property
    def min_frames(self) -> int:
        return MIN_FRAMES[self.min_style]

    def validate(self) -> "SimConfig":
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown duration family {self.family!r} (choose from {', '.join(FAMILIES)})")
        if self.min_style not in MIN_FRAMES:
            raise ValidationError(f"min_style must be one of {', '.join(MIN_FRAMES)}")
        if self.phonemes < 1 or self.utterances < 1 or self.utterance_length < 1:
            raise ValidationError("phonemes, utterances and utterance_length must be positive")
        if len(self.means) != self.phonemes:
            raise ValidationError(f"{len(self.means)} means given for {self.phonemes} phonemes")
        if min(self.means) < self.min_frames:
            raise ValidationError(f"every mean must be >= the minimum duration {self.min_frames}")
        if self.dispersion < 0:
            raise ValidationError("dispersion must be >= 0")
        for name in ("mean_shrink", "var_shrink"):
            if not 0 < getattr(self, name) <= 1:
                raise ValidationError(f"{name} must lie in (0, 1]")
        RandomWalkConfig(clip_lo=self.clip_lo, clip_hi=self.clip_hi).validate()
        return self


def sim_symbol(i: int) -> str:
    # no trailing stress digit, so from_symbols keeps every name distinct
    return f"PH{i:02d}X"


def sim_inventory(n: int) -> PhonemeInventory:
    return PhonemeInventory.from_symbols(sim_symbol(i) for i in range(n))


def _sample_excess(family: str, mean: float, dispersion: float, u: np.ndarray) -> np.ndarray:
    """Frames above the minimum, by inverse CDF of ``u``."""
    if mean == 0 or dispersion == 0:
        return np.full(u.shape, round_half_away(mean))
    if family == "lognormal":
        s2 = np.log1p(dispersion / mean)
        dist = distributions.lognorm(s=np.sqrt(s2), scale=np.exp(np.log(mean) - s2 / 2))
        return round_half_away(dist.ppf(u))
    if dispersion < 1:
        n = max(1, int(round(mean / (1 - dispersion))))
        dist = distributions.binom(n, mean / n)
    elif dispersion == 1:
        dist = distributions.poisson(mean)
    else:
        dist = distributions.nbinom(mean / (dispersion - 1), 1 / dispersion)
    return dist.ppf(u)


def generate_reference(cfg: SimConfig) -> list:
    """Aligner-like corpus with durations drawn per phoneme from the configured family."""
    cfg.validate()
    inv = sim_inventory(cfg.phonemes)
    ids = np.array([inv.id_of(sim_symbol(i)) for i in range(cfg.phonemes)])
    sequences = ids[np.floor(rng.stream(cfg.seed, "sequence").random((cfg.utterances, cfg.utterance_length))
                             * cfg.phonemes).astype(np.int64)]
    durations = np.zeros(sequences.shape, dtype=np.int64)
    for slot, p in enumerate(ids):
        mask = sequences == p
        count = int(mask.sum())
        if count == 0:
            continue
        u = rng.uniform_open(rng.stream(cfg.seed, "durations", inv.symbol_of(p)), count)
        excess = _sample_excess(cfg.family, cfg.means[slot] - cfg.min_frames, cfg.dispersion, u)
        durations[mask] = cfg.min_frames + excess.astype(np.int64)
    return [
        AlignedUtterance(f"sim{i:05d}", tuple(int(p) for p in seq), tuple(int(d) for d in dur), cfg.frame_shift_ms)
        for i, (seq, dur) in enumerate(zip(sequences, durations))
    ]


def generate_predictions(reference, cfg: SimConfig) -> list:
    """Narrowed predictor: per phoneme d' = round(m*mu + b*(d - mu)) with b = sqrt(var_shrink).

    mu is the phoneme's empirical reference mean, so the corpus shrinks by
    mean_shrink and each phoneme's variance by var_shrink (up to rounding).
    """
    hist = build_histograms(reference)
    means = {}
    for p in hist.phonemes():
        bins = hist.bins(p)
        means[p] = sum(d * c for d, c in bins.items()) / sum(bins.values())
    b = np.sqrt(cfg.var_shrink)
    out = []
    for u in reference:
        mu = np.array([means[p] for p in u.phonemes])
        d = round_half_away(cfg.mean_shrink * mu + b * (np.asarray(u.durations) - mu))
        out.append(u.with_durations(int(x) for x in np.maximum(d, 1)))
    return out


# ---------------- Sweep ----------------
@dataclass(frozen=True)
class SweepRow:
    mode: str
    parameter: str
    kld: float
    hours: float
    length_ratio: float


@dataclass(frozen=True)
class SweepReport:
    rows: tuple = field(default_factory=tuple)

    def row(self, mode: str, parameter=None) -> SweepRow:
        for r in self.rows:
            if r.mode == mode and (parameter is None or r.parameter == _param(parameter)):
                return r
        raise KeyError((mode, parameter))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for r in self.rows:
            writer.writerow((r.mode, r.parameter, repr(r.kld), repr(r.hours), repr(r.length_ratio)))
        return buf.getvalue()


def _param(value) -> str:
    return "" if value is None else repr(float(value))


def _modify(setting, predictions, reference, seed, clip_lo, clip_hi):
    mode, value = setting
    if mode == "baseline":
        return list(predictions)
    if mode == "constant":
        return [constant_scale(u, value) for u in predictions]
    if mode == "walk":
        cfg = RandomWalkConfig(sigma=value, clip_lo=clip_lo, clip_hi=clip_hi, seed=seed)
        return [apply_random_walk(u, cfg) for u in predictions]
    if mode == "oracle":
        return [substitute_oracle(p, r) for p, r in zip(predictions, reference)]
    raise ValidationError(f"unknown sweep mode {mode!r}")


def _score(setting, predictions, reference, ref_hist, seed, clip_lo, clip_hi, epsilon) -> SweepRow:
    modified = _modify(setting, predictions, reference, seed, clip_lo, clip_hi)
    report = kld(build_histograms(modified), ref_hist, epsilon)
    return SweepRow(
        mode=setting[0],
        parameter=_param(setting[1]),
        kld=report.mean,
        hours=total_audio_hours(modified),
        length_ratio=length_ratio(modified, reference),
    )


def run_sweep(reference, predictions, sigmas, alphas, seed: int, *, epsilon: float = 0.5,
              clip_lo: float = 0.9, clip_hi: float = 1.2, oracle: bool = True, jobs: int = 1) -> SweepReport:
    """One row per setting: baseline, each constant factor, each walk sigma, then the oracle."""
    reference, predictions = list(reference), list(predictions)
    if [u.phonemes for u in reference] != [u.phonemes for u in predictions]:
        raise ValidationError("reference and predictions must share phoneme sequences")
    settings = [("baseline", None)]
    settings += [("constant", a) for a in alphas]
    settings += [("walk", s) for s in sigmas]
    if oracle:
        settings.append(("oracle", None))
    score = partial(_score, predictions=predictions, reference=reference, ref_hist=build_histograms(reference),
                    seed=seed, clip_lo=clip_lo, clip_hi=clip_hi, epsilon=epsilon)
    with WorkerPool(jobs) as pool:
        rows = pool.map(score, settings)
    for r in rows:
        logger.info("%-8s %-8s KLd=%.4f hours=%.3f ratio=%.4f", r.mode, r.parameter, r.kld, r.hours, r.length_ratio)
    return SweepReport(tuple(rows))


def simulate(cfg: SimConfig, jobs: int = 1) -> tuple:
    """Reference corpus, predictions and sweep report for one config."""
    reference = generate_reference(cfg)
    predictions = generate_predictions(reference, cfg)
    report = run_sweep(
        reference, predictions, cfg.sigmas, cfg.alphas, cfg.seed,
        epsilon=cfg.epsilon, clip_lo=cfg.clip_lo, clip_hi=cfg.clip_hi, oracle=cfg.oracle, jobs=jobs,
    )
    return reference, predictions, report
