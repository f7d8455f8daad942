# durmod.py
"""Synthesis-time duration modification: constant scaling, random-walk scaling
and oracle substitution."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

import rng
from core import AlignedUtterance, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RandomWalkConfig:
    sigma: float = 0.025
    clip_lo: float = 0.9
    clip_hi: float = 1.2
    seed: int = 0
    min_duration: int = 0

    def validate(self) -> "RandomWalkConfig":
        if not self.sigma >= 0:
            raise ValidationError(f"sigma must be >= 0, got {self.sigma}")
        if not self.clip_lo <= 1.0 <= self.clip_hi:
            raise ValidationError(f"clip range [{self.clip_lo}, {self.clip_hi}] must contain 1")
        if self.min_duration < 0:
            raise ValidationError(f"min_duration must be >= 0, got {self.min_duration}")
        return self


@dataclass(frozen=True)
class ScaleSequence:
    raw: np.ndarray  # centred, before clipping
    alphas: np.ndarray  # clipped

    def __len__(self):
        return len(self.alphas)


def utterance_stream(seed: int, utterance_id: str) -> np.random.Generator:
    """Independent stream per utterance, so results do not depend on corpus order or job count."""
    return rng.stream(seed, "walk", utterance_id)


def random_walk_scales(n: int, cfg: RandomWalkConfig, gen: np.random.Generator | None = None) -> ScaleSequence:
    """Scales from a Gaussian random walk, centred on 1 and clipped.

    The walk starts at 0 and takes one step per phoneme; the n visited values
    (the start excluded) are shifted so their mean is exactly 1.
    """
    if n < 1:
        raise ValidationError("random walk needs at least one phoneme")
    cfg.validate()
    if gen is None:
        gen = rng.stream(cfg.seed, "walk")
    walk = np.cumsum(rng.gaussian(gen, n) * cfg.sigma)
    raw = 1.0 + (walk - walk.mean())
    alphas = np.clip(raw, cfg.clip_lo, cfg.clip_hi)
    raw.setflags(write=False)
    alphas.setflags(write=False)
    return ScaleSequence(raw, alphas)


def round_half_away(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _scaled(u: AlignedUtterance, factors, min_duration: int) -> AlignedUtterance:
    d = round_half_away(np.asarray(u.durations, dtype=np.float64) * factors)
    d = np.maximum(d, min_duration).astype(np.int64)
    return u.with_durations(int(x) for x in d)


def constant_scale(u: AlignedUtterance, alpha: float, min_duration: int = 0) -> AlignedUtterance:
    if not alpha > 0:
        raise ValidationError(f"scale factor must be positive, got {alpha}")
    return _scaled(u, alpha, min_duration)


def apply_random_walk(u: AlignedUtterance, cfg: RandomWalkConfig) -> AlignedUtterance:
    if not u.phonemes:
        return u
    scales = random_walk_scales(len(u.phonemes), cfg, utterance_stream(cfg.seed, u.utterance_id))
    return _scaled(u, scales.alphas, cfg.min_duration)


def substitute_oracle(predicted: AlignedUtterance, reference: AlignedUtterance) -> AlignedUtterance:
    if predicted.phonemes != reference.phonemes:
        raise ValidationError(
            f"{predicted.utterance_id}: phoneme sequence differs from reference {reference.utterance_id}"
        )
    return predicted.with_durations(reference.durations)


def substitute_corpus(predicted, reference) -> list:
    """Oracle substitution matched by utterance id."""
    by_id = {u.utterance_id: u for u in reference}
    out = []
    for u in predicted:
        if u.utterance_id not in by_id:
            raise ValidationError(f"{u.utterance_id}: no reference alignment")
        out.append(substitute_oracle(u, by_id[u.utterance_id]))
    return out
