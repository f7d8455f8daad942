# upsample.py
"""Gaussian upsampling of phoneme-level vectors to frame level."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from core import FeatureMatrix, ValidationError


@dataclass(frozen=True)
class UpsampleWeights:
    matrix: np.ndarray  # (T, N), rows sum to 1
    centers: np.ndarray  # (N,)

    @property
    def frames(self) -> int:
        return self.matrix.shape[0]

    @property
    def phonemes(self) -> int:
        return self.matrix.shape[1]


def gaussian_upsample_weights(durations, sigma_g: float = 1.0) -> UpsampleWeights:
    """W[t, n] proportional to exp(-(t + 0.5 - c_n)^2 / (2 sigma_g^2)), normalised over n.

    c_n is the midpoint of phoneme n's segment. Zero-duration phonemes own no
    frame but still sit on the time axis and attract weight.
    """
    d = np.asarray(durations, dtype=np.float64)
    if d.ndim != 1 or d.size == 0:
        raise ValidationError("durations must be a non-empty sequence")
    if np.any(d < 0):
        raise ValidationError("durations must be non-negative")
    if not sigma_g > 0:
        raise ValidationError(f"sigma_g must be positive, got {sigma_g}")
    total = int(d.sum())
    if total < 1:
        raise ValidationError("all durations are zero; nothing to upsample")
    centers = np.cumsum(d) - d / 2.0
    t = np.arange(total, dtype=np.float64)[:, None] + 0.5
    logits = -((t - centers[None, :]) ** 2) / (2.0 * sigma_g ** 2)
    matrix = softmax(logits, axis=1)
    matrix.setflags(write=False)
    centers.setflags(write=False)
    return UpsampleWeights(matrix, centers)


def upsample_states(h: FeatureMatrix, w: UpsampleWeights) -> FeatureMatrix:
    if h.rows != w.phonemes:
        raise ValidationError(f"{h.rows} state rows but weights cover {w.phonemes} phonemes")
    return FeatureMatrix(w.matrix @ h.data)
