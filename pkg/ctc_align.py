# ctc_align.py
"""CTC-topology forced alignment over precomputed emission log-posteriors."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from core import (
    DEFAULT_FRAME_SHIFT_MS,
    LOG_ZERO,
    AlignedUtterance,
    AlignmentError,
    EmissionMatrix,
    ValidationError,
)

logger = logging.getLogger(__name__)

ATTACH_MODES = ("forward", "backward")


@dataclass(frozen=True)
class CtcLattice:
    """Blank-interleaved label sequence: blank, y1, blank, y2, ..., blank."""

    columns: np.ndarray  # emission column per lattice position, length 2N+1
    skip: np.ndarray  # position s may be entered from s-2

    @classmethod
    def build(cls, label_columns, blank_index: int) -> "CtcLattice":
        label_columns = [int(c) for c in label_columns]
        if blank_index in label_columns:
            raise ValidationError("labels must not contain the blank")
        columns = np.full(2 * len(label_columns) + 1, blank_index, dtype=np.int64)
        columns[1::2] = label_columns
        skip = np.zeros(len(columns), dtype=bool)
        skip[2:] = (columns[2:] != blank_index) & (columns[2:] != columns[:-2])
        for arr in (columns, skip):
            arr.setflags(write=False)
        return cls(columns, skip)

    def __len__(self):
        return len(self.columns)

    @property
    def num_labels(self) -> int:
        return len(self.columns) // 2

    @property
    def min_frames(self) -> int:
        """Labels plus one separating blank per adjacent repeat."""
        labels = self.columns[1::2]
        return len(labels) + int(np.count_nonzero(labels[1:] == labels[:-1]))


def _lattice(e: EmissionMatrix, labels) -> CtcLattice:
    lattice = CtcLattice.build([e.label_column(p) for p in labels], e.blank_index)
    if e.rows < lattice.min_frames:
        raise AlignmentError(f"{e.rows} frames cannot hold {lattice.num_labels} labels (need {lattice.min_frames})")
    return lattice


def _ends(lattice: CtcLattice) -> list:
    return [len(lattice) - 1] + ([len(lattice) - 2] if len(lattice) > 1 else [])


def ctc_forward_logprob(e: EmissionMatrix, labels) -> float:
    """log P(labels | e), summed over every legal CTC path."""
    lattice = _lattice(e, labels)
    scores = e.data[:, lattice.columns]
    alpha = np.full(len(lattice), LOG_ZERO)
    alpha[0] = scores[0, 0]
    if len(lattice) > 1:
        alpha[1] = scores[0, 1]
    cand = np.full((3, len(lattice)), LOG_ZERO)
    for t in range(1, e.rows):
        cand[0] = alpha
        cand[1, 1:] = alpha[:-1]
        cand[2, 2:] = np.where(lattice.skip[2:], alpha[:-2], LOG_ZERO)
        alpha = logsumexp(cand, axis=0) + scores[t]
    return float(logsumexp(alpha[_ends(lattice)]))


def ctc_viterbi_path(e: EmissionMatrix, labels) -> tuple:
    """Best CTC path: (log score, lattice position per frame).

    Ties prefer staying, then advancing by one position.
    """
    lattice = _lattice(e, labels)
    n_pos = len(lattice)
    scores = e.data[:, lattice.columns]
    delta = np.full(n_pos, LOG_ZERO)
    delta[0] = scores[0, 0]
    if n_pos > 1:
        delta[1] = scores[0, 1]
    back = np.zeros((e.rows, n_pos), dtype=np.int8)
    cand = np.full((3, n_pos), LOG_ZERO)
    for t in range(1, e.rows):
        cand[0] = delta
        cand[1, 1:] = delta[:-1]
        cand[2, 2:] = np.where(lattice.skip[2:], delta[:-2], LOG_ZERO)
        choice = np.argmax(cand, axis=0)
        delta = cand[choice, np.arange(n_pos)] + scores[t]
        back[t] = choice
    end = max(_ends(lattice), key=lambda s: (delta[s], s))
    path = np.empty(e.rows, dtype=np.int64)
    path[-1] = end
    for t in range(e.rows - 1, 0, -1):
        path[t - 1] = path[t] - back[t, path[t]]
    return float(delta[end]), path


def floor_blank(e: EmissionMatrix, blank_floor: float) -> EmissionMatrix:
    """Replace the blank column with log(blank_floor); rows are no longer normalized."""
    if not 0.0 < blank_floor <= 1.0:
        raise ValidationError(f"blank floor must lie in (0, 1], got {blank_floor}")
    data = e.data.copy()
    data[:, e.blank_index] = np.log(blank_floor)
    return EmissionMatrix(data, blank_index=e.blank_index, normalized=False)


def attribute_frames(path, attach: str = "forward") -> np.ndarray:
    """Label index per frame; blank runs join the next label (or the previous one)."""
    if attach not in ATTACH_MODES:
        raise ValidationError(f"attach must be one of {ATTACH_MODES}, got {attach!r}")
    path = np.asarray(path)
    owner = np.where(path % 2 == 1, path // 2, -1)
    labelled = np.flatnonzero(owner >= 0)
    if labelled.size == 0:
        raise AlignmentError("path visits no label")
    frames = np.arange(len(path))
    # index of the next / previous labelled frame for every frame
    nxt = np.searchsorted(labelled, frames, side="left")
    prv = np.searchsorted(labelled, frames, side="right") - 1
    if attach == "forward":
        pick = np.where(nxt < labelled.size, nxt, prv)
    else:
        pick = np.where(prv >= 0, prv, nxt)
    return owner[labelled[pick]]


def ctc_viterbi_align(
    e: EmissionMatrix,
    labels,
    blank_floor: float = 1e-8,
    attach: str = "forward",
    utterance_id: str = "",
    frame_shift_ms: float = DEFAULT_FRAME_SHIFT_MS,
) -> AlignedUtterance:
    """Every frame ends up on a label; each label, [space] included, gets at least one frame."""
    labels = tuple(labels)
    if not labels:
        raise AlignmentError(f"{utterance_id}: empty label sequence")
    floored = floor_blank(e, blank_floor)
    score, path = ctc_viterbi_path(floored, labels)
    owners = attribute_frames(path, attach)
    durations = np.bincount(owners, minlength=len(labels))
    logger.debug("%s: CTC path score %.4f over %d frames", utterance_id, score, e.rows)
    return AlignedUtterance(utterance_id, labels, tuple(int(d) for d in durations), frame_shift_ms)
