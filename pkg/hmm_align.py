# hmm_align.py
"""Monophone HMM-GMM forced aligner.

Topology: three emitting states per phoneme, strictly left to right with
self-loops, and one shared silence state that lives at ``[space]`` tokens.
With optional silence the aligner may skip a ``[space]`` entirely; the
token then comes out of ``extract_durations`` with duration 0.

Training is Viterbi (hard-assignment) EM: realign, then re-estimate the
per-state diagonal Gaussian mixtures and loop probabilities from the aligned
frames.
"""

from __future__ import annotations

import logging
from collections import namedtuple
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.special import logsumexp

import rng
from core import (
    DEFAULT_FRAME_SHIFT_MS,
    LOG_ZERO,
    AlignedUtterance,
    AlignmentError,
    FeatureMatrix,
    FormatError,
    PhonemeInventory,
    ValidationError,
    WorkerPool,
)

logger = logging.getLogger(__name__)

STATES_PER_PHONEME = 3
LOOP_PROB_RANGE = (0.01, 0.99)
SPLIT_OFFSET = 0.2
MIN_VARIANCE = 1e-8
MODEL_FORMAT = "durkit-hmm"
MODEL_VERSION = 1

# one row of HmmModel.history: per-frame Viterbi log-likelihood after an M-step
IterationRecord = namedtuple("IterationRecord", "phase iteration components objective")


# ---------------- Model ----------------
@dataclass(frozen=True)
class HmmModel:
    phonemes: tuple  # modeled (non-space) phoneme ids, sorted
    silence_id: int
    weights: np.ndarray  # (S, K)
    means: np.ndarray  # (S, K, D)
    variances: np.ndarray  # (S, K, D)
    loop_probs: np.ndarray  # (S,)
    variance_floor: np.ndarray  # (D,)
    history: tuple = ()
    _slots: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "phonemes", tuple(int(p) for p in self.phonemes))
        for name in ("weights", "means", "variances", "loop_probs", "variance_floor"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_slots", {p: i for i, p in enumerate(self.phonemes)})
        n_states = STATES_PER_PHONEME * len(self.phonemes) + 1
        if self.weights.shape[0] != n_states or self.means.shape[:2] != self.weights.shape:
            raise ValidationError(f"model arrays do not match {n_states} states")
        if self.variances.shape != self.means.shape or self.loop_probs.shape != (n_states,):
            raise ValidationError("model variance/transition arrays have the wrong shape")
        if np.any(np.abs(self.weights.sum(axis=1) - 1.0) > 1e-9):
            raise ValidationError("mixture weights must sum to 1 per state")
        if np.any(self.variance_floor <= 0) or np.any(self.variances < self.variance_floor):
            raise ValidationError("variances must respect a positive variance floor")
        if np.any(self.loop_probs <= 0) or np.any(self.loop_probs >= 1):
            raise ValidationError("loop probabilities must lie strictly inside (0, 1)")

    @property
    def n_states(self) -> int:
        return self.weights.shape[0]

    @property
    def n_components(self) -> int:
        return self.weights.shape[1]

    @property
    def dim(self) -> int:
        return self.means.shape[2]

    @property
    def silence_state(self) -> int:
        return self.n_states - 1

    def covers(self, phoneme_id: int) -> bool:
        return phoneme_id in self._slots

    def state_index(self, phoneme_id: int, k: int) -> int:
        try:
            return STATES_PER_PHONEME * self._slots[phoneme_id] + k
        except KeyError:
            raise AlignmentError(f"model has no states for phoneme id {phoneme_id}") from None

    def log_emissions(self, data: np.ndarray, states=None) -> np.ndarray:
        """(T, len(states)) log-likelihoods of every frame under each state's mixture."""
        return logsumexp(self.component_log_likelihoods(data, states), axis=2)

    def component_log_likelihoods(self, data: np.ndarray, states=None) -> np.ndarray:
        """(T, S', K) weighted log densities log w_k + log N(x; mu_k, var_k)."""
        if states is None:
            states = np.arange(self.n_states)
        states = np.asarray(states)
        mu = self.means[states]  # (S', K, D)
        var = self.variances[states]
        precision = 1.0 / var
        with np.errstate(divide="ignore"):
            log_w = np.log(self.weights[states])
        log_norm = -0.5 * (self.dim * np.log(2.0 * np.pi) + np.log(var).sum(axis=2))
        s, k = mu.shape[:2]
        # (x - mu)^2 / var summed over D, expanded into matrix products
        quad = (
            (data ** 2) @ precision.reshape(s * k, -1).T
            - 2.0 * data @ (mu * precision).reshape(s * k, -1).T
            + (mu ** 2 * precision).sum(axis=2).reshape(1, s * k)
        )
        return (log_w + log_norm)[None, :, :] - 0.5 * quad.reshape(len(data), s, k)


def new_model(phonemes, silence_id, mean, variance, floor, components=1) -> HmmModel:
    """Every state starts from the same single (or replicated) Gaussian, loop 0.5."""
    n_states = STATES_PER_PHONEME * len(phonemes) + 1
    dim = len(mean)
    return HmmModel(
        phonemes=tuple(sorted(phonemes)),
        silence_id=silence_id,
        weights=np.full((n_states, components), 1.0 / components),
        means=np.broadcast_to(mean, (n_states, components, dim)),
        variances=np.broadcast_to(np.maximum(variance, floor), (n_states, components, dim)),
        loop_probs=np.full(n_states, 0.5),
        variance_floor=floor,
    )


def model_to_json(model: HmmModel, inv: PhonemeInventory) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "phonemes": inv.decode(model.phonemes),
        "silence": inv.symbol_of(model.silence_id),
        "weights": model.weights.tolist(),
        "means": model.means.tolist(),
        "variances": model.variances.tolist(),
        "loop_probs": model.loop_probs.tolist(),
        "variance_floor": model.variance_floor.tolist(),
        "history": [list(h) for h in model.history],
    }


def model_from_json(obj: dict, inv: PhonemeInventory, path=None) -> HmmModel:
    if not isinstance(obj, dict):
        raise FormatError("model must be a JSON object", path=path)
    if obj.get("format") != MODEL_FORMAT:
        raise FormatError(f"not a {MODEL_FORMAT} model", path=path)
    if obj.get("version") != MODEL_VERSION:
        raise FormatError(f"unsupported model version {obj.get('version')}", path=path)
    try:
        return HmmModel(
            phonemes=inv.encode(obj["phonemes"]),
            silence_id=inv.id_of(obj["silence"]),
            weights=obj["weights"],
            means=obj["means"],
            variances=obj["variances"],
            loop_probs=obj["loop_probs"],
            variance_floor=obj["variance_floor"],
            history=tuple(IterationRecord(*h) for h in obj.get("history", ())),
        )
    except KeyError as e:
        raise FormatError(f"model is missing {e.args[0]!r}", path=path) from None
    except (ValidationError, ValueError, TypeError) as e:
        raise FormatError(str(e), path=path) from None


# ---------------- Alignments ----------------
@dataclass(frozen=True)
class Segment:
    token: int  # transcript index, -1 for silence outside any [space] token
    phoneme: int
    start: int
    duration: int


@dataclass(frozen=True)
class FrameAlignment:
    utterance_id: str
    phonemes: tuple  # transcript ids
    states: tuple  # model state per frame
    tokens: tuple  # transcript index per frame, -1 = unattributed silence
    silence_id: int
    score: float = 0.0
    frame_shift_ms: float = DEFAULT_FRAME_SHIFT_MS

    @property
    def num_frames(self) -> int:
        return len(self.states)

    @property
    def segments(self) -> list:
        out = []
        start = 0
        for t in range(1, len(self.tokens) + 1):
            if t == len(self.tokens) or self.tokens[t] != self.tokens[start]:
                tok = self.tokens[start]
                phoneme = self.phonemes[tok] if tok >= 0 else self.silence_id
                out.append(Segment(tok, phoneme, start, t - start))
                start = t
        return out


def alignment_to_obj(a: FrameAlignment, inv: PhonemeInventory) -> dict:
    return {
        "id": a.utterance_id,
        "phonemes": inv.decode(a.phonemes),
        "states": list(a.states),
        "tokens": list(a.tokens),
        "score": a.score,
        "frame_shift_ms": a.frame_shift_ms,
    }


def alignment_from_obj(obj: dict, inv: PhonemeInventory, path=None, line=None) -> FrameAlignment:
    try:
        a = FrameAlignment(
            utterance_id=str(obj["id"]),
            phonemes=inv.encode(obj["phonemes"]),
            states=tuple(int(s) for s in obj["states"]),
            tokens=tuple(int(t) for t in obj["tokens"]),
            silence_id=inv.silence_id,
            score=float(obj.get("score", 0.0)),
            frame_shift_ms=float(obj.get("frame_shift_ms", DEFAULT_FRAME_SHIFT_MS)),
        )
    except KeyError as e:
        raise FormatError(f"missing field {e.args[0]!r}", path=path, line=line) from None
    except (ValidationError, ValueError, TypeError) as e:
        raise FormatError(str(e), path=path, line=line) from None
    if len(a.states) != len(a.tokens) or not a.states:
        raise FormatError("'states' and 'tokens' must be non-empty and equally long", path=path, line=line)
    if any(not -1 <= t < len(a.phonemes) for t in a.tokens):
        raise FormatError("token index outside the transcript", path=path, line=line)
    return a


# ---------------- Silence handling ----------------
def speech_mask(f: FeatureMatrix, energy_dim: int, threshold_db: float) -> np.ndarray:
    """True for frames whose energy (dB) is within ``threshold_db`` of the utterance peak.

    The peak is never taken below 0 dB, so an utterance that stays under
    ``threshold_db`` throughout is all silence.
    """
    if not 0 <= energy_dim < f.cols:
        raise ValidationError(f"energy dimension {energy_dim} outside {f.cols} feature columns")
    energy = f.data[:, energy_dim]
    return (energy - max(float(energy.max()), 0.0)) >= threshold_db


def trim_silence(f: FeatureMatrix, energy_dim: int, threshold_db: float) -> FeatureMatrix:
    speech = np.flatnonzero(speech_mask(f, energy_dim, threshold_db))
    if speech.size == 0:
        raise ValidationError("every frame is below the silence threshold; nothing left after trim")
    first, last = speech[0], speech[-1]
    if first == 0 and last == f.rows - 1:
        return f
    return FeatureMatrix(f.data[first:last + 1])


# ---------------- Topology ----------------
@dataclass(frozen=True)
class _Topology:
    tokens: np.ndarray  # transcript index per position
    states: np.ndarray  # model state per position
    skippable: np.ndarray  # optional silence positions


def _topology(model: HmmModel, phonemes, inv_space, allow_optional_silence) -> _Topology:
    tokens, states, skippable = [], [], []
    for n, p in enumerate(phonemes):
        if p in inv_space:
            if n > 0 and phonemes[n - 1] in inv_space:
                raise AlignmentError(f"consecutive [space] tokens at positions {n - 1} and {n}")
            tokens.append(n)
            states.append(model.silence_state)
            skippable.append(allow_optional_silence)
        else:
            for k in range(STATES_PER_PHONEME):
                tokens.append(n)
                states.append(model.state_index(p, k))
                skippable.append(False)
    if not tokens:
        raise AlignmentError("empty transcript")
    return _Topology(np.array(tokens), np.array(states), np.array(skippable, dtype=bool))


def _space_ids(model: HmmModel, space_ids):
    return frozenset(space_ids) if space_ids is not None else frozenset({model.silence_id})


def _transition_logs(model: HmmModel, states):
    loop = model.loop_probs[states]
    return np.log(loop), np.log1p(-loop)


def path_log_prob(model, f: FeatureMatrix, phonemes, positions, allow_optional_silence=True, space_ids=None):
    """Score an explicit per-frame position path; LOG_ZERO if the path is illegal."""
    top = _topology(model, tuple(phonemes), _space_ids(model, space_ids), allow_optional_silence)
    positions = list(positions)
    if len(positions) != f.rows:
        return LOG_ZERO
    last = len(top.states) - 1
    starts = {0} | ({1} if top.skippable[0] and last >= 1 else set())
    ends = {last} | ({last - 1} if top.skippable[last] and last >= 1 else set())
    if positions[0] not in starts or positions[-1] not in ends:
        return LOG_ZERO
    emissions = model.log_emissions(f.data, top.states)
    log_loop, log_fwd = _transition_logs(model, top.states)
    score = emissions[0, positions[0]]
    for t in range(1, len(positions)):
        prev, cur = positions[t - 1], positions[t]
        step = cur - prev
        if step == 0:
            score += log_loop[prev]
        elif step == 1:
            score += log_fwd[prev]
        elif step == 2 and top.skippable[prev + 1]:
            score += log_fwd[prev]
        else:
            return LOG_ZERO
        score += emissions[t, cur]
    return float(score)


# ---------------- Viterbi ----------------
def viterbi_align(
    model: HmmModel,
    f: FeatureMatrix,
    phonemes,
    allow_optional_silence: bool = True,
    utterance_id: str = "",
    space_ids=None,
    frame_shift_ms: float = DEFAULT_FRAME_SHIFT_MS,
) -> FrameAlignment:
    phonemes = tuple(phonemes)
    top = _topology(model, phonemes, _space_ids(model, space_ids), allow_optional_silence)
    n_pos = len(top.states)
    n_frames = f.rows
    required = int(np.count_nonzero(~top.skippable))
    if n_frames < required:
        raise AlignmentError(f"{utterance_id}: {n_frames} frames cannot hold {required} mandatory states")
    if f.cols != model.dim:
        raise AlignmentError(f"{utterance_id}: features have {f.cols} dims, model expects {model.dim}")

    emissions = model.log_emissions(f.data, top.states)
    if not np.all(np.isfinite(emissions)):
        raise AlignmentError(f"{utterance_id}: non-finite emission scores")
    log_loop, log_fwd = _transition_logs(model, top.states)
    # a skip into position j is allowed when position j-1 is optional silence
    skip_ok = np.zeros(n_pos, dtype=bool)
    skip_ok[2:] = top.skippable[1:-1]

    delta = np.full(n_pos, LOG_ZERO)
    delta[0] = emissions[0, 0]
    if top.skippable[0] and n_pos > 1:
        delta[1] = emissions[0, 1]
    back = np.zeros((n_frames, n_pos), dtype=np.int8)
    cand = np.full((3, n_pos), LOG_ZERO)
    for t in range(1, n_frames):
        cand[0] = delta + log_loop
        cand[1, 1:] = delta[:-1] + log_fwd[:-1]
        cand[2, 2:] = np.where(skip_ok[2:], delta[:-2] + log_fwd[:-2], LOG_ZERO)
        choice = np.argmax(cand, axis=0)
        delta = cand[choice, np.arange(n_pos)] + emissions[t]
        back[t] = choice

    ends = [n_pos - 1]
    if top.skippable[-1] and n_pos > 1:
        ends.append(n_pos - 2)
    end = max(ends, key=lambda j: (delta[j], j))
    score = float(delta[end])
    if not np.isfinite(score) or score <= LOG_ZERO / 2:
        raise AlignmentError(f"{utterance_id}: no feasible path through the transcript")

    path = np.empty(n_frames, dtype=np.int64)
    path[-1] = end
    for t in range(n_frames - 1, 0, -1):
        path[t - 1] = path[t] - back[t, path[t]]
    return FrameAlignment(
        utterance_id=utterance_id,
        phonemes=phonemes,
        states=tuple(int(s) for s in top.states[path]),
        tokens=tuple(int(k) for k in top.tokens[path]),
        silence_id=model.silence_id,
        score=score,
        frame_shift_ms=frame_shift_ms,
    )


# ---------------- Initialisation ----------------
def state_layout(phonemes, space_ids) -> tuple:
    return tuple(sorted({p for p in phonemes if p not in space_ids}))


def linear_segment_init(
    f: FeatureMatrix,
    phonemes,
    energy_dim: int,
    threshold_db: float,
    inv: PhonemeInventory,
    layout=None,
    utterance_id: str = "",
    frame_shift_ms: float = DEFAULT_FRAME_SHIFT_MS,
) -> FrameAlignment:
    """Split the non-silence frames equally over the emitting states in transcript order.

    Sub-threshold frames go to the silence state unattributed (token -1),
    wherever they occur.
    """
    phonemes = tuple(phonemes)
    spaces = frozenset({inv.space_id, inv.silence_id})
    layout = tuple(layout) if layout is not None else state_layout(phonemes, spaces)
    slots = {p: i for i, p in enumerate(layout)}
    emitting = []
    for n, p in enumerate(phonemes):
        if p in spaces:
            continue
        if p not in slots:
            raise AlignmentError(f"{utterance_id}: phoneme {inv.symbol_of(p)} missing from the state layout")
        emitting.extend((n, STATES_PER_PHONEME * slots[p] + k) for k in range(STATES_PER_PHONEME))
    if not emitting:
        raise AlignmentError(f"{utterance_id}: transcript has no phonemes to align")

    speech = speech_mask(f, energy_dim, threshold_db)
    speech_frames = np.flatnonzero(speech)
    if len(speech_frames) < len(emitting):
        raise AlignmentError(
            f"{utterance_id}: {len(speech_frames)} non-silence frames cannot hold {len(emitting)} states"
        )
    silence_state = STATES_PER_PHONEME * len(layout)
    states = np.full(f.rows, silence_state, dtype=np.int64)
    tokens = np.full(f.rows, -1, dtype=np.int64)
    base, extra = divmod(len(speech_frames), len(emitting))
    cursor = 0
    for i, (token, state) in enumerate(emitting):
        run = speech_frames[cursor:cursor + base + (1 if i < extra else 0)]
        states[run] = state
        tokens[run] = token
        cursor += len(run)
    return FrameAlignment(
        utterance_id=utterance_id,
        phonemes=phonemes,
        states=tuple(int(s) for s in states),
        tokens=tuple(int(k) for k in tokens),
        silence_id=inv.silence_id,
        frame_shift_ms=frame_shift_ms,
    )


# ---------------- Durations ----------------
def extract_durations(a: FrameAlignment, inv: PhonemeInventory) -> AlignedUtterance:
    """Frames per transcript token; skipped [space] tokens keep duration 0.

    Unattributed silence (only produced by the linear initialisation) is
    credited to the token before it, or to the first token at the start.
    """
    durations = [0] * len(a.phonemes)
    owner = 0
    for seg in a.segments:
        if seg.token >= 0:
            owner = seg.token
        durations[owner] += seg.duration
    return AlignedUtterance(a.utterance_id, a.phonemes, tuple(durations), a.frame_shift_ms)


# ---------------- Training ----------------
@dataclass(frozen=True)
class TrainingUtterance:
    utterance_id: str
    features: FeatureMatrix
    phonemes: tuple
    frame_shift_ms: float = DEFAULT_FRAME_SHIFT_MS


@dataclass(frozen=True)
class TrainingOptions:
    em_iters: int = 10
    split_iters: int = 3
    split_em_iters: int = 2
    max_gaussians: int = 8
    energy_dim: int = 0
    threshold_db: float = -50.0
    variance_floor_scale: float = 1e-3
    allow_optional_silence: bool = True
    seed: int = 0
    jobs: int = 1


def _align_task(model, allow_optional_silence, space_ids, utt):
    return viterbi_align(
        model, utt.features, utt.phonemes, allow_optional_silence,
        utterance_id=utt.utterance_id, space_ids=space_ids, frame_shift_ms=utt.frame_shift_ms,
    )


def _stats_task(model, pair):
    """Sufficient statistics of one aligned utterance."""
    utt, alignment = pair
    n_states, n_comp, dim = model.means.shape
    occ = np.zeros((n_states, n_comp))
    sum_x = np.zeros((n_states, n_comp, dim))
    sum_x2 = np.zeros((n_states, n_comp, dim))
    loops = np.zeros(n_states)
    forwards = np.zeros(n_states)
    data = utt.features.data
    states = np.asarray(alignment.states)
    present, column = np.unique(states, return_inverse=True)
    comp = model.component_log_likelihoods(data, present)  # (T, U, K)
    frame_comp = comp[np.arange(len(states)), column]  # (T, K)
    resp = np.exp(frame_comp - logsumexp(frame_comp, axis=1, keepdims=True))
    np.add.at(occ, states, resp)
    np.add.at(sum_x, states, resp[:, :, None] * data[:, None, :])
    np.add.at(sum_x2, states, resp[:, :, None] * (data ** 2)[:, None, :])
    tokens = np.asarray(alignment.tokens)
    same = (states[1:] == states[:-1]) & (tokens[1:] == tokens[:-1])
    np.add.at(loops, states[:-1][same], 1.0)
    np.add.at(forwards, states[:-1][~same], 1.0)
    return occ, sum_x, sum_x2, loops, forwards


def _m_step(model: HmmModel, stats) -> HmmModel:
    occ, sum_x, sum_x2, loops, forwards = stats
    weights = model.weights.copy()
    means = model.means.copy()
    variances = model.variances.copy()
    loop_probs = model.loop_probs.copy()
    floor = model.variance_floor

    seen_states = occ.sum(axis=1) > 0
    weights[seen_states] = occ[seen_states] / occ[seen_states].sum(axis=1, keepdims=True)
    seen = occ > 0
    safe = np.where(seen, occ, 1.0)[:, :, None]
    new_means = sum_x / safe
    new_vars = np.maximum(sum_x2 / safe - new_means ** 2, floor)
    means[seen] = new_means[seen]
    variances[seen] = new_vars[seen]

    transitions = loops + forwards
    moved = transitions > 0
    loop_probs[moved] = np.clip(loops[moved] / transitions[moved], *LOOP_PROB_RANGE)
    return HmmModel(model.phonemes, model.silence_id, weights, means, variances, loop_probs, floor, model.history)


def split_mixtures(model: HmmModel, max_gaussians: int, seed: int = 0) -> HmmModel:
    """Double every state's mixture: copies at mean +/- 0.2 stddev, halved weights."""
    n_comp = model.n_components
    if 2 * n_comp > max_gaussians:
        logger.info("mixtures already at %d components (cap %d); not splitting", n_comp, max_gaussians)
        return model
    gen = rng.stream(seed, "split", str(n_comp))
    signs = np.where(gen.random(model.means.shape) < 0.5, -1.0, 1.0)
    offset = SPLIT_OFFSET * np.sqrt(model.variances) * signs
    return HmmModel(
        phonemes=model.phonemes,
        silence_id=model.silence_id,
        weights=np.concatenate([model.weights / 2, model.weights / 2], axis=1),
        means=np.concatenate([model.means + offset, model.means - offset], axis=1),
        variances=np.concatenate([model.variances, model.variances], axis=1),
        loop_probs=model.loop_probs,
        variance_floor=model.variance_floor,
        history=model.history,
    )


def _corpus_moments(corpus):
    total = sum(u.features.rows for u in corpus)
    stacked = np.concatenate([u.features.data for u in corpus], axis=0)
    mean = stacked.sum(axis=0) / total
    variance = ((stacked - mean) ** 2).sum(axis=0) / total
    return mean, variance


def flat_start(corpus, inv: PhonemeInventory, variance_floor_scale: float = 1e-3, layout=None) -> HmmModel:
    """Every state carries the global mean and variance of the corpus."""
    if not corpus:
        raise AlignmentError("cannot train on an empty corpus")
    dims = {u.features.cols for u in corpus}
    if len(dims) != 1:
        raise AlignmentError(f"feature dimensions differ across the corpus: {sorted(dims)}")
    spaces = frozenset({inv.space_id, inv.silence_id})
    if layout is None:
        layout = state_layout((p for u in corpus for p in u.phonemes), spaces)
    mean, variance = _corpus_moments(corpus)
    floor = np.maximum(variance_floor_scale * variance, MIN_VARIANCE)
    return new_model(layout, inv.silence_id, mean, variance, floor)


def align_corpus(model, corpus, inv, allow_optional_silence=True, jobs=1) -> list:
    with WorkerPool(jobs) as pool:
        return pool.map(partial(_align_task, model, allow_optional_silence, _spaces(inv)), corpus)


def _spaces(inv):
    return frozenset({inv.space_id, inv.silence_id})


def train_monophone(corpus, inv: PhonemeInventory, options: TrainingOptions = TrainingOptions(), init_model=None) -> HmmModel:
    """Viterbi-EM training; the returned model's ``history`` holds one
    ``(phase, iteration, mixture size, per-frame log-likelihood)`` row per
    iteration.

    ``em_iters=0`` with no splits returns the flat-start model. The first EM
    iteration re-estimates from the linear segmentation (or, with
    ``init_model``, from a Viterbi pass of that model).
    """
    corpus = list(corpus)
    spaces = _spaces(inv)
    model = init_model if init_model is not None else flat_start(corpus, inv, options.variance_floor_scale)
    for u in corpus:
        for p in u.phonemes:
            if p not in spaces and not model.covers(p):
                raise AlignmentError(f"{u.utterance_id}: phoneme {inv.symbol_of(p)} is not covered by the model")
    if options.em_iters == 0 and options.split_iters == 0:
        return model

    total_frames = sum(u.features.rows for u in corpus)
    history = list(model.history)
    pool = WorkerPool(options.jobs)
    try:
        if init_model is None:
            alignments = [
                linear_segment_init(
                    u.features, u.phonemes, options.energy_dim, options.threshold_db, inv,
                    layout=model.phonemes, utterance_id=u.utterance_id, frame_shift_ms=u.frame_shift_ms,
                )
                for u in corpus
            ]
        else:
            alignments = pool.map(partial(_align_task, model, options.allow_optional_silence, spaces), corpus)

        def iterate(phase, index):
            nonlocal model, alignments
            stats = None
            for part in pool.map(partial(_stats_task, model), list(zip(corpus, alignments))):
                stats = part if stats is None else tuple(a + b for a, b in zip(stats, part))
            model = _m_step(model, stats)
            alignments = pool.map(partial(_align_task, model, options.allow_optional_silence, spaces), corpus)
            objective = sum(a.score for a in alignments) / total_frames
            history.append(IterationRecord(phase, index, model.n_components, objective))
            logger.info("%s iteration %d: %d gaussians/state, log-likelihood/frame %.6f",
                        phase, index, model.n_components, objective)

        for i in range(options.em_iters):
            iterate("em", i + 1)
        for s in range(options.split_iters):
            model = split_mixtures(model, options.max_gaussians, seed=options.seed)
            for i in range(options.split_em_iters):
                iterate("split", s + 1)
    finally:
        pool.close()
    return HmmModel(
        model.phonemes, model.silence_id, model.weights, model.means, model.variances,
        model.loop_probs, model.variance_floor, tuple(history),
    )
