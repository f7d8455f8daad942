# commands/hmm.py

import json
import logging

from cli import arg
from config import Config, app
from core import FeatureMatrix, FormatError, ValidationError
from formats import dump_json_lines, matrix_paths, read_json, read_matrix, read_transcripts
from hmm_align import (
    TrainingOptions,
    TrainingUtterance,
    align_corpus,
    alignment_to_obj,
    model_from_json,
    model_to_json,
    train_monophone,
    trim_silence,
)

logger = logging.getLogger(__name__)

CORPUS_ARGS = (
    arg("--features", help="directory of <utterance id>.fmat (or .csv) feature matrices"),
    arg("--transcripts", help="JSONL transcripts; durations may be omitted"),
    arg("--energy-dim", type=int, default=Config.ENERGY_DIM, help="feature column holding energy in dB"),
    arg("--threshold-db", type=float, default=Config.SILENCE_THRESHOLD_DB),
    arg("--trim", action="store_true", default=False, help="cut leading/trailing silence first"),
)

TRAIN_ARGS = (
    arg("--variance-floor-scale", type=float, default=Config.VARIANCE_FLOOR_SCALE),
    arg("--no-optional-silence", action="store_true", default=False,
        help="silence is mandatory at every [space]"),
)


def load_corpus(run, inv):
    transcripts = read_transcripts(run.input(run.transcripts), inv)
    paths = matrix_paths(run.input(run.features))
    corpus = []
    for u in transcripts:
        path = paths.get(u.utterance_id)
        if path is None:
            raise ValidationError(f"{u.utterance_id}: no feature matrix under {run.features}")
        try:
            f = FeatureMatrix(read_matrix(path))
        except FormatError:
            raise
        except ValidationError as e:
            raise FormatError(str(e), path=path) from None
        if run.trim:
            f = trim_silence(f, run.energy_dim, run.threshold_db)
        corpus.append(TrainingUtterance(u.utterance_id, f, u.phonemes, u.frame_shift_ms))
    logger.info("loaded %d utterances (%d frames)", len(corpus), sum(u.features.rows for u in corpus))
    return corpus


def load_model(run, inv):
    path = run.input(run.model)
    return model_from_json(read_json(path), inv, path=path)


def _options(run, **overrides):
    opts = dict(
        em_iters=run.options.get("em_iters", Config.EM_ITERS),
        split_iters=run.options.get("split_iters", Config.SPLIT_ITERS),
        split_em_iters=run.options.get("split_em_iters", Config.SPLIT_EM_ITERS),
        max_gaussians=run.options.get("max_gaussians", Config.MAX_GAUSSIANS),
        energy_dim=run.energy_dim,
        threshold_db=run.threshold_db,
        variance_floor_scale=run.variance_floor_scale,
        allow_optional_silence=not run.no_optional_silence,
        seed=run.seed,
        jobs=run.jobs,
    )
    opts.update(overrides)
    return TrainingOptions(**opts)


def _emit_model(run, model, inv):
    run.emit(json.dumps(model_to_json(model, inv)) + "\n")


# ------------------- HMM-INIT -------------------
@app.command(
    "hmm-init",
    *CORPUS_ARGS,
    *TRAIN_ARGS,
    help="Single-Gaussian model re-estimated once from the linear segmentation",
    required=("features", "transcripts"),
)
def hmm_init_cmd(run):
    inv = run.inventory
    model = train_monophone(load_corpus(run, inv), inv, _options(run, em_iters=1, split_iters=0))
    _emit_model(run, model, inv)


# ------------------- HMM-TRAIN -------------------
@app.command(
    "hmm-train",
    *CORPUS_ARGS,
    *TRAIN_ARGS,
    arg("--model", help="continue from this model instead of the linear segmentation"),
    arg("--em-iters", type=int, default=Config.EM_ITERS),
    arg("--split-iters", type=int, default=Config.SPLIT_ITERS),
    arg("--split-em-iters", type=int, default=Config.SPLIT_EM_ITERS),
    arg("--max-gaussians", type=int, default=Config.MAX_GAUSSIANS),
    help="Viterbi-EM training with mixture splitting",
    required=("features", "transcripts"),
)
def hmm_train_cmd(run):
    inv = run.inventory
    init = load_model(run, inv) if run.options.get("model") else None
    model = train_monophone(load_corpus(run, inv), inv, _options(run), init_model=init)
    _emit_model(run, model, inv)


# ------------------- HMM-ALIGN -------------------
@app.command(
    "hmm-align",
    *CORPUS_ARGS,
    arg("--model"),
    arg("--no-optional-silence", action="store_true", default=False),
    help="Viterbi forced alignment; writes per-frame state alignments (JSONL)",
    required=("model", "features", "transcripts"),
)
def hmm_align_cmd(run):
    inv = run.inventory
    model = load_model(run, inv)
    corpus = load_corpus(run, inv)
    alignments = align_corpus(model, corpus, inv, not run.no_optional_silence, jobs=run.jobs)
    run.emit(dump_json_lines(alignment_to_obj(a, inv) for a in alignments))
