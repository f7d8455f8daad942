# commands/upsample.py

import logging

from cli import arg
from config import Config, app
from core import FeatureMatrix, ValidationError
from formats import matrix_paths, read_alignments, read_matrix, write_matrix
from upsample import gaussian_upsample_weights, upsample_states

logger = logging.getLogger(__name__)


@app.command(
    "upsample",
    arg("--alignments", help="durations (JSONL)"),
    arg("--states", help="directory of <utterance id>.fmat phoneme-level matrices (N x D)"),
    arg("--sigma-g", type=float, default=Config.SIGMA_G, help="Gaussian width in frames"),
    help="Gaussian upsampling of phoneme states to frames; --out names the output directory",
    required=("alignments", "states", "out"),
)
def upsample_cmd(run):
    inv = run.inventory
    corpus = read_alignments(run.input(run.alignments), inv)
    states = matrix_paths(run.input(run.states))
    out_dir = run.output_path()
    for u in corpus:
        if u.utterance_id not in states:
            raise ValidationError(f"{u.utterance_id}: no state matrix under {run.states}")
        h = FeatureMatrix(read_matrix(states[u.utterance_id]))
        frames = upsample_states(h, gaussian_upsample_weights(u.durations, run.sigma_g))
        write_matrix(out_dir / f"{u.utterance_id}.fmat", frames.data)
    logger.info("upsampled %d utterances into %s", len(corpus), out_dir)
