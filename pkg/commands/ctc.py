# commands/ctc.py

import logging
from functools import partial

from cli import arg
from config import Config, app
from core import EmissionMatrix, FormatError, ValidationError
from ctc_align import ATTACH_MODES, ctc_viterbi_align
from formats import dump_json_lines, matrix_paths, read_matrix, read_transcripts, utterance_to_obj

logger = logging.getLogger(__name__)


def _align_one(blank_floor, attach, item):
    utt, emissions = item
    return ctc_viterbi_align(
        emissions, utt.phonemes, blank_floor=blank_floor, attach=attach,
        utterance_id=utt.utterance_id, frame_shift_ms=utt.frame_shift_ms,
    )


@app.command(
    "ctc-align",
    arg("--emissions", help="directory of <utterance id>.fmat log-posterior matrices"),
    arg("--labels", help="JSONL label sequences (durations ignored)"),
    arg("--blank-index", type=int, default=Config.BLANK_INDEX),
    arg("--blank-floor", type=float, default=Config.BLANK_FLOOR),
    arg("--attach", choices=ATTACH_MODES, default="forward", help="side that absorbs blank frames"),
    help="CTC Viterbi alignment with blank flooring; every label gets >= 1 frame",
    required=("emissions", "labels"),
)
def ctc_align_cmd(run):
    inv = run.inventory
    labels = read_transcripts(run.input(run.labels), inv)
    paths = matrix_paths(run.input(run.emissions))
    items = []
    for u in labels:
        path = paths.get(u.utterance_id)
        if path is None:
            raise ValidationError(f"{u.utterance_id}: no emission matrix under {run.emissions}")
        try:
            e = EmissionMatrix(read_matrix(path), blank_index=run.blank_index)
        except FormatError:
            raise
        except ValidationError as err:
            raise FormatError(str(err), path=path) from None
        items.append((u, e))
    aligned = run.map(partial(_align_one, run.blank_floor, run.attach), items)
    logger.info("aligned %d utterances", len(aligned))
    run.emit(dump_json_lines(utterance_to_obj(u, inv) for u in aligned))
