# commands/durations.py

from cli import arg
from config import app
from core import validate_utterance
from formats import dump_json_lines, read_json_lines, utterance_to_obj
from hmm_align import alignment_from_obj, extract_durations


@app.command(
    "durations",
    arg("--alignments", help="frame alignments written by hmm-align"),
    help="Per-phoneme durations from frame alignments; skipped [space] tokens get 0",
    required=("alignments",),
)
def durations_cmd(run):
    inv = run.inventory
    frames = read_json_lines(
        run.input(run.alignments),
        lambda obj, path, line: alignment_from_obj(obj, inv, path=path, line=line),
    )
    corpus = [validate_utterance(extract_durations(a, inv), inv, hmm_derived=True) for a in frames]
    run.emit(dump_json_lines(utterance_to_obj(u, inv) for u in corpus))
