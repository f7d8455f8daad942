# commands/oracle.py

from cli import arg
from config import app
from durmod import substitute_corpus
from formats import dump_json_lines, read_alignments, utterance_to_obj


@app.command(
    "oracle-sub",
    arg("--pred"),
    arg("--ref"),
    help="Replace predicted durations with the reference alignment's",
    required=("pred", "ref"),
)
def oracle_cmd(run):
    inv = run.inventory
    pred = read_alignments(run.input(run.pred), inv)
    ref = read_alignments(run.input(run.ref), inv)
    run.emit(dump_json_lines(utterance_to_obj(u, inv) for u in substitute_corpus(pred, ref)))
