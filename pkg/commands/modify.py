# commands/modify.py

from functools import partial

from cli import arg
from config import Config, app
from core import UsageError
from durmod import RandomWalkConfig, apply_random_walk, constant_scale
from formats import dump_json_lines, read_alignments, utterance_to_obj


@app.command(
    "modify",
    arg("--alignments"),
    arg("--mode", choices=("constant", "walk")),
    arg("--alpha", type=float, default=1.0, help="constant scale factor"),
    arg("--sigma", type=float, default=0.025, help="random-walk step stddev"),
    arg("--clip-lo", type=float, default=Config.CLIP_LO),
    arg("--clip-hi", type=float, default=Config.CLIP_HI),
    arg("--min-duration", type=int, default=0),
    help="Scale durations by a constant or a clipped, mean-centred random walk",
    required=("alignments", "mode"),
)
def modify_cmd(run):
    inv = run.inventory
    corpus = read_alignments(run.input(run.alignments), inv)
    if run.mode == "constant":
        fn = partial(constant_scale, alpha=run.alpha, min_duration=run.min_duration)
    elif run.mode == "walk":
        cfg = RandomWalkConfig(
            sigma=run.sigma, clip_lo=run.clip_lo, clip_hi=run.clip_hi,
            seed=run.seed, min_duration=run.min_duration,
        ).validate()
        fn = partial(apply_random_walk, cfg=cfg)
    else:
        raise UsageError(f"unknown mode {run.mode!r} (choose constant or walk)")
    run.emit(dump_json_lines(utterance_to_obj(u, inv) for u in run.map(fn, corpus)))
