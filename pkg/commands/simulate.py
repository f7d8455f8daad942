# commands/simulate.py

import dataclasses
import logging
from pathlib import Path

from cli import GLOBAL_OPTIONS, arg
from config import FRAME_SHIFT_MS, app
from core import UsageError, ValidationError
from formats import write_alignments, write_text
from sim import SimConfig, sim_inventory, simulate

logger = logging.getLogger(__name__)

SIM_FIELDS = {f.name for f in dataclasses.fields(SimConfig)}
FLAG_FIELDS = ("phonemes", "utterances", "utterance_length", "family", "min_style", "mean_shrink", "var_shrink")


@app.command(
    "simulate",
    arg("--phonemes", type=int),
    arg("--utterances", type=int),
    arg("--utterance-length", type=int),
    arg("--family", choices=("negbinom", "lognormal")),
    arg("--min-style", choices=("hmm", "ctc")),
    arg("--mean-shrink", type=float),
    arg("--var-shrink", type=float),
    arg("--dump-dir", help="also write reference.jsonl, predicted.jsonl and inventory.txt here"),
    help="Planted reference vs narrowed predictor; KLd/length sweep over constant and random-walk scaling (CSV)",
)
def simulate_cmd(run):
    unknown = sorted(set(run.file_config) - SIM_FIELDS - set(GLOBAL_OPTIONS) - {"dump_dir", "format"})
    if unknown:
        raise UsageError(f"unknown simulation option(s) in {run.config}: {', '.join(unknown)}")
    params = {k: v for k, v in run.file_config.items() if k in SIM_FIELDS}
    params.update({k: run.options[k] for k in FLAG_FIELDS if k in run.options})
    params.setdefault("frame_shift_ms", FRAME_SHIFT_MS)
    params["seed"] = run.seed
    try:
        cfg = SimConfig.from_dict(params)
    except TypeError as e:
        raise ValidationError(f"bad simulation config: {e}") from None
    run.options.update(cfg.to_dict())  # manifest carries the full resolved config
    logger.info("simulating %d utterances x %d phonemes, seed %d", cfg.utterances, cfg.utterance_length, cfg.seed)
    reference, predictions, report = simulate(cfg, jobs=run.jobs)
    run.emit(report.to_csv())

    if run.options.get("dump_dir"):
        out = Path(run.dump_dir)
        inv = sim_inventory(cfg.phonemes)
        write_alignments(out / "reference.jsonl", reference, inv)
        write_alignments(out / "predicted.jsonl", predictions, inv)
        write_text(out / "inventory.txt", "".join(s + "\n" for s in inv.symbols))
        run.outputs.extend(str(out / n) for n in ("reference.jsonl", "predicted.jsonl", "inventory.txt"))
