# commands/stats.py

import json

from cli import arg
from config import Config, app
from formats import read_alignments
from stats import build_histograms, export_histogram_csv, format_summary_table, kld, length_ratio, summary


# ------------------- STATS -------------------
@app.command(
    "stats",
    arg("--alignments"),
    arg("--reference", help="second corpus; adds the total length ratio alignments/reference"),
    help="Per-phoneme duration count, mean, variance and percentiles",
    required=("alignments",),
)
def stats_cmd(run):
    inv = run.inventory
    corpus = read_alignments(run.input(run.alignments), inv)
    text = format_summary_table(summary(corpus, jobs=run.jobs), inv)
    if run.options.get("reference"):
        reference = read_alignments(run.input(run.reference), inv)
        text += f"length_ratio={length_ratio(corpus, reference)!r}\n"
    run.emit(text)


# ------------------- KLD -------------------
@app.command(
    "kld",
    arg("--pred", help="predicted (or modified) alignments"),
    arg("--ref", help="reference alignments"),
    arg("--epsilon", type=float, default=Config.KLD_EPSILON),
    arg("--weighted", action="store_true", default=False, help="weight the mean by reference occurrences"),
    help="Mean per-phoneme KL divergence KL(pred || ref) of duration distributions",
    required=("pred", "ref"),
)
def kld_cmd(run):
    inv = run.inventory
    pred = build_histograms(read_alignments(run.input(run.pred), inv), jobs=run.jobs)
    ref = build_histograms(read_alignments(run.input(run.ref), inv), jobs=run.jobs)
    report = kld(pred, ref, run.epsilon, weighted=run.weighted)
    run.emit(json.dumps({
        "mean_kld": report.mean,
        "epsilon": report.epsilon,
        "weighted": report.weighted,
        "per_phoneme": {inv.symbol_of(p): v for p, v in report.per_phoneme.items()},
        "only_pred": inv.decode(report.only_pred),
        "only_ref": inv.decode(report.only_ref),
    }, indent=2) + "\n")


# ------------------- HIST-EXPORT -------------------
@app.command(
    "hist-export",
    arg("--alignments"),
    arg("--phoneme", help="phoneme symbol, e.g. SH"),
    help="duration,count CSV of one phoneme's histogram",
    required=("alignments", "phoneme"),
)
def hist_export_cmd(run):
    inv = run.inventory
    h = build_histograms(read_alignments(run.input(run.alignments), inv), jobs=run.jobs)
    run.emit(export_histogram_csv(h, inv.id_of(run.phoneme)))
