"""Command line entry point ``corrclust``.

Subcommands: ``run`` (one algorithm on a stream file), ``experiment`` (a
config-driven sweep), ``generate`` (SBM stream and labels), ``summarize``
(aggregate a report) and ``scaling`` (peak words against n).
"""
from __future__ import annotations

import argparse
import csv
import sys
import time

from . import __version__
from .harness import (
    ALGOS,
    ExperimentConfig,
    ReplayOracle,
    make_oracle,
    read_report,
    rows_to_csv,
    run_algorithm,
    run_experiment,
    space_scaling,
    summarize,
    summary_to_csv,
)
from .graph import cost, generate_sbm, read_labels, read_stream, replay_stream, to_stream, write_labels, write_stream

RUN_COLUMNS = ("algo", "n", "seed", "chosen_branch", "est_cost_1", "est_cost_2", "true_cost",
               "words_peak", "runtime_ms")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corrclust", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one algorithm on a stream file")
    run.add_argument("--algo", required=True, choices=ALGOS + ("dynamic_cc", "insertion_cc",
                                                                 "general_cc", "cklpu_pivot"))
    run.add_argument("--stream", required=True, help="stream file (lines 'u v s d')")
    run.add_argument("--predictor", default="const:0.5",
                     help="noisy:EPS0 | embed:PATH | table:PATH | const:VAL | spectral:DIM")
    run.add_argument("--reference", help="labels file used by noisy predictors")
    run.add_argument("--epsilon", type=float, default=0.2)
    run.add_argument("--c", type=float, default=4.0)
    run.add_argument("--k", type=int, default=None)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--neg-budget", type=int, default=None, help="negative-edge budget in words")
    run.add_argument("--fallback", choices=("ballgrow", "singletons"), default="ballgrow")
    run.add_argument("--check", action="store_true", help="also compute the exact cost")
    run.add_argument("--out", help="report CSV path (default: stdout)")
    run.add_argument("--labels-out", help="write the chosen clustering here")

    exp = sub.add_parser("experiment", help="run a sweep from a config file and/or flags")
    exp.add_argument("--config", help="key = value config file")
    exp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="override a config key (repeatable)")
    exp.add_argument("--out", help="report CSV path")
    exp.add_argument("--summary", help="summary CSV path")

    gen = sub.add_parser("generate", help="write an SBM stream and its planted labels")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--blocks", type=int, default=4)
    gen.add_argument("--p", type=float, default=0.9)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--mode", choices=("insertion_only", "dynamic"), default="insertion_only")
    gen.add_argument("--churn", type=float, default=0.0)
    gen.add_argument("--emit-negatives", action="store_true",
                     help="stream the implicit negatives too (needed by --algo insertion)")
    gen.add_argument("--general", action="store_true", help="make every negative pair explicit")
    gen.add_argument("--stream-out", required=True)
    gen.add_argument("--labels-out")

    summ = sub.add_parser("summarize", help="aggregate a report CSV")
    summ.add_argument("report")
    summ.add_argument("--baseline", default=None)
    summ.add_argument("--out")

    sc = sub.add_parser("scaling", help="peak dynamic-stream words for several n")
    sc.add_argument("--n", type=int, nargs="+", default=[64, 128, 256, 512])
    sc.add_argument("--p", type=float, default=0.9)
    sc.add_argument("--seed", type=int, default=0)
    sc.add_argument("--out")
    return ap


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args) -> int:
    updates, n, complete = read_stream(args.stream)
    algo = args.algo
    g = replay_stream(updates, n=n, complete=complete and algo not in ("general", "general_cc"))
    reference = read_labels(args.reference, n=n) if args.reference else None
    oracle = make_oracle(args.predictor, g, reference, seed=args.seed)
    t0 = time.perf_counter()
    res = run_algorithm(algo, g, oracle, args.seed, updates=updates, epsilon=args.epsilon, c=args.c,
                        k=args.k, neg_budget=args.neg_budget, fallback=args.fallback,
                        replay=ReplayOracle())
    runtime = (time.perf_counter() - t0) * 1000.0
    row = {
        "algo": algo, "n": n, "seed": args.seed, "chosen_branch": res.branch,
        "est_cost_1": "" if res.est_cost_1 is None else res.est_cost_1,
        "est_cost_2": "" if res.est_cost_2 is None else res.est_cost_2,
        "true_cost": cost(g, res.labels) if args.check else "",
        "words_peak": "" if res.words_peak is None else res.words_peak,
        "runtime_ms": round(runtime, 3),
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            w = csv.DictWriter(fh, RUN_COLUMNS, lineterminator="\n")
            w.writeheader()
            w.writerow(row)
    else:
        w = csv.DictWriter(sys.stdout, RUN_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerow(row)
    if args.labels_out:
        write_labels(args.labels_out, res.labels)
    return 0


def _cmd_experiment(args) -> int:
    items = {}
    if args.config:
        items.update(vars(ExperimentConfig.from_file(args.config)))
    for kv in args.set:
        if "=" not in kv:
            raise ValueError(f"--set expects KEY=VALUE, got {kv!r}")
        key, value = kv.split("=", 1)
        items[key.strip()] = value.strip()
    if args.out:
        items["out"] = args.out
    cfg = ExperimentConfig.from_mapping(items)
    rows = run_experiment(cfg)
    if not cfg.out:
        sys.stdout.write(rows_to_csv(rows))
    if args.summary:
        summary_to_csv(summarize(rows), args.summary)
    failed = [r for r in rows if r.status != "ok"]
    for r in failed:
        print(f"trial failure: {r.algo} {r.predictor} trial {r.trial}: {r.status}", file=sys.stderr)
    return 0


def _cmd_generate(args) -> int:
    g, truth = generate_sbm(args.n, args.blocks, args.p, seed=args.seed)
    if args.general:
        g = g.to_general()
    updates = to_stream(g, args.mode, churn=args.churn, seed=args.seed,
                        emit_negatives=args.emit_negatives)
    write_stream(args.stream_out, updates, g.n, complete=g.complete)
    if args.labels_out:
        write_labels(args.labels_out, truth)
    return 0


def _cmd_summarize(args) -> int:
    _emit(summary_to_csv(summarize(read_report(args.report), baseline=args.baseline)), args.out)
    return 0


def _cmd_scaling(args) -> int:
    rows = space_scaling(args.n, p=args.p, seed=args.seed)
    lines = ["n,words_peak,words_per_n2,concession_words,edges"]
    lines += [f"{r['n']},{r['words_peak']},{r['words_per_n2']!r},{r['concession_words']},{r['edges']}"
              for r in rows]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


_COMMANDS = {"run": _cmd_run, "experiment": _cmd_experiment, "generate": _cmd_generate,
             "summarize": _cmd_summarize, "scaling": _cmd_scaling}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        # every library validation error derives from ValueError
        print(f"corrclust: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
