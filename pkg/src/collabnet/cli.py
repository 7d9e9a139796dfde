"""Command-line interface.

Subcommands mirror the pipeline stages; ``run`` executes all of them from a
config file (flags override file values).  Exit codes: 0 on success, 2 for
usage or configuration problems, and a distinct code per failing stage (see
``STAGE_EXIT_CODES``).
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

from . import gcn, metrics, model, scn, synthetic
from .corpus import (
    CorpusError,
    load_stopwords,
    parse_corpus_file,
    parse_record_line,
    write_corpus,
)
from .incremental import disambiguate_paper
from .network import CollabNetwork
from .pipeline import RunConfig, StageError, build_context, run_full

STAGE_EXIT_CODES = {
    "ingest": 10,
    "scn": 11,
    "fit": 12,
    "merge": 13,
    "recover": 14,
    "evaluate": 15,
    "resolve": 16,
}

_DEFAULTS_NOTE = (
    "Defaults: alpha 0.62 and sample-rate 0.1 are the method's standard "
    "settings; eta 3, delta 0, wl-iterations 2, min-split 5, and seed 42 are "
    "tuning choices of this implementation."
)


def _corpus_context(args, network: CollabNetwork):
    stopwords = load_stopwords(getattr(args, "stopwords", None))
    index, _ = parse_corpus_file(args.corpus, stopwords, args.freq_cutoff)
    config = RunConfig(
        corpus=str(args.corpus),
        out_dir=".",
        embeddings=getattr(args, "embeddings", None),
        alpha=args.alpha,
        wl_iterations=args.wl_iterations,
        seed=getattr(args, "seed", 42),
        freq_cutoff=args.freq_cutoff,
    )
    return index, build_context(config, network, index)


def cmd_ingest(args) -> int:
    stopwords = load_stopwords(args.stopwords)
    try:
        index, errors = parse_corpus_file(args.corpus, stopwords, args.freq_cutoff)
    except CorpusError as exc:
        print(f"ingest failed: {exc}", file=sys.stderr)
        return STAGE_EXIT_CODES["ingest"]
    if args.out:
        write_corpus((index.papers[p] for p in sorted(index.papers)), args.out)
    for err in errors:
        print(f"record error: {err}", file=sys.stderr)
    print(
        f"papers={index.n_papers} names={len(index.name_to_papers)} "
        f"keywords={len(index.word_freq)} venues={len(index.venue_freq)} "
        f"record_errors={len(errors)}"
    )
    return 0


def cmd_build_scn(args) -> int:
    try:
        stopwords = load_stopwords(args.stopwords)
        index, _ = parse_corpus_file(args.corpus, stopwords, args.freq_cutoff)
        scrs = scn.mine_scrs(index, args.eta)
        network = scn.build_scn(scrs, index)
        network.dump(args.out)
    except Exception as exc:
        print(f"build-scn failed: {exc}", file=sys.stderr)
        return STAGE_EXIT_CODES["scn"]
    print(
        f"scrs={len(scrs)} vertices={network.n_vertices()} edges={network.n_edges()}"
    )
    return 0


def cmd_fit(args) -> int:
    try:
        network = CollabNetwork.load(args.scn)
        _, ctx = _corpus_context(args, network)
        training = model.sample_training_pairs(
            ctx, args.rate, args.seed, args.min_split, args.workers
        )
        fit = model.em_fit(training, tuple(args.families.split(",")))
        model.save_model(fit.params, args.out)
    except Exception as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return STAGE_EXIT_CODES["fit"]
    print(
        f"training_vectors={training.n} iterations={fit.iterations} "
        f"final_ll={fit.log_likelihoods[-1]:.4f} converged={fit.converged}"
    )
    return 0


def cmd_merge(args) -> int:
    try:
        network = CollabNetwork.load(args.scn)
        index, ctx = _corpus_context(args, network)
        params = model.load_model(args.model)
        network, events = gcn.merge_pass(network, params, ctx, args.delta)
        network = gcn.recover_relations(network, index, params, ctx, args.delta)
        network.dump(args.out)
        if args.merge_log:
            with open(args.merge_log, "w", encoding="utf-8") as fh:
                for event in events:
                    fh.write(str(event) + "\n")
    except Exception as exc:
        print(f"merge failed: {exc}", file=sys.stderr)
        return STAGE_EXIT_CODES["merge"]
    print(
        f"merges={len(events)} vertices={network.n_vertices()} edges={network.n_edges()}"
    )
    return 0


def cmd_resolve(args) -> int:
    try:
        network = CollabNetwork.load(args.gcn)
        _, ctx = _corpus_context(args, network)
        params = model.load_model(args.model)
        paper = parse_record_line(args.paper)
        decision = disambiguate_paper(network, params, ctx, paper, args.name, args.delta)
        if args.out:
            network.dump(args.out)
    except Exception as exc:
        print(f"resolve failed: {exc}", file=sys.stderr)
        return STAGE_EXIT_CODES["resolve"]
    print(decision)
    return 0


def cmd_evaluate(args) -> int:
    try:
        network = CollabNetwork.load(args.gcn)
        gold = metrics.load_gold(args.gold)
        assignments = network.paper_assignments()
        timings: dict[str, float] = {}
        if args.timing:
            by_name: dict[str, dict] = {}
            for item, label in gold.items():
                by_name.setdefault(item[1], {})[item] = label
            for name, gold_part in sorted(by_name.items()):
                start = time.perf_counter()
                predicted = {
                    i: assignments[i] for i in gold_part if i in assignments
                }
                metrics.micro_metrics(predicted, gold_part)
                timings[name] = time.perf_counter() - start
        predicted = {i: assignments[i] for i in gold if i in assignments}
        result = metrics.micro_metrics(predicted, gold)
    except Exception as exc:
        print(f"evaluate failed: {exc}", file=sys.stderr)
        return STAGE_EXIT_CODES["evaluate"]
    print(result)
    if args.timing and timings:
        mean = sum(timings.values()) / len(timings)
        worst = max(timings.values())
        print(f"per-name timing: names={len(timings)} mean={mean:.6f}s max={worst:.6f}s")
    return 0


def cmd_run(args) -> int:
    try:
        if args.config:
            config = RunConfig.load(args.config)
        elif args.corpus:
            config = RunConfig(corpus=args.corpus, out_dir=args.out_dir or "out")
        else:
            print("run needs --config or --corpus", file=sys.stderr)
            return 2
        overrides = {}
        for name in (
            "corpus",
            "out_dir",
            "stopwords",
            "embeddings",
            "gold",
            "eta",
            "delta",
            "alpha",
            "seed",
            "sample_rate",
            "workers",
        ):
            value = getattr(args, name, None)
            if value is not None:
                overrides[name] = value
        if overrides:
            config = replace(config, **overrides)
    except (OSError, ValueError) as exc:
        print(f"bad configuration: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run_full(config)
    except StageError as exc:
        print(str(exc), file=sys.stderr)
        return STAGE_EXIT_CODES.get(exc.stage, 1)
    counts = manifest["counts"]
    print(
        "run complete: papers=%d scn_vertices=%d merges=%d gcn_vertices=%d"
        % (
            counts["papers"],
            counts["scn_vertices"],
            counts["merges"],
            counts["gcn_vertices"],
        )
    )
    if "metrics" in manifest:
        m = manifest["metrics"]
        print(
            "metrics: MicroA=%.4f MicroP=%.4f MicroR=%.4f MicroF=%.4f"
            % (m["micro_a"], m["micro_p"], m["micro_r"], m["micro_f"])
        )
    return 0


def cmd_synth(args) -> int:
    corpus = synthetic.generate(
        n_papers=args.papers,
        n_communities=args.communities,
        authors_per_community=args.authors_per_community,
        n_ambiguous=args.ambiguous,
        seed=args.seed,
    )
    write_corpus(corpus.records, args.out)
    if args.gold:
        metrics.write_gold(corpus.gold, args.gold)
    print(
        f"papers={len(corpus.records)} authors={len(corpus.authors)} "
        f"ambiguous_names={len(corpus.ambiguous_names)}"
    )
    return 0


def _add_corpus_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--corpus", required=True, help="corpus file (one record per line)")
    p.add_argument("--stopwords", default=None, help="stopword file; bundled list if omitted")
    p.add_argument("--freq-cutoff", dest="freq_cutoff", type=float, default=0.05,
                   help="document-frequency fraction above which words are dropped")


def _add_context_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embeddings", default=None,
                   help="word vector table; hashed vectors are derived if omitted")
    p.add_argument("--alpha", type=float, default=0.62, help="time-decay rate")
    p.add_argument("--wl-iterations", dest="wl_iterations", type=int, default=2,
                   help="refinement depth of the structural kernel")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collabnet",
        description="Author disambiguation by bottom-up collaboration network reconstruction.",
        epilog=_DEFAULTS_NOTE,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and validate a corpus file")
    _add_corpus_flags(p)
    p.add_argument("--out", default=None, help="write the normalized corpus here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build-scn", help="mine stable pairs and build the stable network")
    p.add_argument("--eta", type=int, default=3, help="minimum pair support")
    _add_corpus_flags(p)
    p.add_argument("--out", required=True, help="network dump path")
    p.set_defaults(func=cmd_build_scn)

    p = sub.add_parser("fit", help="fit the mixture model on sampled vertex pairs")
    p.add_argument("--scn", required=True, help="stable network dump")
    _add_corpus_flags(p)
    _add_context_flags(p)
    p.add_argument("--rate", type=float, default=0.1, help="pair sampling rate")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--min-split", dest="min_split", type=int, default=5)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--families", default=",".join(model.DEFAULT_FAMILIES))
    p.add_argument("--out", required=True, help="model file path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("merge", help="merge same-name vertices and recover relations")
    p.add_argument("--model", required=True)
    p.add_argument("--delta", type=float, default=0.0, help="decision threshold")
    p.add_argument("--scn", required=True)
    _add_corpus_flags(p)
    _add_context_flags(p)
    p.add_argument("--out", required=True, help="merged network dump path")
    p.add_argument("--merge-log", dest="merge_log", default=None)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("resolve", help="disambiguate one new paper against a built network")
    p.add_argument("--gcn", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--paper", required=True, help="record line for the new paper")
    p.add_argument("--name", required=True, help="author name to resolve")
    p.add_argument("--delta", type=float, default=0.0)
    _add_corpus_flags(p)
    _add_context_flags(p)
    p.add_argument("--out", default=None, help="write the updated network here")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("evaluate", help="micro metrics of a network against gold labels")
    p.add_argument("--gcn", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--timing", action="store_true",
                   help="also report per-name wall-clock aggregates")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--corpus", default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--stopwords", default=None)
    p.add_argument("--embeddings", default=None)
    p.add_argument("--gold", default=None)
    p.add_argument("--eta", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sample-rate", dest="sample_rate", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="generate a planted-truth synthetic corpus")
    p.add_argument("--papers", type=int, default=2400)
    p.add_argument("--communities", type=int, default=24)
    p.add_argument("--authors-per-community", dest="authors_per_community", type=int, default=26)
    p.add_argument("--ambiguous", type=int, default=120)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.add_argument("--gold", default=None)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
