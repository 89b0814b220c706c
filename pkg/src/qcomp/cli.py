"""Command-line entry point: every pipeline stage, scripted and seeded.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  All randomness
sits behind --seed; timing lands under "timing" keys so that two seeded
runs produce byte-identical artifacts once timing is stripped.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import time

from qcomp import corpus, datagen, engine, evaluation, features, ilp, learn, lm, systems

DEFAULT_NODE_LIMIT = 500_000


def _load_rows_with_gold(path):
    rows = corpus.read_jsonl(path)
    out = []
    for d in rows:
        gold = d.get("gold")
        if gold is None:
            raise ValueError("row %r lacks a gold compression" % d.get("id"))
        out.append((corpus.graph_from_dict(d), frozenset(gold)))
    return out


def _load_corpus_graphs(path):
    if str(path).endswith(".conllu"):
        with open(path, encoding="utf-8") as fh:
            return corpus.parse_conllu(fh.read())
    return [corpus.graph_from_dict(d) for d in corpus.read_jsonl(path)]


def _featurizer_from_args(args, graphs, config=None):
    vocab = features.build_lemma_vocab(graphs, args.vocab_cutoff)
    if config is None:
        config = features.FeatureConfig(D=2 ** args.d_bits,
                                        lexical_vocab_cutoff=args.vocab_cutoff)
    return features.Featurizer(config, vocab, collect_names=bool(getattr(args, "dump_features", None)))


def _parse_systems(specs, node_limit):
    registry = {}
    for spec in specs:
        name, _, path = spec.partition("=")
        if not path:
            raise ValueError("--system expects name=model-file, got %r" % spec)
        registry[name] = systems.load_system(name, path, node_limit=node_limit)
    if not registry:
        raise ValueError("at least one --system is required")
    return registry


# ---------------------------------------------------------------------------
# Subcommands

def cmd_ingest(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        graphs = corpus.parse_conllu(fh.read())
    if args.relabel:
        graphs = [corpus.relabel_function_edges(g) for g in graphs]
    corpus.write_jsonl(args.out, (corpus.graph_to_dict(g) for g in graphs))
    print("ingested %d sentences -> %s" % (len(graphs), args.out))
    return 0


def cmd_make_dataset(args) -> int:
    rng = random.Random(args.seed)
    dist = (datagen.QueryLengthDist.from_config(args.config) if args.config
            else datagen.QueryLengthDist.default())
    pairs = _load_rows_with_gold(args.input)
    built, skipped = [], []
    for g, gold in pairs:
        result = datagen.build_instance(g, gold, dist, rng)
        (skipped if isinstance(result, datagen.Skip) else built).append(result)
    test_tags = [False] * len(built)
    if args.test_input:
        test_pairs = _load_rows_with_gold(args.test_input)
        for g, gold in test_pairs:
            result = datagen.build_instance(g, gold, dist, rng)
            if isinstance(result, datagen.Skip):
                skipped.append(result)
            else:
                built.append(result)
                test_tags.append(True)
    def reserve_arg(raw):
        return float(raw) if "." in str(raw) else int(raw)

    train, val, test = datagen.split_corpus(
        built, seed=args.seed, val_reserve=reserve_arg(args.val_reserve),
        test_tags=test_tags if args.test_input else None,
        test_reserve=0 if args.test_input else reserve_arg(args.test_reserve))
    os.makedirs(args.out_dir, exist_ok=True)
    for name, block in (("train", train), ("validation", val), ("test", test)):
        corpus.write_instances(os.path.join(args.out_dir, "%s.jsonl" % name), block)
    print("wrote %d train / %d validation / %d test instances (skipped %d) -> %s"
          % (len(train), len(val), len(test), len(skipped), args.out_dir))
    return 0


def cmd_train_lr(args) -> int:
    instances = corpus.load_instances(args.train)
    decisions = list(engine.iter_oracle_decisions(instances))
    if args.kind == "random":
        policy = learn.fit_random_policy(decisions, seed=args.seed)
        learn.save_random_policy(policy, args.out)
        print("random policy accept_prob=%.4f on %d decisions -> %s"
              % (policy.accept_prob, len(decisions), args.out))
        return 0
    config = features.ABLATED if args.kind == "ablated" else None
    if config is not None:
        config = features.FeatureConfig(
            use_edge=True, use_stateful=False, use_interaction=False,
            D=2 ** args.d_bits, lexical_vocab_cutoff=args.vocab_cutoff)
    featurizer = _featurizer_from_args(args, (i.graph for i in instances), config)
    c = args.c
    if args.grid:
        if not args.val:
            raise ValueError("--grid needs --val instances")
        val_instances = corpus.load_instances(args.val)
        c, results = learn.grid_search_c(decisions, featurizer, val_instances)
        print("grid search: " + ", ".join("c=%g f1=%.4f" % (k, v)
                                          for k, v in sorted(results.items())))
    model = learn.train_lr(decisions, featurizer, c=c)
    kind = "lr-ablated" if args.kind == "ablated" else "lr"
    learn.save_lr_model(model, args.out, kind=kind)
    if args.dump_features:
        features.dump_feature_names(featurizer, model.weights, args.dump_features)
    print("trained %s on %d decisions (c=%g) -> %s" % (kind, len(decisions), c, args.out))
    return 0


def cmd_train_ilp(args) -> int:
    pairs = [(inst.graph, inst.gold) for inst in corpus.load_instances(args.train)]
    val_pairs = None
    if args.val:
        val_pairs = [(inst.graph, inst.gold) for inst in corpus.load_instances(args.val)]
    featurizer = _featurizer_from_args(args, (g for g, _ in pairs))
    model = ilp.train_perceptron(pairs, featurizer, epochs=args.epochs,
                                 node_limit=args.node_limit, val_pairs=val_pairs)
    ilp.save_ilp_model(model, args.out)
    history = model.train_stats.get("val_f1_history") or []
    if history:
        print("validation F1 by epoch: " + " ".join("%.4f" % v for v in history))
    print("trained ilp for %d epochs (%d updates, %d skipped) -> %s"
          % (args.epochs, model.train_stats["steps"], model.train_stats["skipped"], args.out))
    return 0


def cmd_train_lm(args) -> int:
    graphs = _load_corpus_graphs(args.train)
    sentences = [[t.form for t in g.tokens] for g in graphs]
    model = lm.train_lm(sentences, order=args.order, discount=args.discount)
    lm.write_arpa(model, args.out)
    print("trained order-%d lm on %d sentences -> %s" % (args.order, len(sentences), args.out))
    return 0


def cmd_compress(args) -> int:
    payload = learn.load_model_payload(args.model)
    name = {"lr": systems.VERTEX_LR, "lr-ablated": systems.ABLATED,
            "random": systems.RANDOM, "ilp": systems.ILP}[payload["kind"]]
    system = systems.load_system(name, args.model, node_limit=args.node_limit)
    instances = corpus.load_instances(args.input)
    rows = []
    for inst in instances:
        t0 = time.perf_counter()
        kept = system.compress(inst)
        ms = (time.perf_counter() - t0) * 1e3
        text, length = corpus.linearize(inst.graph, kept)
        rows.append({"id": inst.id, "kept": sorted(kept), "text": text,
                     "char_len": length, "timing": {"ms": ms}})
    corpus.write_jsonl(args.out, rows)
    print("compressed %d instances with %s -> %s" % (len(rows), name, args.out))
    return 0


def cmd_evaluate(args) -> int:
    registry = _parse_systems(args.system, args.node_limit)
    instances = corpus.load_instances(args.instances)
    language_model = lm.read_arpa(args.lm) if args.lm else None
    reports = {}
    for name in sorted(registry):
        reports[name] = evaluation.evaluate_suite(registry[name], instances,
                                                  lm=language_model)
    names = sorted(reports, key=lambda n: -(reports[n].aggregates["mean_f1"] or 0.0))
    significance = []
    metrics = ("f1", "slor") if language_model else ("f1",)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            significance.extend(evaluation.compare_reports(
                reports[a], reports[b], metrics=metrics,
                resamples=args.resamples, seed=args.seed))
    payload = {
        "version": evaluation.REPORT_VERSION,
        "systems": {name: r.to_dict() for name, r in reports.items()},
        "significance": significance,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
    if args.tsv_dir:
        os.makedirs(args.tsv_dir, exist_ok=True)
        for name, report in reports.items():
            with open(os.path.join(args.tsv_dir, "%s.tsv" % name), "w",
                      encoding="utf-8") as fh:
                fh.write(report.to_tsv())
    if args.figures:
        from qcomp import figures
        ordered = [reports[n] for n in names]
        figures.metric_bars(ordered, "f1", args.figures)
        figures.metric_bars(ordered, "ratio", args.figures)
        if language_model:
            figures.metric_bars(ordered, "slor", args.figures)
    for name in names:
        agg = reports[name].aggregates
        print("%-12s f1=%.4f ratio=%s slor=%s" % (
            name, agg["mean_f1"],
            "%.4f" % agg["mean_ratio"] if agg["mean_ratio"] is not None else "-",
            "%.4f" % agg["mean_slor"] if agg["mean_slor"] is not None else "-"))
    for entry in significance:
        print("%s: %s > %s  p=%.5f (two-sided %.5f)" % (
            entry["metric"], entry["system_a"] if entry["mean_a"] >= entry["mean_b"]
            else entry["system_b"],
            entry["system_b"] if entry["mean_a"] >= entry["mean_b"] else entry["system_a"],
            entry["p_value"], entry["p_two_sided"]))
    return 0


def cmd_bench(args) -> int:
    registry = _parse_systems(args.system, args.node_limit)
    instances = corpus.load_instances(args.instances)
    results = {}
    for name in sorted(registry):
        results[name] = evaluation.latency_bench(registry[name], instances,
                                                 n=args.n, seed=args.seed)
        print("%-12s %.3f ms/sentence (std %.3f, n=%d)"
              % (name, results[name].mean_ms, results[name].std_ms, args.n))
    payload = {"timing": {name: r.to_dict() for name, r in results.items()}}
    if args.linearity:
        probe_system = registry[sorted(registry)[0]]
        sizes, times_ms, r2 = evaluation.linearity_probe(probe_system)
        payload["timing"]["linearity"] = {
            "sizes": list(sizes), "times_ms": list(times_ms), "r_squared": r2}
        print("linearity: R^2=%.5f over sizes %s" % (r2, list(sizes)))
        if args.figures:
            from qcomp import figures
            figures.linearity_plot(sizes, times_ms, r2, args.figures)
    if args.figures:
        from qcomp import figures
        figures.latency_bars(results, args.figures)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=1)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from qcomp.service import create_app, index_corpus

    graphs = _load_corpus_graphs(args.corpus)
    index = index_corpus(graphs)
    registry = {}
    for name, path in ((systems.VERTEX_LR, args.model), (systems.ILP, args.ilp_model),
                       (systems.ABLATED, args.ablated_model),
                       (systems.RANDOM, args.random_model)):
        if path:
            registry[name] = systems.load_system(name, path, node_limit=args.node_limit)
    if not registry:
        raise ValueError("serve needs at least --model or --ilp-model")
    app = create_app(index, registry, ui_dir=args.ui)
    print("serving %d sentences with engines: %s" % (len(graphs), ", ".join(sorted(registry))))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcomp",
        description="query-focused sentence compression toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="CoNLL-U -> JSON-lines graphs")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--relabel", action="store_true",
                   help="suffix modifier labels with their function-word lemma")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("make-dataset", help="(sentence, gold) rows -> (S,Q,b,gold) instances")
    p.add_argument("--input", required=True, help="JSONL rows with a gold field")
    p.add_argument("--test-input", help="optional upstream test rows")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", help="JSON query-length distribution")
    p.add_argument("--val-reserve", default=str(datagen.PAPER_VAL_RESERVE),
                   help="validation size: count, or fraction when a float")
    p.add_argument("--test-reserve", default="0",
                   help="carve a test split when no --test-input is given")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_dataset)

    p = sub.add_parser("train-lr", help="train a vertex-addition decision model")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("full", "ablated", "random"), default="full")
    p.add_argument("--c", type=float, default=10.0, help="inverse regularization constant")
    p.add_argument("--grid", action="store_true", help="grid-search c on --val")
    p.add_argument("--val", help="validation instances for --grid")
    p.add_argument("--vocab-cutoff", type=int, default=5000)
    p.add_argument("--d-bits", type=int, default=18, help="hashed dimensionality = 2^bits")
    p.add_argument("--dump-features", help="TSV of feature name/index/weight")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_lr)

    p = sub.add_parser("train-ilp", help="train the edge-weight baseline (averaged perceptron)")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epochs", type=int, default=6)
    p.add_argument("--val", help="validation instances for the F1 history")
    p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    p.add_argument("--vocab-cutoff", type=int, default=5000)
    p.add_argument("--d-bits", type=int, default=18)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train_ilp)

    p = sub.add_parser("train-lm", help="train the trigram LM, write ARPA")
    p.add_argument("--train", required=True, help="graphs or instances (conllu/jsonl)")
    p.add_argument("--out", required=True)
    p.add_argument("--order", type=int, default=3, choices=(1, 2, 3))
    p.add_argument("--discount", type=float, default=lm.DISCOUNT)
    p.set_defaults(func=cmd_train_lm)

    p = sub.add_parser("compress", help="compress instances with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("evaluate", help="score systems, bootstrap significance, figures")
    p.add_argument("--instances", required=True)
    p.add_argument("--system", action="append", required=True,
                   metavar="NAME=MODEL", help="repeatable; names: %s" % ", ".join(systems.ENGINE_NAMES))
    p.add_argument("--lm", help="ARPA language model for SLOR")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--tsv-dir", help="per-instance TSV dumps")
    p.add_argument("--figures", help="directory for PNG figures")
    p.add_argument("--resamples", type=int, default=10_000)
    p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="latency benchmark and linearity probe")
    p.add_argument("--instances", required=True)
    p.add_argument("--system", action="append", required=True, metavar="NAME=MODEL")
    p.add_argument("-n", type=int, default=1000, help="draws with replacement")
    p.add_argument("--linearity", action="store_true",
                   help="fit wall time vs token count on synthetic chains")
    p.add_argument("--out", help="JSON output")
    p.add_argument("--figures", help="directory for PNG figures")
    p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("serve", help="run the snippet search service")
    p.add_argument("--corpus", required=True, help="conllu or jsonl sentences")
    p.add_argument("--model", help="vertex_lr model file")
    p.add_argument("--ilp-model", help="ilp model file")
    p.add_argument("--ablated-model", help="ablated model file")
    p.add_argument("--random-model", help="random policy file")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", help="directory with the built web UI to serve at /")
    p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as err:  # noqa: BLE001 - map any runtime failure to exit 1
        print("error: %s" % err, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
