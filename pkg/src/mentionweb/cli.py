"""Batch command-line surface wiring the whole pipeline.

Subcommands: synth, graph, communities, pairs, train, infer, eval, sweep-k,
learning-curve, run. Every command is deterministic under a fixed seed and
writes byte-identical output files on repeated runs. The default output
directory comes from --out-dir, falling back to the MENTIONWEB_OUTDIR
environment variable, then the working directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict

import numpy as np

from . import antecedent as ant
from . import communities as comm
from . import graph as graphs
from . import inference as inf
from . import metrics
from .corpus import SplitSpec, SynthConfig, generate_synthetic, load_corpus, save_corpus, split
from .embeddings import load_embeddings, save_embeddings
from .errors import ConfigError, FormatError, TrainingError, ValidationError

ENV_OUT_DIR = "MENTIONWEB_OUTDIR"


def _out_dir(value):
    path = value or os.environ.get(ENV_OUT_DIR) or "."
    os.makedirs(path, exist_ok=True)
    return path


def _path(out_dir, name):
    return os.path.join(out_dir, name)


def _parse_fractions(text):
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise ConfigError(f"expected three comma-separated fractions, got {text!r}")
    return tuple(parts)


def _parse_floats(text):
    return [float(x) for x in text.split(",")]


def _parse_ints(text):
    return [int(x) for x in text.split(",")]


def _load_inputs(args):
    corpus = load_corpus(args.corpus)
    embeddings = load_embeddings(args.embeddings)
    if len(embeddings) != corpus.num_mentions:
        raise ValidationError(
            f"embedding rows ({len(embeddings)}) != corpus mentions "
            f"({corpus.num_mentions})"
        )
    return corpus, embeddings


# ---------------------------------------------------------------- commands


def cmd_synth(args):
    config = SynthConfig(
        num_individuals=args.individuals,
        dim=args.dim,
        docs=args.docs,
        mentions_per_doc=tuple(args.mentions_per_doc),
        homograph_rate=args.homograph_rate,
        synonym_rate=args.synonym_rate,
        center_separation=args.center_separation,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    corpus, embeddings = generate_synthetic(config)
    out_dir = _out_dir(args.out_dir)
    save_corpus(corpus, _path(out_dir, args.corpus_out))
    save_embeddings(embeddings, _path(out_dir, args.embeddings_out))
    print(
        f"wrote {corpus.num_documents} documents / {corpus.num_mentions} mentions "
        f"to {out_dir}"
    )


def cmd_graph(args):
    corpus, embeddings = _load_inputs(args)
    config = graphs.GraphConfig(
        method=args.method, k=args.k, multiplier=args.multiplier, threshold=args.threshold
    )
    g = graphs.build_graph(embeddings, corpus, config)
    out_dir = _out_dir(args.out_dir)
    graphs.save_graph(g, _path(out_dir, args.out))
    print(f"wrote graph with {g.num_nodes} nodes / {g.num_edges} edges")


def cmd_communities(args):
    g = graphs.load_graph(args.graph)
    config = comm.CommunityConfig(
        algorithm=args.algorithm,
        resolution=args.resolution,
        seed=args.seed,
        max_iterations=args.max_iterations,
        weighted_votes=not args.unweighted_votes,
    )
    partition = comm.detect_communities(g, config)
    out_dir = _out_dir(args.out_dir)
    comm.save_partition(partition, _path(out_dir, args.out))
    print(f"found {partition.num_communities} communities over {g.num_nodes} nodes")


def _write_pairs_csv(pairs, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mention_i", "mention_j", "surface_match", "label"])
        for e in pairs:
            writer.writerow(
                [e.mention_i, e.mention_j, int(e.features[-1]), e.label]
            )


def _read_pairs_csv(path, corpus, embeddings):
    examples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            i, j = int(row["mention_i"]), int(row["mention_j"])
            examples.append(
                ant.PairExample(
                    i, j, ant.pair_features(embeddings, corpus, i, j), int(row["label"])
                )
            )
    return examples


def cmd_pairs(args):
    corpus, embeddings = _load_inputs(args)
    if args.strategy == "network":
        if not args.graph:
            raise ConfigError("--graph is required for the network strategy")
        g = graphs.load_graph(args.graph)
        pairs = ant.sample_pairs_network(
            corpus, g, embeddings, add_all_positives=args.add_all_positives
        )
    else:
        pairs = ant.sample_pairs_nearest(corpus, embeddings, n=args.nearest_n)
    out_dir = _out_dir(args.out_dir)
    _write_pairs_csv(pairs, _path(out_dir, args.out))
    positives = sum(e.label for e in pairs)
    print(f"wrote {len(pairs)} pairs ({positives} positive)")


def cmd_train(args):
    corpus, embeddings = _load_inputs(args)
    pairs = _read_pairs_csv(args.pairs, corpus, embeddings)
    dev_pairs = (
        _read_pairs_csv(args.dev_pairs, corpus, embeddings) if args.dev_pairs else []
    )
    config = ant.TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        epochs=args.epochs,
        patience=args.patience,
        hidden_size=args.hidden_size,
        dropout=args.dropout,
        seed=args.seed,
    )
    model = ant.train(pairs, dev_pairs, config)
    out_dir = _out_dir(args.out_dir)
    ant.save_model(
        model,
        _path(out_dir, args.out),
        config=config,
        fingerprint=ant.pairs_fingerprint(pairs),
    )
    print(f"trained on {len(pairs)} pairs; model written to {args.out}")


def _split_parts(corpus, args):
    """(train, dev, test) parts when --split is given, else None."""
    if not args.split:
        return None
    spec = SplitSpec(fractions=_parse_fractions(args.split), seed=args.split_seed)
    return split(corpus, spec)


def cmd_infer(args):
    corpus, embeddings = _load_inputs(args)
    config = inf.InferenceConfig(
        method=args.method,
        no_antecedent_score=args.no_antecedent_score,
        seed_with_gold_train=not args.no_gold_seed,
    )
    if args.method == "communities":
        if not args.partition:
            raise ConfigError("--partition is required for method=communities")
        partition = comm.load_partition(args.partition)
        clustering = inf.communities_to_clustering(partition)
    else:
        if not args.graph:
            raise ConfigError(f"--graph is required for method={args.method}")
        g = graphs.load_graph(args.graph)
        if args.method == "naive":
            clustering = inf.naive_cluster(corpus, g, embeddings)
        else:
            if args.oracle:
                model = inf.GoldOracleModel(corpus)
                if args.add_gold_links:
                    g = graphs.union_graphs(g, graphs.build_gold_links(corpus, embeddings))
            elif args.model:
                model = ant.load_model(args.model)
            else:
                raise ConfigError("method=antecedent needs --model or --oracle")
            parts = _split_parts(corpus, args)
            infer_docs = set(parts[2].doc_ids()) if parts else None
            seed_docs = set(parts[0].doc_ids()) if parts else None
            clustering = inf.antecedent_cluster(
                corpus, g, embeddings, model, config,
                infer_docs=infer_docs, seed_docs=seed_docs,
            )
    out_dir = _out_dir(args.out_dir)
    inf.save_clustering(clustering, _path(out_dir, args.out))
    inf.save_clustering_json(clustering, _path(out_dir, args.out) + ".json")
    n_clusters = len(clustering.clusters())
    print(f"wrote clustering: {len(clustering)} mentions in {n_clusters} clusters")


def cmd_eval(args):
    corpus = load_corpus(args.corpus)
    clustering = inf.load_clustering(args.clustering)
    parts = _split_parts(corpus, args)
    if parts:
        part = {"train": 0, "dev": 1, "test": 2}[args.part]
        gold = inf.gold_clustering(corpus, parts[part].doc_ids())
    else:
        gold = inf.gold_clustering(corpus)
    options = metrics.EvalOptions(exclude_gold_singletons=args.exclude_gold_singletons)
    report = metrics.evaluate(gold, clustering, options)
    out_dir = _out_dir(args.out_dir)
    with open(_path(out_dir, args.report_out), "w", encoding="utf-8") as fh:
        fh.write(metrics.report_json(report))
    table = metrics.report_table(report)
    with open(_path(out_dir, args.table_out), "w", encoding="utf-8") as fh:
        fh.write(table)
    print(table, end="")


def run_sweep_k(corpus, embeddings, k_values, algorithm, resolution=1.0, seed=0,
                eval_options=None):
    """Grid-search the edge threshold per k, maximizing the CoNLL score of
    community detection against the corpus gold labels.

    The threshold grid is the deciles of the kNN graph's edge weights plus 0.
    Returns rows (k, best_threshold, best_conll).
    """
    gold = inf.gold_clustering(corpus)
    rows = []
    for k in k_values:
        g = graphs.build_knn(embeddings, k)
        weights = np.asarray(sorted(w for _, _, w in g.edges()))
        deciles = np.quantile(weights, np.arange(1, 10) / 10.0) if weights.size else []
        thresholds = sorted({0.0, *(float(t) for t in deciles)})
        best = None
        for t in thresholds:
            gt = graphs.threshold_edges(g, t)
            config = comm.CommunityConfig(
                algorithm=algorithm, resolution=resolution, seed=seed
            )
            try:
                partition = comm.detect_communities(gt, config)
            except Exception:
                partition = comm.Partition(np.arange(gt.num_nodes))
            clustering = inf.communities_to_clustering(partition)
            report = metrics.evaluate(gold, clustering, eval_options)
            if best is None or report.conll > best[1]:
                best = (t, report.conll)
        rows.append((k, best[0], best[1]))
    return rows


def cmd_sweep_k(args):
    corpus, embeddings = _load_inputs(args)
    parts = _split_parts(corpus, args)
    if parts:
        dev = parts[1]
        corpus = dev
        embeddings = embeddings.subset(dev.source_ids)
    options = metrics.EvalOptions(exclude_gold_singletons=args.exclude_gold_singletons)
    rows = run_sweep_k(
        corpus,
        embeddings,
        _parse_ints(args.k_values),
        args.algorithm,
        resolution=args.resolution,
        seed=args.seed,
        eval_options=options,
    )
    out_dir = _out_dir(args.out_dir)
    with open(_path(out_dir, args.out), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "threshold", "conll"])
        for k, t, score in rows:
            writer.writerow([k, f"{t:.9g}", f"{score:.6f}"])
    for k, t, score in rows:
        print(f"k={k}: best threshold {t:.9g}, conll {score:.6f}")


def _leading_subcorpus(part, n_docs):
    """The first n documents of a split part, ids re-densified; source ids
    keep pointing at the original corpus."""
    from .corpus import Corpus

    specs = part.to_specs()[:n_docs]
    n_mentions = sum(len(d.mentions) for d in part.documents[:n_docs])
    return Corpus(specs, source_ids=part.source_ids[:n_mentions])


def _sample_pairs(corpus, embeddings, graph_config, strategy, add_all_positives,
                  nearest_n):
    if strategy == "nearest":
        return ant.sample_pairs_nearest(corpus, embeddings, n=nearest_n)
    config = graphs.GraphConfig(**asdict(graph_config))
    config.k = min(config.k, max(1, corpus.num_mentions - 1))
    g = graphs.build_graph(embeddings, corpus, config)
    return ant.sample_pairs_network(
        corpus, g, embeddings, add_all_positives=add_all_positives
    )


def run_learning_curve(corpus, embeddings, fractions, split_spec, graph_config,
                       train_config, inference_config, pair_strategy="network",
                       add_all_positives=True, nearest_n=20, eval_options=None):
    """Antecedent-classifier performance as a function of how many training
    documents are annotated.

    Each row trains on the leading fraction of training documents (corpus
    order), seeds inference with gold clusters for those same documents, and
    evaluates the test split. The best community-detection CoNLL on the same
    test mentions is repeated in every row as an unsupervised reference.
    Returns rows (fraction, train_docs, status, conll, community_conll).
    """
    train_part, dev_part, test_part = split(corpus, split_spec)
    test_docs = set(test_part.doc_ids())
    gold_test = inf.gold_clustering(corpus, test_docs)

    full_graph = graphs.build_graph(embeddings, corpus, graph_config)
    community_best = 0.0
    for algorithm in ("leiden", "label_propagation"):
        config = comm.CommunityConfig(algorithm=algorithm, seed=train_config.seed)
        try:
            partition = comm.detect_communities(full_graph, config)
        except Exception:
            continue
        clustering = inf.communities_to_clustering(partition)
        report = metrics.evaluate(gold_test, clustering, eval_options)
        community_best = max(community_best, report.conll)

    dev_embeddings = embeddings.subset(dev_part.source_ids)
    dev_pairs = _sample_pairs(
        dev_part, dev_embeddings, graph_config, pair_strategy, add_all_positives,
        nearest_n,
    )

    rows = []
    for fraction in fractions:
        if not 0.0 < fraction <= 1.0:
            raise ConfigError(f"fractions must lie in (0, 1], got {fraction}")
        n_docs = max(1, int(fraction * train_part.num_documents + 0.5))
        lead = _leading_subcorpus(train_part, n_docs)
        lead_embeddings = embeddings.subset(lead.source_ids)
        pairs = _sample_pairs(
            lead, lead_embeddings, graph_config, pair_strategy, add_all_positives,
            nearest_n,
        )
        labels = {e.label for e in pairs}
        if labels != {0, 1}:
            rows.append((fraction, n_docs, "no_positive_pairs" if 1 not in labels
                         else "no_negative_pairs", "", f"{community_best:.6f}"))
            continue
        model = ant.train(pairs, dev_pairs, train_config)
        clustering = inf.antecedent_cluster(
            corpus, full_graph, embeddings, model, inference_config,
            infer_docs=test_docs, seed_docs=set(lead.doc_ids()),
        )
        report = metrics.evaluate(gold_test, clustering, eval_options)
        rows.append(
            (fraction, n_docs, "ok", f"{report.conll:.6f}", f"{community_best:.6f}")
        )
    return rows


def cmd_learning_curve(args):
    corpus, embeddings = _load_inputs(args)
    split_spec = SplitSpec(fractions=_parse_fractions(args.split), seed=args.split_seed)
    graph_config = graphs.GraphConfig(
        method=args.method, k=args.k, multiplier=args.multiplier, threshold=args.threshold
    )
    train_config = ant.TrainConfig(
        learning_rate=args.learning_rate,
        batch_size=args.batch_size,
        epochs=args.epochs,
        patience=args.patience,
        hidden_size=args.hidden_size,
        dropout=args.dropout,
        seed=args.seed,
    )
    inference_config = inf.InferenceConfig(
        method="antecedent", no_antecedent_score=args.no_antecedent_score
    )
    options = metrics.EvalOptions(exclude_gold_singletons=args.exclude_gold_singletons)
    rows = run_learning_curve(
        corpus,
        embeddings,
        _parse_floats(args.fractions),
        split_spec,
        graph_config,
        train_config,
        inference_config,
        pair_strategy=args.strategy,
        add_all_positives=args.add_all_positives,
        nearest_n=args.nearest_n,
        eval_options=options,
    )
    out_dir = _out_dir(args.out_dir)
    with open(_path(out_dir, args.out), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fraction", "train_docs", "status", "conll", "community_conll"])
        for row in rows:
            writer.writerow(row)
    for fraction, n_docs, status, score, baseline in rows:
        print(f"fraction {fraction}: {status} conll={score or 'n/a'} "
              f"(community baseline {baseline})")


# ---------------------------------------------------------------- pipeline

_PIPELINE_DEFAULTS = {
    "corpus": None,
    "embeddings": None,
    "output_dir": None,
    "seed": 13,
    "split": None,
    "graph": {"method": "knn", "k": 5, "multiplier": 1.0, "threshold": None},
    "communities": {
        "algorithm": "leiden",
        "resolution": 1.0,
        "max_iterations": 100,
        "weighted_votes": True,
        "seed": None,
    },
    "pairs": {"strategy": "network", "add_all_positives": True, "nearest_n": 20},
    "train": {
        "learning_rate": 1e-3,
        "batch_size": 128,
        "epochs": 20,
        "patience": 3,
        "hidden_size": 150,
        "dropout": 0.5,
        "seed": None,
    },
    "inference": {
        "method": "antecedent",
        "no_antecedent_score": 0.5,
        "seed_with_gold_train": True,
        "oracle": False,
    },
    "eval": {"exclude_gold_singletons": False},
}


def _merge_config(user):
    config = {}
    for key, default in _PIPELINE_DEFAULTS.items():
        if isinstance(default, dict):
            section = dict(default)
            for sub_key, value in (user.get(key) or {}).items():
                if sub_key not in section:
                    raise ConfigError(f"unknown config key {key}.{sub_key}")
                section[sub_key] = value
            config[key] = section
        else:
            config[key] = user.get(key, default)
    unknown = set(user) - set(_PIPELINE_DEFAULTS) - {"split"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config["split"] = user.get("split")
    return config


def load_pipeline_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    return _merge_config(user)


def run_pipeline(config):
    """Execute a configured end-to-end run and write all artifacts.

    Emits graph.tsv, clustering.tsv(.json), report.json/report.txt, the
    model checkpoint for supervised runs, a partition for community runs,
    and effective_config.json which reproduces the run exactly.
    """
    if not config.get("corpus") or not config.get("embeddings"):
        raise ConfigError("pipeline config needs 'corpus' and 'embeddings' paths")
    seed = config["seed"]
    if config["communities"]["seed"] is None:
        config["communities"]["seed"] = seed
    if config["train"]["seed"] is None:
        config["train"]["seed"] = seed
    out_dir = _out_dir(config.get("output_dir"))
    config["output_dir"] = out_dir

    corpus = load_corpus(config["corpus"])
    embeddings = load_embeddings(config["embeddings"])
    if len(embeddings) != corpus.num_mentions:
        raise ValidationError("embedding rows do not match corpus mentions")

    with open(_path(out_dir, "effective_config.json"), "w", encoding="utf-8") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
        fh.write("\n")

    parts = None
    if config["split"]:
        spec = SplitSpec(
            fractions=tuple(config["split"]["fractions"]),
            seed=config["split"].get("seed", seed),
        )
        parts = split(corpus, spec)

    graph_config = graphs.GraphConfig(**config["graph"])
    full_graph = graphs.build_graph(embeddings, corpus, graph_config)
    graphs.save_graph(full_graph, _path(out_dir, "graph.tsv"))

    method = config["inference"]["method"]
    inference_config = inf.InferenceConfig(
        method=method,
        no_antecedent_score=config["inference"]["no_antecedent_score"],
        seed_with_gold_train=config["inference"]["seed_with_gold_train"],
    )

    if method == "naive":
        clustering = inf.naive_cluster(corpus, full_graph, embeddings)
    elif method == "communities":
        community_config = comm.CommunityConfig(
            algorithm=config["communities"]["algorithm"],
            resolution=config["communities"]["resolution"],
            seed=config["communities"]["seed"],
            max_iterations=config["communities"]["max_iterations"],
            weighted_votes=config["communities"]["weighted_votes"],
        )
        partition = comm.detect_communities(full_graph, community_config)
        comm.save_partition(partition, _path(out_dir, "partition.tsv"))
        clustering = inf.communities_to_clustering(partition)
    elif method == "antecedent":
        train_config = ant.TrainConfig(**config["train"])
        if config["inference"]["oracle"]:
            model = inf.GoldOracleModel(corpus)
            inference_graph = graphs.union_graphs(
                full_graph, graphs.build_gold_links(corpus, embeddings)
            )
        else:
            train_part = parts[0] if parts else corpus
            train_embeddings = (
                embeddings.subset(train_part.source_ids) if parts else embeddings
            )
            pairs = _sample_pairs(
                train_part,
                train_embeddings,
                graph_config,
                config["pairs"]["strategy"],
                config["pairs"]["add_all_positives"],
                config["pairs"]["nearest_n"],
            )
            dev_pairs = []
            if parts:
                dev_embeddings = embeddings.subset(parts[1].source_ids)
                dev_pairs = _sample_pairs(
                    parts[1],
                    dev_embeddings,
                    graph_config,
                    config["pairs"]["strategy"],
                    config["pairs"]["add_all_positives"],
                    config["pairs"]["nearest_n"],
                )
            model = ant.train(pairs, dev_pairs, train_config)
            ant.save_model(
                model,
                _path(out_dir, "model.mwm"),
                config=train_config,
                fingerprint=ant.pairs_fingerprint(pairs),
            )
            inference_graph = full_graph
        infer_docs = set(parts[2].doc_ids()) if parts else None
        seed_docs = set(parts[0].doc_ids()) if parts else None
        clustering = inf.antecedent_cluster(
            corpus, inference_graph, embeddings, model, inference_config,
            infer_docs=infer_docs, seed_docs=seed_docs,
        )
    else:
        raise ConfigError(f"unknown inference method {method!r}")

    inf.save_clustering(clustering, _path(out_dir, "clustering.tsv"))
    inf.save_clustering_json(clustering, _path(out_dir, "clustering.json"))

    gold_docs = parts[2].doc_ids() if parts else None
    gold = inf.gold_clustering(corpus, gold_docs)
    options = metrics.EvalOptions(
        exclude_gold_singletons=config["eval"]["exclude_gold_singletons"]
    )
    report = metrics.evaluate(gold, clustering, options)
    with open(_path(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(metrics.report_json(report))
    with open(_path(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(metrics.report_table(report))
    return report


def cmd_run(args):
    config = load_pipeline_config(args.config)
    if args.seed is not None:
        config["seed"] = args.seed
        config["communities"]["seed"] = None
        config["train"]["seed"] = None
    if args.out_dir:
        config["output_dir"] = args.out_dir
    if args.method:
        config["inference"]["method"] = args.method
    report = run_pipeline(config)
    print(metrics.report_table(report), end="")


# ---------------------------------------------------------------- parser


def _add_out_dir(parser):
    parser.add_argument(
        "--out-dir",
        default=None,
        help=f"output directory (default: ${ENV_OUT_DIR} or the working directory)",
    )


def _add_split_args(parser):
    parser.add_argument(
        "--split", default=None,
        help="train,dev,test fractions, e.g. 0.6,0.2,0.2 (document-level split)",
    )
    parser.add_argument("--split-seed", type=int, default=13)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mentionweb",
        description="Cluster ambiguous name mentions over embedding networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus and embeddings")
    p.add_argument("--individuals", type=int, default=20)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--docs", type=int, default=100)
    p.add_argument("--mentions-per-doc", type=int, nargs=2, default=(2, 4),
                   metavar=("LO", "HI"))
    p.add_argument("--homograph-rate", type=float, default=0.0)
    p.add_argument("--synonym-rate", type=float, default=0.0)
    p.add_argument("--center-separation", type=float, default=0.5)
    p.add_argument("--noise-sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--corpus-out", default="corpus.jsonl")
    p.add_argument("--embeddings-out", default="embeddings.mwe")
    _add_out_dir(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("graph", help="build a mention network")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--method", choices=["knn", "surface_form"], default="knn")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--multiplier", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--out", default="graph.tsv")
    _add_out_dir(p)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("communities", help="detect communities on a saved graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--algorithm", choices=["leiden", "label_propagation"],
                   default="leiden")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--max-iterations", type=int, default=100)
    p.add_argument("--unweighted-votes", action="store_true")
    p.add_argument("--out", default="partition.tsv")
    _add_out_dir(p)
    p.set_defaults(func=cmd_communities)

    p = sub.add_parser("pairs", help="sample labeled antecedent pairs")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--graph", default=None)
    p.add_argument("--strategy", choices=["network", "nearest"], default="network")
    p.add_argument("--add-all-positives", action="store_true")
    p.add_argument("--nearest-n", type=int, default=20)
    p.add_argument("--out", default="pairs.csv")
    _add_out_dir(p)
    p.set_defaults(func=cmd_pairs)

    p = sub.add_parser("train", help="train the antecedent classifier")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--dev-pairs", default=None)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--hidden-size", type=int, default=150)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", default="model.mwm")
    _add_out_dir(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="produce a clustering")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--method", choices=["naive", "communities", "antecedent"],
                   required=True)
    p.add_argument("--graph", default=None)
    p.add_argument("--partition", default=None)
    p.add_argument("--model", default=None)
    p.add_argument("--oracle", action="store_true",
                   help="score pairs by gold labels (diagnostic upper bound)")
    p.add_argument("--add-gold-links", action="store_true",
                   help="with --oracle: add every gold coreference edge to the graph")
    p.add_argument("--no-antecedent-score", type=float, default=0.5)
    p.add_argument("--no-gold-seed", action="store_true",
                   help="cold start instead of seeding gold train clusters")
    _add_split_args(p)
    p.add_argument("--out", default="clustering.tsv")
    _add_out_dir(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("eval", help="score a clustering against gold labels")
    p.add_argument("--corpus", required=True)
    p.add_argument("--clustering", required=True)
    p.add_argument("--exclude-gold-singletons", action="store_true")
    _add_split_args(p)
    p.add_argument("--part", choices=["train", "dev", "test"], default="test")
    p.add_argument("--report-out", default="report.json")
    p.add_argument("--table-out", default="report.txt")
    _add_out_dir(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-k", help="grid-search k and edge threshold")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k-values", required=True, help="comma-separated, e.g. 5,10,15")
    p.add_argument("--algorithm", choices=["leiden", "label_propagation"],
                   default="leiden")
    p.add_argument("--resolution", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--exclude-gold-singletons", action="store_true")
    _add_split_args(p)
    p.add_argument("--out", default="sweep_k.csv")
    _add_out_dir(p)
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("learning-curve",
                       help="score vs fraction of annotated training documents")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--fractions", required=True, help="e.g. 0.2,0.4,0.6,0.8,1.0")
    p.add_argument("--method", choices=["knn", "surface_form"], default="knn")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--multiplier", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--strategy", choices=["network", "nearest"], default="network")
    p.add_argument("--add-all-positives", action="store_true")
    p.add_argument("--nearest-n", type=int, default=20)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--patience", type=int, default=3)
    p.add_argument("--hidden-size", type=int, default=150)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--no-antecedent-score", type=float, default=0.5)
    p.add_argument("--exclude-gold-singletons", action="store_true")
    p.add_argument("--split", default="0.6,0.2,0.2")
    p.add_argument("--split-seed", type=int, default=13)
    p.add_argument("--out", default="learning_curve.csv")
    _add_out_dir(p)
    p.set_defaults(func=cmd_learning_curve)

    p = sub.add_parser("run", help="run a configured end-to-end pipeline")
    p.add_argument("--config", required=True, help="pipeline JSON config file")
    p.add_argument("--seed", type=int, default=None, help="override the global seed")
    p.add_argument("--method", choices=["naive", "communities", "antecedent"],
                   default=None, help="override the inference method")
    _add_out_dir(p)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, FormatError, ValidationError, TrainingError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
