"""Turning mention networks into identity clusterings.

Three routes: a naive nearest-earlier-neighbor baseline, an adapter for
community partitions, and the sequential antecedent-classifier procedure
with assignment-based conflict resolution inside each document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import assignment
from .antecedent import pair_features
from .errors import ConfigError, FormatError, ValidationError

_FORBIDDEN = -1e6  # score for (mention, cluster) cells with no antecedent


class Clustering:
    """Partial map mention_id -> cluster_id with densely allocated ids."""

    def __init__(self):
        self.assignment = {}
        self.next_cluster_id = 0

    def new_cluster(self):
        cid = self.next_cluster_id
        self.next_cluster_id += 1
        return cid

    def assign(self, mention_id, cluster_id):
        if not 0 <= cluster_id < self.next_cluster_id:
            raise ValidationError(f"cluster id {cluster_id} was never allocated")
        self.assignment[mention_id] = cluster_id

    def add_to_new_cluster(self, mention_id):
        cid = self.new_cluster()
        self.assignment[mention_id] = cid
        return cid

    def cluster_of(self, mention_id):
        return self.assignment.get(mention_id)

    def __contains__(self, mention_id):
        return mention_id in self.assignment

    def __len__(self):
        return len(self.assignment)

    def clusters(self):
        """cluster_id -> sorted member mention ids (empty clusters omitted)."""
        out = {}
        for m in sorted(self.assignment):
            out.setdefault(self.assignment[m], []).append(m)
        return out

    def as_sets(self):
        return [set(ms) for ms in self.clusters().values()]

    def restrict(self, mention_ids):
        """New clustering over the given mentions only, ids re-densified."""
        keep = set(mention_ids)
        out = Clustering()
        relabel = {}
        for m in sorted(self.assignment):
            if m not in keep:
                continue
            old = self.assignment[m]
            if old not in relabel:
                relabel[old] = out.new_cluster()
            out.assignment[m] = relabel[old]
        return out

    @classmethod
    def from_partition(cls, partition):
        out = cls()
        labels = partition.labels
        for _ in range(partition.num_communities):
            out.new_cluster()
        for node in range(partition.num_nodes):
            out.assignment[node] = int(labels[node])
        return out

    @classmethod
    def from_pairs(cls, pairs):
        out = cls()
        seen = {}
        for m, c in pairs:
            if c not in seen:
                seen[c] = out.new_cluster()
            out.assignment[m] = seen[c]
        return out


@dataclass
class InferenceConfig:
    method: str = "antecedent"  # "naive", "communities", or "antecedent"
    no_antecedent_score: float = 0.5
    seed_with_gold_train: bool = True

    def __post_init__(self):
        if not 0.0 < self.no_antecedent_score < 1.0:
            raise ConfigError(
                f"no_antecedent_score must lie in (0, 1), got {self.no_antecedent_score}"
            )


def gold_clustering(corpus, doc_ids=None):
    """Clustering of the gold-labeled mentions (optionally only for some
    documents); ambiguous mentions are left out."""
    keep = None if doc_ids is None else set(doc_ids)
    out = Clustering()
    label_to_cid = {}
    for m in corpus.mentions:
        if m.gold_identity is None:
            continue
        if keep is not None and m.doc_id not in keep:
            continue
        if m.gold_identity not in label_to_cid:
            label_to_cid[m.gold_identity] = out.new_cluster()
        out.assignment[m.mention_id] = label_to_cid[m.gold_identity]
    return out


def naive_cluster(corpus, graph, embeddings):
    """Assign each mention to the cluster of its nearest earlier neighbor in
    the network (cosine distance); mentions with no earlier neighbor start
    their own cluster."""
    if graph.num_nodes != len(corpus.mentions):
        raise ValidationError("graph does not span the corpus mention set")
    unit = embeddings.unit()
    out = Clustering()
    for m in corpus.mentions:
        i = m.mention_id
        earlier = sorted(j for j in graph.neighbors(i) if j < i)
        if not earlier:
            out.add_to_new_cluster(i)
            continue
        sims = unit[earlier] @ unit[i]
        # ties at equal distance break toward the lower mention id
        nearest = earlier[int(np.argmax(sims))]
        out.assignment[i] = out.assignment[nearest]
    return out


def communities_to_clustering(partition):
    """Identity adapter: community labels become cluster ids."""
    return Clustering.from_partition(partition)


class GoldOracleModel:
    """Perfect-knowledge stand-in for a trained classifier: scores 1 for
    gold-coreferent pairs and 0 otherwise. Diagnostic upper bound only."""

    def __init__(self, corpus):
        self._gold = corpus.gold_labels()

    def score_batch(self, features, pairs=None):
        if pairs is None:
            raise ValidationError("the oracle scores (mention, antecedent) pairs")
        return np.asarray(
            [
                1.0
                if self._gold[i] is not None and self._gold[i] == self._gold[j]
                else 0.0
                for i, j in pairs
            ]
        )


def _score_pairs(model, embeddings, corpus, pairs):
    feats = np.stack([pair_features(embeddings, corpus, i, j) for i, j in pairs])
    try:
        return np.asarray(model.score_batch(feats, pairs=pairs), dtype=np.float64)
    except TypeError:
        return np.asarray(model.score_batch(feats), dtype=np.float64)


def antecedent_cluster(corpus, graph, embeddings, model, config, infer_docs=None,
                       seed_docs=None):
    """Sequential cluster inference with a pairwise antecedent classifier.

    Documents are processed in corpus order. Within one document, each
    mention's candidate antecedents are its already-clustered earlier graph
    neighbors; candidates scoring <= 0.5 are discarded. A mention with no
    surviving candidate starts a new cluster. When several mentions of the
    document compete for the same cluster, a maximum-total-score assignment
    resolves the conflict, with one no-antecedent column per mention (each
    worth config.no_antecedent_score) so that opting out stays available;
    mentions landing there start new clusters. A cluster can gain at most
    one mention per document.

    With config.seed_with_gold_train, the gold-labeled mentions of the
    documents outside infer_docs (or of seed_docs, when given) are
    pre-assigned to their gold clusters before any inference happens.
    """
    if graph.num_nodes != len(corpus.mentions):
        raise ValidationError("graph does not span the corpus mention set")
    infer_set = None if infer_docs is None else set(infer_docs)
    docs_to_infer = [
        d for d in corpus.documents if infer_set is None or d.doc_id in infer_set
    ]

    out = Clustering()
    if config.seed_with_gold_train and (infer_set is not None or seed_docs is not None):
        if seed_docs is None:
            seed_docs = {d.doc_id for d in corpus.documents} - infer_set
        seeded = gold_clustering(corpus, seed_docs)
        out.assignment.update(seeded.assignment)
        out.next_cluster_id = seeded.next_cluster_id

    for doc in docs_to_infer:
        _resolve_document(doc, corpus, graph, embeddings, model, config, out)
    return out


def _resolve_document(doc, corpus, graph, embeddings, model, config, out):
    # per mention: mean surviving-antecedent score per candidate cluster
    # (used for conflict resolution) and the cluster of the single
    # highest-scoring antecedent (used for unambiguous assignment)
    cluster_scores = {}
    top_cluster = {}
    for m in doc.mentions:
        i = m.mention_id
        candidates = sorted(
            j for j in graph.neighbors(i) if j < i and j in out
        )
        if not candidates:
            cluster_scores[i] = {}
            continue
        scores = _score_pairs(model, embeddings, corpus, [(i, j) for j in candidates])
        per_cluster = {}
        best_score = 0.5
        for j, s in zip(candidates, scores):
            s = float(s)
            if s > 0.5:
                per_cluster.setdefault(out.assignment[j], []).append(s)
                if s > best_score:
                    best_score = s
                    top_cluster[i] = out.assignment[j]
        cluster_scores[i] = {
            c: float(np.mean(vals)) for c, vals in per_cluster.items()
        }

    claimed = {}
    for i, by_cluster in cluster_scores.items():
        for c in by_cluster:
            claimed.setdefault(c, []).append(i)

    contested_mentions = []
    for m in doc.mentions:
        i = m.mention_id
        by_cluster = cluster_scores[i]
        if not by_cluster:
            out.add_to_new_cluster(i)
        elif all(len(claimed[c]) == 1 for c in by_cluster):
            out.assignment[i] = top_cluster[i]
        else:
            contested_mentions.append(i)

    if not contested_mentions:
        return

    taken = {out.assignment[m.mention_id] for m in doc.mentions if m.mention_id in out}
    columns = sorted(
        {c for i in contested_mentions for c in cluster_scores[i] if c not in taken}
    )
    n_rows = len(contested_mentions)
    matrix = np.full((n_rows, len(columns) + n_rows), _FORBIDDEN)
    for row, i in enumerate(contested_mentions):
        for col, c in enumerate(columns):
            if c in cluster_scores[i]:
                matrix[row, col] = cluster_scores[i][c]
        matrix[row, len(columns) + row] = config.no_antecedent_score
    for row, col in assignment.solve_max(matrix):
        i = contested_mentions[row]
        if col < len(columns):
            out.assignment[i] = columns[col]
        else:
            out.add_to_new_cluster(i)


def save_clustering(clustering, path):
    """Text export: `mention_id<TAB>cluster_id`, sorted by mention."""
    with open(path, "w", encoding="utf-8") as fh:
        for m in sorted(clustering.assignment):
            fh.write(f"{m}\t{clustering.assignment[m]}\n")


def save_clustering_json(clustering, path):
    """JSON export with per-cluster member lists."""
    payload = {
        "clusters": [
            {"cluster_id": cid, "mentions": members}
            for cid, members in sorted(clustering.clusters().items())
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_clustering(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}: line {lineno}: expected mention, cluster")
            try:
                pairs.append((int(parts[0]), int(parts[1])))
            except ValueError as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from exc
    return Clustering.from_pairs(pairs)
