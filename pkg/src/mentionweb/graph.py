"""Weighted mention networks induced from embeddings.

Two construction methods: k-nearest-neighbor graphs and a surface-form radius
heuristic (link everything closer than a multiple of the distance to the
furthest identically-named mention). Edge weights are always cosine
similarities between the mention vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, ValidationError


class MentionGraph:
    """Undirected weighted graph over mention ids 0..num_nodes-1."""

    def __init__(self, num_nodes):
        if num_nodes < 0:
            raise ValidationError(f"negative node count {num_nodes}")
        self.num_nodes = num_nodes
        self._adj = [dict() for _ in range(num_nodes)]

    def add_edge(self, i, j, weight):
        if i == j:
            raise ValidationError(f"self-loop at node {i}")
        if not (0 <= i < self.num_nodes and 0 <= j < self.num_nodes):
            raise ValidationError(f"edge ({i},{j}) outside 0..{self.num_nodes - 1}")
        w = float(weight)
        if not np.isfinite(w):
            raise ValidationError(f"non-finite weight on edge ({i},{j})")
        self._adj[i][j] = w
        self._adj[j][i] = w

    def has_edge(self, i, j):
        return j in self._adj[i]

    def weight(self, i, j):
        return self._adj[i][j]

    def neighbors(self, i):
        """Mapping neighbor -> weight for node i (do not mutate)."""
        return self._adj[i]

    def degree(self, i):
        return len(self._adj[i])

    @property
    def num_edges(self):
        return sum(len(nbrs) for nbrs in self._adj) // 2

    def edges(self):
        """Yield (i, j, weight) with i < j, in sorted order."""
        for i in range(self.num_nodes):
            for j in sorted(self._adj[i]):
                if i < j:
                    yield i, j, self._adj[i][j]

    def copy(self):
        g = MentionGraph(self.num_nodes)
        for i, j, w in self.edges():
            g.add_edge(i, j, w)
        return g


@dataclass
class GraphConfig:
    method: str = "knn"  # "knn" or "surface_form"
    k: int = 5
    multiplier: float = 1.0
    threshold: float | None = None


def _similarity_matrix(embeddings):
    unit = embeddings.unit()
    return unit @ unit.T


def build_knn(embeddings, k):
    """Link every mention to its k nearest mentions by cosine distance.

    The union over directions is kept, so degrees may exceed k. Ties at equal
    distance break toward the lower mention id.
    """
    n = len(embeddings)
    if not (1 <= k <= n - 1):
        raise ConfigError(f"k={k} out of range for {n} mentions")
    sims = _similarity_matrix(embeddings)
    graph = MentionGraph(n)
    for i in range(n):
        order = np.argsort(-sims[i], kind="stable")
        taken = 0
        for j in order:
            j = int(j)
            if j == i:
                continue
            graph.add_edge(i, j, sims[i, j])
            taken += 1
            if taken == k:
                break
    return graph


def _surface_radii(sims, corpus):
    """Per-mention radius: cosine distance to the furthest identical mention.

    Mentions whose surface occurs once take the mean per-mention radius over
    surface forms of frequency two; failing that, over all forms of frequency
    >= 2; if no surface repeats at all there is nothing to estimate from.
    """
    n = len(corpus.mentions)
    by_surface = {}
    for m in corpus.mentions:
        by_surface.setdefault(m.surface, []).append(m.mention_id)

    radii = np.full(n, -1.0)
    freq2 = []
    freq_many = []
    for ids in by_surface.values():
        if len(ids) < 2:
            continue
        idx = np.asarray(ids)
        for i in idx:
            others = idx[idx != i]
            r = float(np.max(1.0 - sims[i, others]))
            radii[i] = r
            freq_many.append(r)
            if len(ids) == 2:
                freq2.append(r)

    singles = radii < 0
    if singles.any():
        if freq2:
            fallback = float(np.mean(freq2))
        elif freq_many:
            fallback = float(np.mean(freq_many))
        else:
            raise ValidationError(
                "cannot estimate a radius for frequency-1 surface forms: "
                "no surface form occurs more than once"
            )
        radii[singles] = fallback
    return radii


def build_surface_form(embeddings, corpus, m=1.0):
    """Link mention i to every mention within m times its surface-form radius.

    The boundary is inclusive, so with m=1 a mention always links to all
    mentions sharing its surface form.
    """
    if m <= 0:
        raise ConfigError(f"multiplier must be positive, got {m}")
    n = len(embeddings)
    if n != len(corpus.mentions):
        raise ValidationError(
            f"embeddings cover {n} mentions, corpus has {len(corpus.mentions)}"
        )
    sims = _similarity_matrix(embeddings)
    radii = _surface_radii(sims, corpus)
    graph = MentionGraph(n)
    dist = 1.0 - sims
    for i in range(n):
        within = np.flatnonzero(dist[i] <= m * radii[i])
        for j in within:
            j = int(j)
            if j != i:
                graph.add_edge(i, j, sims[i, j])
    return graph


def threshold_edges(graph, threshold):
    """Keep exactly the edges with weight >= threshold; nodes are unchanged."""
    out = MentionGraph(graph.num_nodes)
    for i, j, w in graph.edges():
        if w >= threshold:
            out.add_edge(i, j, w)
    return out


def build_gold_links(corpus, embeddings):
    """Graph holding one edge per coreferent mention pair (gold annotation).

    Useful to guarantee that every true antecedent is reachable, e.g. for
    diagnostic upper-bound runs.
    """
    graph = MentionGraph(len(embeddings))
    unit = embeddings.unit()
    for ids in corpus.identity_index.values():
        for a_pos in range(len(ids)):
            for b_pos in range(a_pos + 1, len(ids)):
                i, j = ids[a_pos], ids[b_pos]
                graph.add_edge(i, j, float(unit[i] @ unit[j]))
    return graph


def union_graphs(a, b):
    """Edge union of two graphs over the same node set."""
    if a.num_nodes != b.num_nodes:
        raise ValidationError("graphs have different node counts")
    out = a.copy()
    for i, j, w in b.edges():
        out.add_edge(i, j, w)
    return out


def build_graph(embeddings, corpus, config):
    """Build a network per GraphConfig, applying its threshold if set."""
    if config.method == "knn":
        graph = build_knn(embeddings, config.k)
    elif config.method == "surface_form":
        graph = build_surface_form(embeddings, corpus, config.multiplier)
    else:
        raise ConfigError(f"unknown graph method {config.method!r}")
    if config.threshold is not None:
        graph = threshold_edges(graph, config.threshold)
    return graph


def save_graph(graph, path):
    """Edge-list text export: header line `nodes=N`, then `i<TAB>j<TAB>weight`."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"nodes={graph.num_nodes}\n")
        for i, j, w in graph.edges():
            fh.write(f"{i}\t{j}\t{w:.9g}\n")


def load_graph(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("nodes="):
            raise FormatError(f"{path}: missing nodes= header")
        try:
            n = int(header.split("=", 1)[1])
        except ValueError as exc:
            raise FormatError(f"{path}: bad node count in header") from exc
        graph = MentionGraph(n)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise FormatError(f"{path}: line {lineno}: expected i, j, weight")
            try:
                graph.add_edge(int(parts[0]), int(parts[1]), float(parts[2]))
            except (ValueError, ValidationError) as exc:
                raise FormatError(f"{path}: line {lineno}: {exc}") from exc
    return graph
