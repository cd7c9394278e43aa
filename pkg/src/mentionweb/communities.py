"""Unsupervised cluster inference on mention networks.

Both algorithms optimize (or approximate optimizing) weighted modularity,

    Q = sum_c [ W_in(c)/W  -  resolution * (K_c / 2W)^2 ]

where W_in(c) is the edge weight inside community c, K_c the summed weighted
degrees of its members, and W the total edge weight. Negative edge weights
(possible with cosine similarities) are clamped to zero before any community
computation; modularity with negative weights is not well defined.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, UndefinedModularityError, ValidationError

_GAIN_TOL = 1e-12


@dataclass
class Partition:
    """Community labels, one per node, densely numbered 0..C-1."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels, dtype=np.intp)
        if arr.ndim != 1:
            raise ValidationError("labels must be a flat array")
        if arr.size:
            uniq = np.unique(arr)
            if uniq[0] != 0 or uniq[-1] != uniq.size - 1:
                raise ValidationError("labels must be dense integers starting at 0")
        self.labels = arr

    @classmethod
    def from_labels(cls, labels):
        """Build a Partition from arbitrary labels, renumbering densely in
        order of first occurrence."""
        arr = np.asarray(labels)
        mapping = {}
        dense = np.empty(arr.size, dtype=np.intp)
        for i, lab in enumerate(arr):
            key = lab.item() if hasattr(lab, "item") else lab
            if key not in mapping:
                mapping[key] = len(mapping)
            dense[i] = mapping[key]
        return cls(dense)

    @property
    def num_nodes(self):
        return self.labels.size

    @property
    def num_communities(self):
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def communities(self):
        groups = [[] for _ in range(self.num_communities)]
        for node, lab in enumerate(self.labels):
            groups[lab].append(node)
        return groups


@dataclass
class CommunityConfig:
    algorithm: str = "leiden"  # "leiden" or "label_propagation"
    resolution: float = 1.0
    seed: int = 0
    max_iterations: int = 100
    weighted_votes: bool = True

    def __post_init__(self):
        if self.resolution <= 0:
            raise ConfigError(f"resolution must be positive, got {self.resolution}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")


def _clamped_adjacency(graph):
    """Adjacency dicts with negative weights clamped away entirely."""
    adj = [dict() for _ in range(graph.num_nodes)]
    total = 0.0
    for i, j, w in graph.edges():
        if w > 0.0:
            adj[i][j] = w
            adj[j][i] = w
            total += w
    return adj, total


def modularity(graph, partition, resolution=1.0):
    """Weighted modularity of a partition (see module docstring)."""
    if partition.num_nodes != graph.num_nodes:
        raise ValidationError("partition size does not match graph")
    adj, total = _clamped_adjacency(graph)
    if total <= 0.0:
        raise UndefinedModularityError("graph has no positive edge weight")
    labels = partition.labels
    ncomm = partition.num_communities
    win = np.zeros(ncomm)
    ktot = np.zeros(ncomm)
    for i in range(graph.num_nodes):
        ki = sum(adj[i].values())
        ktot[labels[i]] += ki
        for j, w in adj[i].items():
            if i < j and labels[i] == labels[j]:
                win[labels[i]] += w
    two_w = 2.0 * total
    return float(np.sum(win / total - resolution * (ktot / two_w) ** 2))


def label_propagation(graph, config):
    """Asynchronous weighted label propagation.

    Every node starts with its own label; sweeps in seeded random order let
    each node adopt the label carrying the most incident edge weight among
    its neighbors (ties uniform at random). Stops after a sweep with no
    change, or after max_iterations sweeps.
    """
    n = graph.num_nodes
    if n == 0:
        raise ValidationError("empty graph")
    adj, _ = _clamped_adjacency(graph)
    rng = np.random.default_rng(config.seed)
    labels = np.arange(n, dtype=np.intp)

    for _ in range(config.max_iterations):
        order = rng.permutation(n)
        changes = 0
        for v in order:
            nbrs = adj[v]
            if not nbrs:
                continue
            score = {}
            for nb, w in nbrs.items():
                lab = labels[nb]
                score[lab] = score.get(lab, 0.0) + (w if config.weighted_votes else 1.0)
            best = max(score.values())
            if score.get(labels[v]) == best:
                continue
            candidates = sorted(lab for lab, s in score.items() if s == best)
            labels[v] = candidates[int(rng.integers(len(candidates)))]
            changes += 1
        if changes == 0:
            break
    return Partition.from_labels(labels)


class _Level:
    """One aggregation level of the Leiden hierarchy: a weighted graph whose
    nodes may carry self-weight (edge weight internal to the supernode)."""

    def __init__(self, adj, self_weight, strength, total):
        self.adj = adj
        self.self_weight = self_weight
        self.strength = strength
        self.total = total  # total edge weight incl. self weights, invariant across levels

    @classmethod
    def from_graph(cls, graph):
        adj, total = _clamped_adjacency(graph)
        strength = np.asarray([sum(nbrs.values()) for nbrs in adj])
        return cls(adj, np.zeros(graph.num_nodes), strength, total)

    @property
    def num_nodes(self):
        return len(self.adj)


def _quality(level, comm, resolution):
    ncomm = int(comm.max()) + 1
    win = np.zeros(ncomm)
    ktot = np.zeros(ncomm)
    for v in range(level.num_nodes):
        win[comm[v]] += level.self_weight[v]
        ktot[comm[v]] += level.strength[v]
        for nb, w in level.adj[v].items():
            if v < nb and comm[v] == comm[nb]:
                win[comm[v]] += w
    two_w = 2.0 * level.total
    return float(np.sum(win / level.total - resolution * (ktot / two_w) ** 2))


def _move_nodes(level, comm, resolution, rng):
    """Queue-based local moving: each node greedily joins the neighboring
    community with the best modularity gain until no node wants to move."""
    two_w = 2.0 * level.total
    tot = {}
    for v in range(level.num_nodes):
        tot[comm[v]] = tot.get(comm[v], 0.0) + level.strength[v]
    next_comm = max(tot) + 1 if tot else 0

    order = rng.permutation(level.num_nodes)
    queue = deque(order)
    queued = np.ones(level.num_nodes, dtype=bool)
    while queue:
        v = int(queue.popleft())
        queued[v] = False
        c_old = comm[v]
        wsum = {}
        for nb, w in level.adj[v].items():
            c = comm[nb]
            wsum[c] = wsum.get(c, 0.0) + w
        tot[c_old] -= level.strength[v]

        best_c = c_old
        best_gain = wsum.get(c_old, 0.0) - resolution * level.strength[v] * tot[c_old] / two_w
        if 0.0 > best_gain + _GAIN_TOL:
            best_c = -1  # fresh singleton community
            best_gain = 0.0
        for c in sorted(wsum):
            if c == c_old:
                continue
            gain = wsum[c] - resolution * level.strength[v] * tot[c] / two_w
            if gain > best_gain + _GAIN_TOL:
                best_c = c
                best_gain = gain

        if best_c == -1:
            best_c = next_comm
            next_comm += 1
        tot[best_c] = tot.get(best_c, 0.0) + level.strength[v]
        comm[v] = best_c
        if best_c != c_old:
            for nb in level.adj[v]:
                if comm[nb] != best_c and not queued[nb]:
                    queue.append(nb)
                    queued[nb] = True
    return comm


def _refine(level, comm, resolution, rng):
    """Split each community into connected subcommunities.

    Starts from singletons and only merges a still-isolated node into a
    refined community inside its own community that it is connected to and
    that yields a positive modularity gain; every refined community is
    therefore internally connected.
    """
    two_w = 2.0 * level.total
    ref = np.arange(level.num_nodes, dtype=np.intp)
    ref_tot = level.strength.astype(np.float64).copy()
    ref_size = np.ones(level.num_nodes, dtype=np.intp)

    for v in rng.permutation(level.num_nodes):
        v = int(v)
        if ref_size[ref[v]] > 1:
            continue
        wsum = {}
        for nb, w in level.adj[v].items():
            if comm[nb] == comm[v]:
                rc = ref[nb]
                wsum[rc] = wsum.get(rc, 0.0) + w
        best = ref[v]
        best_gain = 0.0
        for rc in sorted(wsum):
            if rc == ref[v]:
                continue
            gain = wsum[rc] - resolution * level.strength[v] * ref_tot[rc] / two_w
            if gain > best_gain + _GAIN_TOL:
                best = rc
                best_gain = gain
        if best != ref[v]:
            ref_tot[best] += level.strength[v]
            ref_size[best] += 1
            ref_tot[ref[v]] = 0.0
            ref_size[ref[v]] = 0
            ref[v] = best
    return ref


def _aggregate(level, ref, comm):
    """Collapse refined communities into supernodes; the coarse partition is
    induced on the aggregate (all members of a refined community share one
    coarse community)."""
    groups = {}
    for v in range(level.num_nodes):
        groups.setdefault(int(ref[v]), []).append(v)
    ordered = sorted(groups.values(), key=lambda members: members[0])
    dense = np.empty(level.num_nodes, dtype=np.intp)
    for new_id, members in enumerate(ordered):
        for v in members:
            dense[v] = new_id

    n_new = len(ordered)
    adj = [dict() for _ in range(n_new)]
    self_w = np.zeros(n_new)
    strength = np.zeros(n_new)
    new_comm = np.empty(n_new, dtype=np.intp)
    for new_id, members in enumerate(ordered):
        new_comm[new_id] = comm[members[0]]
        for v in members:
            self_w[new_id] += level.self_weight[v]
            strength[new_id] += level.strength[v]
            for nb, w in level.adj[v].items():
                if dense[nb] == new_id:
                    if v < nb:
                        self_w[new_id] += w
                else:
                    key = int(dense[nb])
                    adj[new_id][key] = adj[new_id].get(key, 0.0) + w
    new_level = _Level(adj, self_w, strength, level.total)
    return new_level, new_comm, dense


def _split_disconnected(graph, labels):
    """Replace each community by its connected components (w.r.t. positive
    edges). Splitting a disconnected community never lowers modularity."""
    adj, _ = _clamped_adjacency(graph)
    out = np.full(graph.num_nodes, -1, dtype=np.intp)
    next_lab = 0
    for v in range(graph.num_nodes):
        if out[v] != -1:
            continue
        stack = [v]
        out[v] = next_lab
        while stack:
            u = stack.pop()
            for nb in adj[u]:
                if out[nb] == -1 and labels[nb] == labels[v]:
                    out[nb] = next_lab
                    stack.append(nb)
        next_lab += 1
    return out


def leiden(graph, config, quality_trace=None):
    """Leiden community detection: local moving, refinement, aggregation,
    repeated until modularity stops improving.

    Deterministic given (graph, seed). Every returned community induces a
    connected subgraph. If quality_trace is a list, the modularity after each
    outer iteration is appended to it.
    """
    if graph.num_nodes == 0:
        raise ValidationError("empty graph")
    level = _Level.from_graph(graph)
    if level.total <= 0.0:
        raise UndefinedModularityError("graph has no positive edge weight")
    rng = np.random.default_rng(config.seed)
    resolution = config.resolution

    node_map = np.arange(graph.num_nodes, dtype=np.intp)
    comm = np.arange(level.num_nodes, dtype=np.intp)
    prev_q = None
    while True:
        comm = _move_nodes(level, comm, resolution, rng)
        q = _quality(level, comm, resolution)
        if quality_trace is not None:
            quality_trace.append(q)
        if prev_q is not None and q - prev_q <= _GAIN_TOL:
            break
        prev_q = q
        if np.unique(comm).size == level.num_nodes:
            break  # all singletons: nothing to aggregate
        ref = _refine(level, comm, resolution, rng)
        level, comm, dense = _aggregate(level, ref, comm)
        node_map = dense[node_map]

    labels = comm[node_map]
    labels = _split_disconnected(graph, labels)
    return Partition.from_labels(labels)


def detect_communities(graph, config):
    if config.algorithm == "leiden":
        return leiden(graph, config)
    if config.algorithm == "label_propagation":
        return label_propagation(graph, config)
    raise ConfigError(f"unknown community algorithm {config.algorithm!r}")


def save_partition(partition, path):
    """Text export, one `node<TAB>community` line per node."""
    with open(path, "w", encoding="utf-8") as fh:
        for node, lab in enumerate(partition.labels):
            fh.write(f"{node}\t{int(lab)}\n")


def load_partition(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"{path}: line {lineno}: expected node, community")
            pairs.append((int(parts[0]), int(parts[1])))
    pairs.sort()
    if [node for node, _ in pairs] != list(range(len(pairs))):
        raise FormatError(f"{path}: node ids are not dense 0..{len(pairs) - 1}")
    return Partition.from_labels([lab for _, lab in pairs])
