"""Corpus data model: documents of ordered name mentions, JSONL I/O, splits,
frequency statistics, and a synthetic corpus generator for testing.

A corpus is totally ordered: documents sort by (order_key, doc_id) and mention
ids are assigned densely in that order, so "earlier" always means a smaller
mention_id.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FormatError, GenerationError, ValidationError


@dataclass(frozen=True)
class Mention:
    """A single occurrence of a name. gold_identity is None when the mention
    is ambiguous (unannotated)."""

    mention_id: int
    doc_id: int
    position_in_doc: int
    surface: str
    gold_identity: str | None = None


@dataclass
class Document:
    doc_id: int
    order_key: tuple[int, str]
    metadata: dict[str, str]
    mentions: list[Mention]


class Corpus:
    """Ordered collection of documents with densely numbered mentions.

    Construct from raw document specs: ``(doc_id, order_key, metadata,
    [(surface, gold_or_None), ...])``. Documents are sorted by
    ``(order_key, doc_id)``; identical order keys are rejected so the
    ordering is never left to chance.
    """

    def __init__(self, document_specs, source_ids=None):
        seen_doc_ids = set()
        seen_keys = set()
        specs = []
        for doc_id, order_key, metadata, mention_specs in document_specs:
            if doc_id in seen_doc_ids:
                raise ValidationError(f"duplicate doc_id {doc_id}")
            seen_doc_ids.add(doc_id)
            key = (int(order_key[0]), str(order_key[1]))
            if key in seen_keys:
                raise ValidationError(f"duplicate order key {key!r}")
            seen_keys.add(key)
            specs.append((key, int(doc_id), dict(metadata), list(mention_specs)))
        specs.sort(key=lambda s: (s[0], s[1]))

        self.documents: list[Document] = []
        self.mentions: list[Mention] = []
        self.identity_index: dict[str, list[int]] = {}
        next_id = 0
        for key, doc_id, metadata, mention_specs in specs:
            doc_mentions = []
            for pos, (surface, gold) in enumerate(mention_specs):
                if not surface:
                    raise ValidationError(
                        f"doc {doc_id} position {pos}: empty surface form"
                    )
                m = Mention(next_id, doc_id, pos, surface, gold)
                doc_mentions.append(m)
                self.mentions.append(m)
                if gold is not None:
                    self.identity_index.setdefault(gold, []).append(next_id)
                next_id += 1
            self.documents.append(Document(doc_id, key, metadata, doc_mentions))
        self.source_ids = None if source_ids is None else np.asarray(source_ids)

    @property
    def num_mentions(self):
        return len(self.mentions)

    @property
    def num_documents(self):
        return len(self.documents)

    def document_of(self, mention_id):
        return self.mentions[mention_id].doc_id

    def surfaces(self):
        return [m.surface for m in self.mentions]

    def gold_labels(self):
        return [m.gold_identity for m in self.mentions]

    def doc_ids(self):
        return [d.doc_id for d in self.documents]

    def to_specs(self):
        """Raw document specs, usable to rebuild an equivalent corpus."""
        return [
            (
                d.doc_id,
                d.order_key,
                dict(d.metadata),
                [(m.surface, m.gold_identity) for m in d.mentions],
            )
            for d in self.documents
        ]


@dataclass
class SplitSpec:
    fractions: tuple[float, float, float] = (0.6, 0.2, 0.2)
    seed: int = 0


@dataclass
class SynthConfig:
    """Parameters of the synthetic corpus generator.

    homograph_rate controls how often a surface form is shared between two
    individuals; synonym_rate how often an individual carries an alternate
    surface form. Mention vectors are an individual's unit-norm center plus
    isotropic Gaussian noise, renormalized.
    """

    num_individuals: int = 20
    dim: int = 8
    docs: int = 100
    mentions_per_doc: tuple[int, int] = (2, 4)
    homograph_rate: float = 0.0
    synonym_rate: float = 0.0
    center_separation: float = 0.5
    noise_sigma: float = 0.05
    seed: int = 0


def load_corpus(path):
    """Read a JSONL corpus: one document object per line.

    Expected line shape: ``{"doc_id": int, "order": [int, str],
    "metadata": {str: str}, "mentions": [{"surface": str, "gold": str|null}]}``.
    Mentions are numbered by their array position.
    """
    specs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            try:
                doc_id = int(obj["doc_id"])
                order = obj["order"]
                order_key = (int(order[0]), str(order[1]))
                metadata = obj.get("metadata") or {}
                mention_specs = [
                    (m["surface"], m.get("gold")) for m in obj["mentions"]
                ]
            except (KeyError, TypeError, IndexError, ValueError) as exc:
                raise FormatError(
                    f"{path}: line {lineno}: malformed document object: {exc}"
                ) from exc
            specs.append((doc_id, order_key, metadata, mention_specs))
    return Corpus(specs)


def save_corpus(corpus, path):
    """Write a corpus back to JSONL, one document per line in corpus order."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in corpus.documents:
            obj = {
                "doc_id": d.doc_id,
                "order": [d.order_key[0], d.order_key[1]],
                "metadata": d.metadata,
                "mentions": [
                    {"surface": m.surface, "gold": m.gold_identity} for m in d.mentions
                ],
            }
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")


def _largest_remainder_counts(n, fractions):
    quotas = [f * n for f in fractions]
    counts = [math.floor(q) for q in quotas]
    leftover = n - sum(counts)
    remainders = [q - c for q, c in zip(quotas, counts)]
    # ties on the remainder go to the later part
    order = sorted(range(len(fractions)), key=lambda i: (-remainders[i], -i))
    for i in order[:leftover]:
        counts[i] += 1
    return counts


def split(corpus, spec):
    """Document-level train/dev/test partition, deterministic given the seed.

    Part sizes follow the largest-remainder rounding of the requested
    fractions. Each part is a fresh corpus with re-densified mention ids;
    ``part.source_ids[new_id]`` maps back to the mention id in ``corpus``.
    """
    fractions = spec.fractions
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ConfigError(f"need three nonnegative fractions, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"fractions must sum to 1, got {sum(fractions)!r}")

    n = corpus.num_documents
    counts = _largest_remainder_counts(n, fractions)
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(n)
    bounds = (counts[0], counts[0] + counts[1])
    groups = (
        sorted(perm[: bounds[0]]),
        sorted(perm[bounds[0] : bounds[1]]),
        sorted(perm[bounds[1] :]),
    )

    specs = corpus.to_specs()
    parts = []
    for doc_indices in groups:
        part_specs = [specs[i] for i in doc_indices]
        source = [
            m.mention_id for i in doc_indices for m in corpus.documents[i].mentions
        ]
        parts.append(Corpus(part_specs, source_ids=source))
    return tuple(parts)


def frequency_histogram(corpus):
    """Map mention-frequency -> number of gold identities with that frequency.

    Ambiguous mentions carry no identity and are not counted.
    """
    hist = {}
    for ids in corpus.identity_index.values():
        hist[len(ids)] = hist.get(len(ids), 0) + 1
    return hist


def _sample_centers(rng, num, dim, separation, max_attempts=20000):
    centers = []
    attempts = 0
    while len(centers) < num:
        if attempts >= max_attempts:
            raise GenerationError(
                f"could not place {num} centers at separation {separation} "
                f"after {max_attempts} attempts"
            )
        attempts += 1
        c = rng.normal(size=dim)
        c /= np.linalg.norm(c)
        if all(np.linalg.norm(c - other) >= separation for other in centers):
            centers.append(c)
    return np.asarray(centers)


def _assign_surfaces(rng, config):
    surfaces = []
    for i in range(config.num_individuals):
        pool = [f"name{i:04d}"]
        if rng.random() < config.synonym_rate:
            pool.append(f"name{i:04d}b")
        surfaces.append(pool)
    if config.num_individuals >= 2:
        for i in range(config.num_individuals):
            if rng.random() < config.homograph_rate:
                j = int(rng.integers(config.num_individuals - 1))
                if j >= i:
                    j += 1
                shared = f"shared{min(i, j):04d}_{max(i, j):04d}"
                if shared not in surfaces[i]:
                    surfaces[i].append(shared)
                if shared not in surfaces[j]:
                    surfaces[j].append(shared)
    return surfaces


def generate_synthetic(config):
    """Generate a fully annotated corpus plus matching mention vectors.

    Individuals get unit-norm centers rejection-sampled to pairwise Euclidean
    distance >= center_separation. Every document samples distinct
    individuals, so an identity never occurs twice in one document (as in
    author lists). Deterministic for a fixed seed.

    Returns (Corpus, EmbeddingMatrix).
    """
    from .embeddings import EmbeddingMatrix

    if not (0.0 <= config.homograph_rate <= 1.0 and 0.0 <= config.synonym_rate <= 1.0):
        raise ConfigError("rates must lie in [0, 1]")
    if config.dim < 2:
        raise ConfigError("dim must be >= 2")
    if config.center_separation <= 0:
        raise ConfigError("center_separation must be > 0")
    lo, hi = config.mentions_per_doc
    if not (1 <= lo <= hi):
        raise ConfigError(f"bad mentions_per_doc range {config.mentions_per_doc}")
    if hi > config.num_individuals:
        raise ConfigError(
            "mentions_per_doc upper bound exceeds num_individuals "
            "(documents sample distinct individuals)"
        )

    rng = np.random.default_rng(config.seed)
    centers = _sample_centers(
        rng, config.num_individuals, config.dim, config.center_separation
    )
    surfaces = _assign_surfaces(rng, config)

    doc_specs = []
    vectors = []
    for d in range(config.docs):
        count = int(rng.integers(lo, hi + 1))
        individuals = rng.choice(config.num_individuals, size=count, replace=False)
        mention_specs = []
        for ind in individuals:
            surface = surfaces[ind][int(rng.integers(len(surfaces[ind])))]
            vec = centers[ind] + rng.normal(0.0, config.noise_sigma, size=config.dim)
            vec = vec / np.linalg.norm(vec)
            vectors.append(vec)
            mention_specs.append((surface, f"person{ind:04d}"))
        doc_specs.append((d, (d, f"doc{d:06d}"), {}, mention_specs))

    corpus = Corpus(doc_specs)
    matrix = EmbeddingMatrix(np.asarray(vectors))
    return corpus, matrix
